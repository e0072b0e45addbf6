"""Skew-symmetric splittings and the linear solves used by the implicit schemes.

Matrices are dense. Norms are computed exactly with ``np.linalg.norm(., 2)``;
:func:`vosopt.core.power_iteration` is kept as an independent estimate.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_factor, cho_solve, lu_factor, lu_solve, solve_triangular

from .core import as_vector
from .errors import InputError, ParameterError

SKEW_TOL = 1e-12


class _FactorCache:
    """Small thread-safe cache; a racing first access just recomputes."""

    def __init__(self):
        self._lock = threading.Lock()
        self._data = {}

    def get(self, key, build):
        with self._lock:
            hit = self._data.get(key)
        if hit is not None:
            return hit
        value = build()
        with self._lock:
            return self._data.setdefault(key, value)

    def __len__(self):
        return len(self._data)

    def clear(self):
        with self._lock:
            self._data.clear()


def _beta_key(beta: float) -> bytes:
    return np.float64(beta).tobytes()


@dataclass(frozen=True, eq=False)
class SkewDecomposition:
    """``N = B^T - B`` with ``B`` strictly lower triangular, ``B^sym = B + B^T``."""

    n_matrix: np.ndarray
    b_lower: np.ndarray
    b_sym: np.ndarray
    l_bsym: float
    n_norm: float
    _cache: _FactorCache = field(default_factory=_FactorCache, repr=False, compare=False)

    @property
    def dim(self) -> int:
        return self.n_matrix.shape[0]

    def apply(self, y):
        return self.n_matrix @ y


@dataclass(frozen=True, eq=False)
class SaddleCoupling:
    """Bilinear coupling ``(B u, p)``; ``b_matrix`` has shape ``(dim_p, dim_u)``."""

    b_matrix: np.ndarray
    mu_f: float
    mu_g: float
    b_norm: float
    _cache: _FactorCache = field(default_factory=_FactorCache, repr=False, compare=False)

    @property
    def dim_u(self) -> int:
        return self.b_matrix.shape[1]

    @property
    def dim_p(self) -> int:
        return self.b_matrix.shape[0]


def make_coupling(b_matrix, mu_f: float, mu_g: float) -> SaddleCoupling:
    B = np.array(b_matrix, dtype=float)
    if B.ndim != 2:
        raise InputError("coupling must be a matrix")
    if not np.all(np.isfinite(B)):
        raise InputError("coupling has non-finite entries")
    if mu_f <= 0 or mu_g <= 0:
        raise ParameterError("mu_f and mu_g must be positive")
    nrm = float(np.linalg.norm(B, 2)) if B.size else 0.0
    return SaddleCoupling(B, float(mu_f), float(mu_g), nrm)


def skew_split(n_matrix) -> SkewDecomposition:
    """Split a skew-symmetric matrix as ``B^T - B`` with ``B^T = upper(N)``."""
    N = np.array(n_matrix, dtype=float)
    if N.ndim != 2 or N.shape[0] != N.shape[1]:
        raise InputError(f"skew matrix must be square, got shape {N.shape}")
    if not np.all(np.isfinite(N)):
        raise InputError("skew matrix has non-finite entries")
    asym = float(np.max(np.abs(N + N.T))) if N.size else 0.0
    if asym > SKEW_TOL:
        raise InputError(f"matrix is not skew-symmetric: max |N + N^T| = {asym:.3e}")
    upper = np.triu(N, 1)
    B = upper.T.copy()
    bsym = B + B.T
    l_bsym = float(np.linalg.norm(bsym, 2)) if N.size else 0.0
    n_norm = float(np.linalg.norm(N, 2)) if N.size else 0.0
    return SkewDecomposition(N, B, bsym, l_bsym, n_norm)


def forward_substitution_solve(decomp: SkewDecomposition, beta: float, b,
                               scale: float = 1.0) -> np.ndarray:
    """Solve ``(beta I + scale*B) y = b`` by one forward sweep.

    ``scale`` defaults to 1; the explicit AGSS step uses ``scale=-2``.
    """
    if not beta > 0:
        raise ParameterError(f"beta must be positive, got {beta}")
    rhs = as_vector(b, decomp.dim, "b")
    M = scale * decomp.b_lower
    M[np.diag_indices_from(M)] = beta
    return solve_triangular(M, rhs, lower=True, check_finite=False)


def shifted_skew_solve(decomp: SkewDecomposition, beta: float, b,
                       cache: bool = True) -> np.ndarray:
    """Solve ``(beta I + N) y = b``; the LU factors are cached per ``beta``."""
    if not beta > 0:
        raise ParameterError(f"beta must be positive, got {beta}")
    rhs = as_vector(b, decomp.dim, "b")

    def build():
        M = decomp.n_matrix.copy()
        M[np.diag_indices_from(M)] += beta
        return lu_factor(M, check_finite=False)

    lu = decomp._cache.get(("shift", _beta_key(beta)), build) if cache else build()
    return lu_solve(lu, rhs, check_finite=False)


def saddle_block_matrix(coupling: SaddleCoupling, alpha: float) -> np.ndarray:
    """The dense block matrix of the implicit saddle step (used as an oracle)."""
    B = coupling.b_matrix
    m, n = coupling.dim_u, coupling.dim_p
    M = np.zeros((m + n, m + n))
    M[:m, :m] = (1 + alpha) * np.eye(m)
    M[:m, m:] = alpha / coupling.mu_f * B.T
    M[m:, :m] = -alpha / coupling.mu_g * B
    M[m:, m:] = (1 + alpha) * np.eye(n)
    return M


def saddle_block_solve(coupling: SaddleCoupling, alpha: float, rhs_v, rhs_q,
                       cache: bool = True):
    """Solve the 2x2 block system of the implicit saddle step.

    Eliminates whichever of ``v`` and ``q`` leaves the smaller SPD system
    ``(1+a)^2 I + a^2/(mu_f mu_g) B B^T`` (or ``B^T B``), factored once per
    ``alpha`` by Cholesky.
    """
    if not alpha > 0:
        raise ParameterError(f"alpha must be positive, got {alpha}")
    rv = as_vector(rhs_v, coupling.dim_u, "rhs_v")
    rq = as_vector(rhs_q, coupling.dim_p, "rhs_q")
    B = coupling.b_matrix
    a, mf, mg = float(alpha), coupling.mu_f, coupling.mu_g
    c = a * a / (mf * mg)
    on_q = coupling.dim_p <= coupling.dim_u

    def build():
        G = B @ B.T if on_q else B.T @ B
        S = c * G
        S[np.diag_indices_from(S)] += (1 + a) ** 2
        return cho_factor(S, lower=True, check_finite=False)

    fac = coupling._cache.get(("schur", on_q, _beta_key(a)), build) if cache else build()
    if on_q:
        q = cho_solve(fac, (1 + a) * rq + (a / mg) * (B @ rv), check_finite=False)
        v = (rv - (a / mf) * (B.T @ q)) / (1 + a)
    else:
        v = cho_solve(fac, (1 + a) * rv - (a / mf) * (B.T @ rq), check_finite=False)
        q = (rq + (a / mg) * (B @ v)) / (1 + a)
    return v, q


def random_skew(n: int, norm: float, seed: int) -> np.ndarray:
    """Seeded dense skew-symmetric matrix scaled to spectral norm `norm`."""
    rng = np.random.default_rng(seed)
    G = rng.standard_normal((n, n))
    K = G - G.T
    s = np.linalg.norm(K, 2)
    return K * (norm / s) if s > 0 and norm > 0 else np.zeros((n, n))
