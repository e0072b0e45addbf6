"""Iterate container shared by every scheme."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Optional

import numpy as np


@dataclass(frozen=True, eq=False)
class SchemeState:
    """Iterate pair ``(x, y)`` plus per-scheme extras.

    ``gamma`` and ``epsilon`` are used by the scaled and perturbed schemes.
    ``prev_gradient`` and ``x_prev`` carry the history of the triple-term
    method; ``x_tilde`` is the last predictor of the EPC-type schemes.
    """

    x: np.ndarray
    y: Optional[np.ndarray] = None
    gamma: float = 0.0
    epsilon: float = 0.0
    prev_gradient: Optional[np.ndarray] = None
    x_prev: Optional[np.ndarray] = None
    x_tilde: Optional[np.ndarray] = None
    iteration: int = 0

    def advance(self, **changes) -> "SchemeState":
        changes.setdefault("iteration", self.iteration + 1)
        return dataclasses.replace(self, **changes)

    def is_finite(self) -> bool:
        vecs = [self.x] + ([self.y] if self.y is not None else [])
        return all(np.all(np.isfinite(v)) for v in vecs) and np.isfinite(self.gamma) \
            and np.isfinite(self.epsilon)


def initial_state(x0, y0=None, gamma: float = 0.0, epsilon: float = 0.0) -> SchemeState:
    x0 = np.array(x0, dtype=float)
    y0 = x0.copy() if y0 is None else np.array(y0, dtype=float)
    return SchemeState(x=x0, y=y0, gamma=float(gamma), epsilon=float(epsilon))
