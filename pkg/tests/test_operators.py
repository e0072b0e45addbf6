import numpy as np
import pytest

from vosopt.core import power_iteration
from vosopt.errors import InputError, ParameterError
from vosopt.operators import (forward_substitution_solve, make_coupling, random_skew,
                              saddle_block_matrix, saddle_block_solve, shifted_skew_solve,
                              skew_split)

ROT = np.array([[0.0, 1.0], [-1.0, 0.0]])


def test_skew_split_rotation():
    d = skew_split(ROT)
    assert np.array_equal(d.b_lower, [[0.0, 0.0], [1.0, 0.0]])
    assert np.array_equal(d.b_sym, [[0.0, 1.0], [1.0, 0.0]])
    assert d.l_bsym == pytest.approx(1.0, abs=1e-15)


def test_skew_split_zero():
    d = skew_split(np.zeros((3, 3)))
    assert not np.any(d.b_lower)
    assert d.l_bsym == 0.0


def test_skew_split_reconstructs_random():
    N = random_skew(5, 2.0, seed=11)
    d = skew_split(N)
    assert np.max(np.abs(d.b_lower.T - d.b_lower - N)) <= 1e-14
    assert np.max(np.abs(N.T + N)) <= 1e-14
    assert np.array_equal(d.b_sym, d.b_sym.T)
    assert np.allclose(np.tril(d.b_lower), d.b_lower)
    assert not np.any(np.diag(d.b_lower))
    assert abs(power_iteration(d.b_sym, 500) - d.l_bsym) <= 0.01 * d.l_bsym


def test_skew_split_rejects_nonskew():
    with pytest.raises(InputError):
        skew_split(np.array([[0.0, 1.0], [1.0, 0.0]]))
    with pytest.raises(InputError):
        skew_split(np.zeros((2, 3)))


def test_forward_substitution_diagonal():
    y = forward_substitution_solve(skew_split(np.zeros((2, 2))), 2.0, [4.0, 6.0])
    assert np.allclose(y, [2.0, 3.0], atol=0)


def test_forward_substitution_hand_example():
    # B = [[0,0],[1,0]]: y1 = 1, y2 = (1 - 1*1)/1 = 0
    y = forward_substitution_solve(skew_split(ROT), 1.0, [1.0, 1.0])
    assert np.allclose(y, [1.0, 0.0], atol=1e-15)


@pytest.mark.parametrize("scale", [1.0, -2.0])
def test_forward_substitution_residual(scale, rng):
    d = skew_split(random_skew(5, 3.0, seed=5))
    b = rng.standard_normal(5)
    y = forward_substitution_solve(d, 4.0, b, scale=scale)
    r = 4.0 * y + scale * d.b_lower @ y - b
    assert np.linalg.norm(r) <= 1e-12 * np.linalg.norm(b)


def test_forward_substitution_rejects_nonpositive_beta():
    with pytest.raises(ParameterError):
        forward_substitution_solve(skew_split(ROT), 0.0, [1.0, 1.0])


def test_shifted_skew_solve_examples():
    assert np.allclose(shifted_skew_solve(skew_split(np.zeros((2, 2))), 3.0, [3.0, 6.0]),
                       [1.0, 2.0])
    # [[1,1],[-1,1]] y = (1,0) gives y = (1/2, 1/2)
    assert np.allclose(shifted_skew_solve(skew_split(ROT), 1.0, [1.0, 0.0]), [0.5, 0.5],
                       atol=1e-15)


def test_shifted_skew_solve_residual_and_cache(rng):
    d = skew_split(random_skew(8, 5.0, seed=2))
    b = rng.standard_normal(8)
    y = shifted_skew_solve(d, 0.7, b)
    assert np.linalg.norm(0.7 * y + d.n_matrix @ y - b) <= 1e-10 * np.linalg.norm(b)
    y2 = shifted_skew_solve(d, 0.7, b)
    assert np.array_equal(y, y2)
    assert np.allclose(shifted_skew_solve(d, 0.7, b, cache=False), y, atol=1e-14)


def test_saddle_block_decoupled():
    c = make_coupling(np.zeros((2, 3)), 1.0, 2.0)
    v, q = saddle_block_solve(c, 0.5, [1.0, 2.0, 3.0], [4.0, 5.0])
    assert np.allclose(v, np.array([1.0, 2.0, 3.0]) / 1.5)
    assert np.allclose(q, np.array([4.0, 5.0]) / 1.5)


def test_saddle_block_hand_example():
    # [[2,1],[-1,2]] (v,q) = (1,1) gives v = 1/5, q = 3/5
    v, q = saddle_block_solve(make_coupling([[1.0]], 1.0, 1.0), 1.0, [1.0], [1.0])
    assert v[0] == pytest.approx(0.2, abs=1e-15)
    assert q[0] == pytest.approx(0.6, abs=1e-15)


@pytest.mark.parametrize("shape", [(3, 4), (4, 3)])
def test_saddle_block_residual(shape, rng):
    c = make_coupling(rng.standard_normal(shape), 1.5, 0.5)
    rv, rq = rng.standard_normal(shape[1]), rng.standard_normal(shape[0])
    v, q = saddle_block_solve(c, 0.3, rv, rq)
    M = saddle_block_matrix(c, 0.3)
    rhs = np.concatenate([rv, rq])
    assert np.linalg.norm(M @ np.concatenate([v, q]) - rhs) <= 1e-10 * np.linalg.norm(rhs)


def test_make_coupling_validates():
    with pytest.raises(ParameterError):
        make_coupling([[1.0]], 0.0, 1.0)
    with pytest.raises(InputError):
        make_coupling([[np.inf]], 1.0, 1.0)


def test_random_skew_norm():
    N = random_skew(6, 4.0, seed=0)
    assert np.linalg.norm(N, 2) == pytest.approx(4.0, rel=1e-12)
    assert not np.any(random_skew(4, 0.0, seed=0))
