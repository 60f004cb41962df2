import numpy as np
from hypothesis import given, settings, strategies as st
from scipy.optimize import linprog

from qmetro.simplex import phase_one


def _feasible_by_scipy(A, b, ub):
    res = linprog(np.zeros(A.shape[1]), A_eq=A, b_eq=b, bounds=[(0, u) for u in ub], method="highs")
    return res.status == 0


@given(st.integers(0, 10_000), st.integers(1, 5), st.integers(2, 12))
@settings(max_examples=150, deadline=None)
def test_phase_one_matches_linprog(seed, p, m):
    rng = np.random.default_rng(seed)
    A = rng.normal(size=(p, m))
    if rng.random() < 0.5:
        # feasible by construction
        b = A @ rng.uniform(0, 1, size=m)
    else:
        b = rng.normal(size=p) * 3
    ub = np.ones(m)
    x = phase_one(A, b, ub, tol=1e-10)
    expected = _feasible_by_scipy(A, b, ub)
    assert (x is not None) == expected
    if x is not None:
        np.testing.assert_allclose(A @ x, b, atol=1e-8)
        assert np.all(x >= -1e-12) and np.all(x <= 1 + 1e-12)


def test_unbounded_above():
    x = phase_one(np.array([[1.0, -1.0]]), np.array([5.0]))
    assert x is not None and abs(x[0] - x[1] - 5) < 1e-12


def test_infeasible_simple():
    assert phase_one(np.array([[1.0, 1.0]]), np.array([3.0]), upper=np.ones(2)) is None
    assert phase_one(np.array([[1.0]]), np.array([-1.0])) is None


def test_degenerate_rows():
    # duplicated constraint and a zero right-hand side
    A = np.array([[1.0, 1.0, 1.0], [1.0, 1.0, 1.0], [1.0, -1.0, 0.0]])
    b = np.array([2.0, 2.0, 0.0])
    x = phase_one(A, b, np.ones(3))
    np.testing.assert_allclose(A @ x, b, atol=1e-12)
