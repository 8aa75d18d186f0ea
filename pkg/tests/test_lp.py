import numpy as np
from hypothesis import given, settings, strategies as st
from scipy.optimize import linprog

from stmon.lp import OPTIMAL, UNBOUNDED, feasible_point, lp_max


def _random_lp(seed, n, m):
    rng = np.random.default_rng(seed)
    A = rng.normal(size=(m, n))
    b = rng.uniform(-1.0, 3.0, m)
    c = rng.normal(size=n)
    return A, b, c


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 10**6), st.integers(1, 5), st.integers(1, 12))
def test_lp_max_agrees_with_scipy(seed, n, m):
    A, b, c = _random_lp(seed, n, m)
    ref = linprog(-c, A_ub=A, b_ub=b, bounds=[(None, None)] * n, method="highs")
    status, val, z = lp_max(c, A, b)
    if ref.status == 2:
        assert status not in (OPTIMAL, UNBOUNDED)
    elif ref.status == 3:
        assert status == UNBOUNDED
    else:
        assert status == OPTIMAL
        assert abs(val - (-ref.fun)) <= 1e-7 * max(1.0, abs(ref.fun))
        assert np.all(A @ z <= b + 1e-7)


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 10**6), st.integers(1, 4), st.integers(1, 10))
def test_feasible_point_agrees_with_scipy(seed, n, m):
    A, b, _ = _random_lp(seed, n, m)
    ref = linprog(np.zeros(n), A_ub=A, b_ub=b, bounds=[(None, None)] * n, method="highs")
    z = feasible_point(A, b)
    assert (z is not None) == (ref.status == 0)
    if z is not None:
        assert np.all(A @ z <= b + 1e-9)


def test_strict_rows_need_a_margin():
    A = np.array([[1.0], [-1.0]])
    assert feasible_point(A, np.array([1.0, -1.0])) is not None          # x = 1
    assert feasible_point(A, np.array([1.0, -1.0]), strict=[True, False]) is None
    z = feasible_point(A, np.array([2.0, -1.0]), strict=[True, True])
    assert 1.0 < z[0] < 2.0


def test_unbounded_and_empty_systems():
    assert lp_max(np.array([1.0]), np.array([[-1.0]]), np.array([0.0]))[0] == UNBOUNDED
    assert feasible_point(np.zeros((0, 3)), np.zeros(0)).shape == (3,)
