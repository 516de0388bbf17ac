from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dirand.lp import LinearProgram, lp_solve

scipy_optimize = pytest.importorskip("scipy.optimize")


def test_textbook_maximum():
    # max 3x + 5y s.t. x <= 4, 2y <= 12, 3x + 2y <= 18: optimum 36 at (2, 6).
    lp = LinearProgram(
        c=np.array([3.0, 5.0]),
        A_ub=np.array([[1.0, 0.0], [0.0, 2.0], [3.0, 2.0]]),
        b_ub=np.array([4.0, 12.0, 18.0]),
        maximize=True,
    )
    res = lp_solve(lp)
    assert res.status == "optimal"
    assert res.value == pytest.approx(36.0)
    np.testing.assert_allclose(res.x, [2.0, 6.0], atol=1e-9)


def test_infeasible_gives_farkas_certificate():
    # x + y = 1 and x + 2y = -1 have no non-negative solution.
    A_eq = np.array([[1.0, 1.0], [1.0, 2.0]])
    b_eq = np.array([1.0, -1.0])
    res = lp_solve(LinearProgram(c=np.zeros(2), A_eq=A_eq, b_eq=b_eq))
    assert res.status == "infeasible"
    y = res.eq_duals
    assert np.all(A_eq.T @ y >= -1e-9)
    assert b_eq @ y < 0


def test_inconsistent_equalities():
    A_eq = np.array([[1.0, 1.0], [1.0, 1.0]])
    res = lp_solve(LinearProgram(c=np.zeros(2), A_eq=A_eq, b_eq=np.array([1.0, 2.0])))
    assert res.status == "infeasible"


def test_unbounded():
    res = lp_solve(LinearProgram(c=np.array([1.0, 1.0]), A_ub=np.array([[1.0, -1.0]]), b_ub=np.array([1.0]), maximize=True))
    assert res.status == "unbounded"


def test_free_variables_and_bounds():
    # min x subject to x >= -3 (as a bound) and x + y = 1 with y in [0, 10].
    lp = LinearProgram(c=np.array([1.0, 0.0]), A_eq=np.array([[1.0, 1.0]]), b_eq=np.array([1.0]), bounds=[(-3, None), (0, 10)])
    res = lp_solve(lp)
    assert res.value == pytest.approx(-3.0)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 6), st.integers(1, 6))
def test_matches_scipy_on_random_bounded_programs(seed, n, m):
    rng = np.random.default_rng(seed)
    A = rng.uniform(0, 1, size=(m, n))
    b = rng.uniform(1, 2, size=m)
    c = rng.normal(size=n)
    box = [(0, 5)] * n
    ours = lp_solve(LinearProgram(c=c, A_ub=A, b_ub=b, bounds=box, maximize=True))
    ref = scipy_optimize.linprog(-c, A_ub=A, b_ub=b, bounds=box, method="highs")
    assert ours.status == "optimal" and ref.status == 0
    assert ours.value == pytest.approx(-ref.fun, abs=1e-8)
