from __future__ import annotations

import itertools

import pytest

from dirand.bell import builtin, chsh, evaluate
from dirand.polytope import (
    GuessingQuery,
    guessing_probability_bound,
    local_membership,
    majority_of_first_three,
    ns_constraints,
    ns_optimize,
)
from dirand.quantum import behavior_from_quantum, canonical_strategy
from dirand.scenario import Scenario, is_no_signaling, mix, uniform_behavior

from .test_scenario import pr_box

scipy_optimize = pytest.importorskip("scipy.optimize")


@pytest.mark.parametrize("name, expected", [("chsh", 4.0), ("chsh_game", 1.0), ("ghz_game", 1.0), ("mermin5", 0.0), ("brandao4", 0.0)])
def test_ns_optimum(name, expected):
    res = ns_optimize(builtin(name))
    assert abs(res.value - expected) < 1e-6
    assert is_no_signaling(res.behavior, tol=1e-8)[0]
    assert res.relaxation == "no-signaling relaxation"


def test_ns_optimum_matches_scipy():
    # Independent route: scipy over the raw probability table with explicit constraints.
    expr = chsh()
    A_eq, b_eq = ns_constraints(expr.scenario)
    c = expr.weighted_coefficients().reshape(-1)
    ref = scipy_optimize.linprog(-c, A_eq=A_eq, b_eq=b_eq, bounds=[(0, 1)] * c.size, method="highs")
    assert -ref.fun == pytest.approx(ns_optimize(expr).value, abs=1e-8)


def test_chsh_minimum_is_minus_four():
    assert ns_optimize(chsh(), "min").value == pytest.approx(-4.0, abs=1e-6)


@pytest.mark.parametrize(
    "behavior, inside",
    [
        (lambda: uniform_behavior(Scenario.binary(2)), True),
        (lambda: pr_box(), False),
        (lambda: behavior_from_quantum(canonical_strategy("chsh")), False),
        (lambda: mix([pr_box(), uniform_behavior(Scenario.binary(2))], [0.6, 0.4]), False),
        (lambda: mix([pr_box(), uniform_behavior(Scenario.binary(2))], [0.5, 0.5]), True),
    ],
)
def test_local_membership(behavior, inside):
    b = behavior()
    m = local_membership(b)
    assert m.inside is inside
    if inside:
        assert m.weights.sum() == pytest.approx(1.0)
    else:
        assert m.gap > 0
        assert float(m.functional @ b.table.reshape(-1)) - m.local_max == pytest.approx(m.gap)


def test_guess_mermin_majority():
    q = GuessingQuery.function(builtin("mermin5"), 0.0, (0, 0, 0, 0, 0), majority_of_first_three, 0)
    assert abs(guessing_probability_bound(q).value - 0.75) < 1e-6


@pytest.mark.parametrize("guess", [0, 1])
@pytest.mark.parametrize("x", [(0, 0, 0, 0, 0), (1, 1, 1, 1, 1), (1, 0, 1, 0, 0)])
def test_guess_mermin_majority_other_inputs(x, guess):
    q = GuessingQuery.function(builtin("mermin5"), 0.0, x, majority_of_first_three, guess)
    assert guessing_probability_bound(q).value <= 0.75 + 1e-6


@pytest.mark.parametrize("outputs", list(itertools.product((0, 1), repeat=2)))
@pytest.mark.parametrize("x", list(itertools.product((0, 1), repeat=2)))
def test_guess_chsh_outcomes_at_pr_value(x, outputs):
    # At S = 4 the behavior is the PR box: each output pair has probability 1/2 or 0.
    q = GuessingQuery.outcome(chsh(), 4.0, x, outputs)
    expected = 0.5 if (outputs[0] ^ outputs[1]) == (x[0] & x[1]) else 0.0
    assert guessing_probability_bound(q).value == pytest.approx(expected, abs=1e-6)


def test_guess_chsh_at_local_value():
    q = GuessingQuery.outcome(chsh(), 2.0, (0, 0), (0, 0))
    assert guessing_probability_bound(q).value == pytest.approx(1.0, abs=1e-9)


def test_guess_bound_dominates_quantum_point():
    b = behavior_from_quantum(canonical_strategy("chsh"))
    S = evaluate(chsh(), b)
    q = GuessingQuery.outcome(chsh(), S, (0, 0), (0, 0))
    assert guessing_probability_bound(q).value >= b.prob((0, 0), (0, 0)) - 1e-9


def test_majority():
    assert [majority_of_first_three(a) for a in [(0, 0, 1), (1, 1, 0), (1, 1, 1), (0, 0, 0)]] == [0, 1, 1, 0]
