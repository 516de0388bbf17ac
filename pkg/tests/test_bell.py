from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dirand.bell import (
    BUILTIN,
    GHZ_INPUTS,
    TSIRELSON,
    CountTable,
    builtin,
    chsh,
    confidence_epsilon,
    estimate_from_counts,
    evaluate,
    ghz_game,
    local_bound,
    mermin5_inputs,
    min_entropy_rate_bound,
    total_entropy_bound,
)
from dirand.scenario import Scenario, enumerate_deterministic, uniform_behavior

from .test_scenario import pr_box


@pytest.mark.parametrize(
    "name, vertices, expected",
    [("chsh", 16, 2.0), ("chsh_game", 16, 0.75), ("ghz_game", 64, 0.75), ("mermin5", 1024, 6.0), ("brandao4", 256, 2.0)],
)
def test_local_bounds(name, vertices, expected):
    expr = builtin(name)
    assert expr.scenario.n_deterministic == vertices
    value, point = local_bound(expr)
    assert value == expected
    assert evaluate(expr, point.behavior()) == expected


@pytest.mark.parametrize("name", sorted(BUILTIN))
def test_local_bound_matches_brute_force(name):
    # Second route: evaluate every vertex behavior directly.
    expr = builtin(name)
    values = [evaluate(expr, p.behavior()) for p in enumerate_deterministic(expr.scenario)]
    best = max(values) if expr.sense == "max" else min(values)
    assert local_bound(expr)[0] == pytest.approx(best, abs=1e-12)
    assert best == expr.bounds.local


def test_chsh_pr_box_and_uniform():
    assert evaluate(chsh(), pr_box()) == pytest.approx(4.0)
    assert evaluate(chsh(), uniform_behavior(Scenario.binary(2))) == pytest.approx(0.0)


def test_ghz_game_inputs():
    assert set(GHZ_INPUTS) == {(1, 1, 1), (1, 0, 0), (0, 1, 0), (0, 0, 1)}
    w = ghz_game().input_weights
    assert sum(w) == pytest.approx(1.0)


def test_mermin5_input_split():
    first, second = mermin5_inputs()
    assert len(first) == 6 and len(second) == 10
    assert all(sum(x) in (1, 5) for x in first)
    assert all(sum(x) == 3 for x in second)


def test_unknown_expression():
    with pytest.raises(KeyError):
        builtin("nope")


# Estimation ------------------------------------------------------------------------


def test_estimate_exact_counts():
    # Counts proportional to the PR box with uniform inputs give S = 4 exactly.
    s = Scenario.binary(2)
    counts = np.rint(pr_box().table * 1000).astype(int)
    ct = CountTable(s, counts, np.full(4, 0.25))
    assert estimate_from_counts(ct) == pytest.approx(4.0)


def test_estimate_rejects_zero_probability_input():
    s = Scenario.binary(2)
    ct = CountTable(s, np.ones(s.shape, dtype=int), np.array([1.0, 0, 0, 0]))
    with pytest.raises(ValueError):
        estimate_from_counts(ct)


@pytest.mark.parametrize(
    "n, q, delta, expected",
    [
        # (1/q + 2 sqrt 2) sqrt(2 ln(1/delta) / n), frozen from a hand calculation.
        (10_000, 0.25, 0.01, (4 + 2 * math.sqrt(2)) * math.sqrt(2 * math.log(100) / 10_000)),
        (100, 0.5, 0.5, (2 + 2 * math.sqrt(2)) * math.sqrt(2 * math.log(2) / 100)),
    ],
)
def test_confidence_epsilon(n, q, delta, expected):
    assert confidence_epsilon(n, q, TSIRELSON, delta) == pytest.approx(expected, rel=1e-15)


@pytest.mark.parametrize("args", [(0, 0.25), (10, 0.0), (10, 1.5)])
def test_confidence_epsilon_domain(args):
    with pytest.raises(ValueError):
        confidence_epsilon(*args)


# f(S) ------------------------------------------------------------------------------


@pytest.mark.parametrize(
    "S, expected",
    [
        (2.0, 0.0),
        (TSIRELSON, 1.0),
        (1.0, 0.0),
        # 1 - log2(1 + sqrt(2 - 6.25/4)) by hand.
        (2.5, 1 - math.log2(1 + math.sqrt(2 - 6.25 / 4))),
    ],
)
def test_min_entropy_rate_values(S, expected):
    assert min_entropy_rate_bound(S) == pytest.approx(expected, abs=1e-15)


def test_min_entropy_rate_rejects_superquantum():
    with pytest.raises(ValueError):
        min_entropy_rate_bound(3.0)


@settings(max_examples=200, deadline=None)
@given(st.floats(2.0, TSIRELSON), st.floats(2.0, TSIRELSON))
def test_min_entropy_rate_monotone(a, b):
    lo, hi = sorted((a, b))
    assert min_entropy_rate_bound(lo) <= min_entropy_rate_bound(hi) + 1e-15


def test_total_entropy_bound_clips():
    assert total_entropy_bound(100, 3.5, 0.1) == pytest.approx(100.0)
    assert total_entropy_bound(100, 2.05, 0.1) == 0.0
