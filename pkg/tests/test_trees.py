from __future__ import annotations

import math

import numpy as np
import pytest

from dirand.protocols import (
    R_HONEST,
    ProtocolConfig,
    repeat_attack_device,
    repeat_attack_leaf_count,
    repeat_attack_source,
    run_single_device_protocol,
    single_device_bounds,
    tree_max_leaves,
    tree_max_repeat_leaves,
    tree_rate,
)
from dirand.sources import min_entropy, program_distribution

from .conftest import assert_ledger


@pytest.mark.parametrize("n, expected", [(0, 1), (1, 3), (2, 12), (3, 36), (4, 144)])
def test_tree_leaves_small(n, expected):
    assert tree_max_leaves(n) == expected


def _brute_force_leaves(n: int) -> int:
    # Second route: try every honest/dishonest labeling of the levels.
    best = 0
    for mask in range(2**n):
        credit, ok, leaves = 0, True, 1
        for d in range(n):
            honest = mask >> d & 1
            credit += -1 if honest else 1
            if credit < 0:
                ok = False
                break
            leaves *= 4 if honest else 3
        if ok:
            best = max(best, leaves)
    return best


@pytest.mark.parametrize("n", range(0, 13))
def test_tree_dp_matches_level_enumeration(n):
    assert tree_max_leaves(n) == _brute_force_leaves(n)


@pytest.mark.parametrize("n", range(2, 21, 2))
def test_tree_closed_form(n):
    assert tree_max_leaves(n) == 12 ** (n // 2)
    assert tree_rate(tree_max_leaves(n), n) == pytest.approx(R_HONEST)


@pytest.mark.parametrize("n", range(2, 21, 2))
def test_repeat_tree_closed_form(n):
    assert tree_max_repeat_leaves(n) == 10 ** (n // 2)
    assert tree_rate(tree_max_repeat_leaves(n), n) == pytest.approx(math.log2(10) / 4)


def test_tree_errors():
    with pytest.raises(ValueError):
        tree_max_repeat_leaves(3)
    with pytest.raises(ValueError):
        tree_max_leaves(41)


def test_bounds_at_threshold():
    b = single_device_bounds(R_HONEST, 50)
    assert (b.p_cheat, b.bias) == (1.0, 0.5)


def test_bounds_formula():
    b = single_device_bounds(R_HONEST + 0.05, 100)
    assert b.p_cheat == pytest.approx(2.0**-10)
    assert b.bias == pytest.approx(2.0**-11)


def test_bounds_below_threshold():
    b = single_device_bounds(0.8, 10)
    assert b.full_cheating and b.p_cheat is None


@pytest.mark.parametrize("n", [2, 4, 6])
def test_repeat_attack_source_is_flat_on_repeat_tree(n):
    p = program_distribution(repeat_attack_source(n))
    support = p[p > 1e-15]
    assert support.size == 10 ** (n // 2) == repeat_attack_leaf_count(n)
    np.testing.assert_allclose(support, 10.0 ** -(n // 2))
    assert min_entropy(p) / (2 * n) == pytest.approx(math.log2(10) / 4)


def test_repeat_attack_always_accepts_with_fixed_output():
    outs = set()
    for s in range(200):
        v = run_single_device_protocol(
            ProtocolConfig(n=6), repeat_attack_device(), repeat_attack_source(6), np.random.default_rng(s)
        )
        assert v.accepted
        assert_ledger(v)
        outs.add(int(v.output_bits[0]))
    assert outs == {0}
