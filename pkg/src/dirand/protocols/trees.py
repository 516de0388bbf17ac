"""Cheating trees of the single-device protocol and the repeat attack.

In the tree of input prefixes with positive probability, an honest vertex
has four children (every input pattern is possible) and a dishonest one at
most three (one pattern is excluded, so a deterministic strategy can win).
Along every root-to-leaf path the honest vertices may never outnumber the
dishonest ones.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from ..quantum import canonical_strategy
from ..scenario import Scenario
from ..sources import SourceModel, program_distribution
from .devices import HonestQuantumDevice, MemoryProgramDevice

MAX_TREE_ROUNDS = 40
R_HONEST = math.log2(12) / 4


def tree_max_leaves(n: int, children_honest: int = 4, children_dishonest: int = 3) -> int:
    """Maximal leaf count of a depth-``n`` cheating tree.

    Dynamic program over (remaining depth, credit) where credit counts
    dishonest minus honest vertices on the path so far and must stay
    non-negative after every vertex.
    """
    if not 0 <= n <= MAX_TREE_ROUNDS:
        raise ValueError(f"n must lie in [0, {MAX_TREE_ROUNDS}]")

    @lru_cache(maxsize=None)
    def best(depth: int, credit: int) -> int:
        if depth == 0:
            return 1
        options = [children_dishonest * best(depth - 1, credit + 1)]
        if credit >= 1:
            options.append(children_honest * best(depth - 1, credit - 1))
        return max(options)

    return best(n, 0)


def tree_max_repeat_leaves(n: int) -> int:
    """Leaf count of the repeat-attack tree over ``n`` rounds (n even).

    Rounds come in pairs. After an honest first round, the edge labeled 11
    leads to a vertex with a single child (the repeated 11), and each of
    the other three edges leads to a vertex with three children.
    """
    if n % 2:
        raise ValueError("the repeat tree needs an even number of rounds")
    if not 0 <= n <= MAX_TREE_ROUNDS:
        raise ValueError(f"n must lie in [0, {MAX_TREE_ROUNDS}]")
    # Leaves below a vertex at the start of a pair, built from the bottom up.
    at_pair_start = 1
    for _ in range(n // 2):
        after_11 = at_pair_start
        after_other = 3 * at_pair_start
        at_pair_start = after_11 + 3 * after_other
    return at_pair_start


def tree_rate(count: int, n: int) -> float:
    """Min-entropy rate ``log2(count) / (2n)`` of a flat source on the leaves."""
    if n < 1:
        raise ValueError("n must be positive")
    return math.log2(count) / (2 * n)


@dataclass(frozen=True)
class SingleDeviceBounds:
    R: float
    n: int
    epsilon: float
    full_cheating: bool
    p_cheat: float | None
    bias: float | None

    def to_dict(self) -> dict:
        return {
            "R": self.R,
            "n": self.n,
            "epsilon": self.epsilon,
            "full_cheating": self.full_cheating,
            "p_cheat": self.p_cheat,
            "bias": self.bias,
        }


def single_device_bounds(R: float, n: int) -> SingleDeviceBounds:
    """``p_cheat <= 2^(-2 eps n)`` and ``bias <= 2^(-(2 eps n + 1))``, ``eps = R - R_H``.

    Below ``R_H = log2(12)/4`` a full-cheating report is returned instead.
    """
    if n < 1:
        raise ValueError("n must be positive")
    if not 0 <= R <= 1:
        raise ValueError("R must lie in [0, 1]")
    eps = R - R_HONEST
    if eps < 0:
        return SingleDeviceBounds(R, n, eps, True, None, None)
    p = 2.0 ** (-2 * eps * n)
    return SingleDeviceBounds(R, n, eps, False, p, p / 2)


# Repeat attack ----------------------------------------------------------------------


def repeat_attack_source(n: int) -> SourceModel:
    """Flat source on the ``10^(n/2)`` leaves of the repeat tree (2n bits).

    In each pair of rounds the first pattern is 11 with probability 1/10
    and then repeats; otherwise (3/10 each) the second pattern is uniform
    over {00, 01, 10}.
    """
    if n < 2 or n % 2:
        raise ValueError("n must be a positive even number")

    # Returns P(next bit = 0 | prefix).
    def conditional(prefix: tuple) -> float:
        pos = len(prefix) % 4
        block = prefix[len(prefix) - pos :]
        if pos == 0:
            return 0.6  # first pattern 00 or 01
        if pos == 1:
            return 0.5 if block[0] == 0 else 0.75
        if (block[0], block[1]) == (1, 1):
            return 0.0  # 11 repeats
        if pos == 2:
            return 2 / 3  # second pattern uniform on 00, 01, 10
        return 0.5 if block[2] == 0 else 1.0

    return SourceModel.from_program(2 * n, conditional)


def repeat_attack_device() -> MemoryProgramDevice:
    """GHZ device that plays honestly in the first round of each pair and
    repeats that round's outputs in the second.

    Against :func:`repeat_attack_source` the repeated outputs always win:
    either the input repeats 111, or both inputs of the pair need even
    parity. The two output strings then agree pairwise, so their inner
    product is always 0.
    """

    def program(party, round_index, own_input, history, lam):
        if round_index % 2 == 0:
            return None
        return history[-1][1][party]

    return MemoryProgramDevice(Scenario.binary(3), program, fallback=HonestQuantumDevice(canonical_strategy("ghz3")))


def repeat_attack_leaf_count(n: int) -> int:
    """Number of strings in the support of :func:`repeat_attack_source`."""
    return int(np.count_nonzero(program_distribution(repeat_attack_source(n)) > 1e-15))
