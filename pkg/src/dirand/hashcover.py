"""Covering families of hash functions {0,1}^n -> {0,1}^2.

A family covers when every set of four distinct n-bit strings is mapped
injectively onto the four 2-bit values by at least one member. Members are
arrays of length ``2**n`` with entries in {0, 1, 2, 3}.
"""

from __future__ import annotations

import itertools
import json
import logging
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

logger = logging.getLogger(__name__)

EXHAUSTIVE_MAX_N = 5
RETRY_BUDGET = 10**4
CANDIDATE_BATCH = 32


class CoverConstructionError(RuntimeError):
    """No covering family was found within the budget or size target."""

    def __init__(self, message: str, partial: HashFamily):
        super().__init__(message)
        self.partial = partial


@dataclass(frozen=True)
class HashFamily:
    n: int
    members: np.ndarray = field(repr=False)

    def __post_init__(self):
        M = np.array(self.members, dtype=np.int64)
        if M.ndim == 1:
            M = M.reshape(1, -1)
        if M.size == 0:
            M = M.reshape(0, 2**self.n)
        if M.shape[1] != 2**self.n:
            raise ValueError(f"members must have {2**self.n} entries")
        if M.size and (M.min() < 0 or M.max() > 3):
            raise ValueError("member values must lie in {0, 1, 2, 3}")
        M.setflags(write=False)
        object.__setattr__(self, "members", M)

    @property
    def size(self) -> int:
        return self.members.shape[0]

    def __call__(self, i: int, x: int) -> int:
        return int(self.members[i, x])

    def to_dict(self) -> dict:
        return {"n": self.n, "members": self.members.tolist()}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d: dict) -> HashFamily:
        return cls(int(d["n"]), np.asarray(d["members"]))


@dataclass(frozen=True)
class CoverResult:
    ok: bool
    counterexample: tuple[int, ...] | None = None
    checked: int = 0
    sampled: bool = False

    def __bool__(self) -> bool:
        return self.ok


def all_quadruples(n: int) -> np.ndarray:
    return np.array(list(itertools.combinations(range(2**n), 4)), dtype=np.int64).reshape(-1, 4)


def covered_mask(members: np.ndarray, quads: np.ndarray) -> np.ndarray:
    """Boolean per quadruple: some member is injective on it."""
    if members.shape[0] == 0:
        return np.zeros(len(quads), dtype=bool)
    hit = np.zeros(len(quads), dtype=bool)
    for row in members:
        # Injective on four points iff the four values set four distinct bits.
        hit |= (np.left_shift(1, row[quads])).sum(axis=1) == 15
    return hit


def verify_cover(
    family: HashFamily,
    sampled: bool = False,
    samples: int = 100_000,
    rng: np.random.Generator | None = None,
) -> CoverResult:
    """Check the covering property, exhaustively for n <= 5.

    With ``sampled`` set, ``samples`` random quadruples are checked instead
    and the result is labeled as sampled.
    """
    n = family.n
    if 2**n < 4:
        return CoverResult(True, checked=0)
    if sampled:
        rng = np.random.default_rng(0) if rng is None else rng
        quads = np.sort(np.array([rng.choice(2**n, 4, replace=False) for _ in range(samples)]), axis=1)
    else:
        if n > EXHAUSTIVE_MAX_N:
            raise ValueError(f"exhaustive verification is limited to n <= {EXHAUSTIVE_MAX_N}; pass sampled=True")
        quads = all_quadruples(n)
    hit = covered_mask(family.members, quads)
    if hit.all():
        return CoverResult(True, checked=len(quads), sampled=sampled)
    bad = tuple(int(v) for v in quads[np.argmin(hit)])
    return CoverResult(False, counterexample=bad, checked=len(quads), sampled=sampled)


def construct_cover(
    n: int,
    rng: np.random.Generator,
    target_size: int | None = None,
    budget: int = RETRY_BUDGET,
) -> HashFamily:
    """Random greedy covering family with repair.

    Each step draws a batch of random members, keeps the one covering most
    of the still uncovered quadruples, and first rewrites it on one
    uncovered quadruple so that every step makes progress. Raises
    :class:`CoverConstructionError` carrying the partial family when the
    candidate budget or ``target_size`` is exceeded.
    """
    if not 2 <= n <= 8:
        raise ValueError("construction supports 2 <= n <= 8")
    N = 2**n
    quads = all_quadruples(n)
    uncovered = np.ones(len(quads), dtype=bool)
    members: list[np.ndarray] = []
    drawn = 0
    while uncovered.any():
        if target_size is not None and len(members) >= target_size:
            raise CoverConstructionError(
                f"{int(uncovered.sum())} quadruples remain uncovered with {len(members)} members",
                HashFamily(n, np.array(members).reshape(-1, N)),
            )
        if drawn >= budget:
            raise CoverConstructionError(
                f"candidate budget {budget} exhausted", HashFamily(n, np.array(members).reshape(-1, N))
            )
        batch = min(CANDIDATE_BATCH, budget - drawn)
        drawn += batch
        cands = rng.integers(0, 4, size=(batch, N))
        first = quads[np.argmax(uncovered)]
        cands[:, first] = rng.permuted(np.tile(np.arange(4), (batch, 1)), axis=1)
        open_quads = quads[uncovered]
        scores = [(np.left_shift(1, c[open_quads])).sum(axis=1).__eq__(15).sum() for c in cands]
        best = cands[int(np.argmax(scores))]
        members.append(best)
        uncovered[uncovered] = ~covered_mask(best[None, :], open_quads)
    family = HashFamily(n, np.array(members))
    logger.info("cover for n=%d uses %d members after %d candidates", n, family.size, drawn)
    return family


def family_from_sequences(xs: np.ndarray, ys: np.ndarray) -> HashFamily:
    """Members ``z_i = 2 X_i + Y_i`` for every pair of sample points.

    ``xs`` and ``ys`` are sample spaces: rows are equally likely binary
    sequences of length ``2**n``.
    """
    xs, ys = np.asarray(xs, dtype=np.int64), np.asarray(ys, dtype=np.int64)
    if xs.shape[1] != ys.shape[1]:
        raise ValueError("sequences must have equal length")
    N = xs.shape[1]
    n = N.bit_length() - 1
    if 2**n != N:
        raise ValueError("sequence length must be a power of two")
    members = (2 * xs[:, None, :] + ys[None, :, :]).reshape(-1, N)
    return HashFamily(n, members)


@dataclass(frozen=True)
class DependenceReport:
    ok: bool
    worst: float
    worst_subset: tuple[int, ...] | None
    sampled: bool

    def __bool__(self) -> bool:
        return self.ok


def check_swise_delta(
    sequences: Sequence[Sequence[int]],
    s: int,
    delta: float,
    max_subsets: int = 2 * 10**6,
    rng: np.random.Generator | None = None,
) -> DependenceReport:
    """Test s-wise delta-dependence of a uniform sample space.

    The rows of ``sequences`` are the equally likely sample points. For
    every index set of size at most ``s`` the marginal must lie within L1
    distance ``delta`` of uniform. Subsets are enumerated exhaustively when
    there are at most ``max_subsets`` of them, otherwise that many are
    sampled and the report is labeled as sampled.
    """
    Z = np.asarray(sequences, dtype=np.int64)
    if Z.ndim != 2 or Z.size == 0:
        raise ValueError("need a nonempty 2-D array of sample points")
    rows, N = Z.shape
    worst, worst_set = 0.0, None
    total = sum(math.comb(N, r) for r in range(1, min(s, N) + 1))
    sampled = total > max_subsets
    if sampled:
        rng = np.random.default_rng(0) if rng is None else rng
        sizes = rng.integers(1, min(s, N) + 1, size=max_subsets)
        subsets = (tuple(sorted(rng.choice(N, int(r), replace=False).tolist())) for r in sizes)
    else:
        subsets = itertools.chain.from_iterable(itertools.combinations(range(N), r) for r in range(1, min(s, N) + 1))
    for S in subsets:
        r = len(S)
        code = Z[:, list(S)] @ (1 << np.arange(r - 1, -1, -1))
        freq = np.bincount(code, minlength=2**r) / rows
        d = float(np.abs(freq - 2.0**-r).sum())
        if d > worst:
            worst, worst_set = d, tuple(S)
    return DependenceReport(worst <= delta, worst, worst_set, sampled)
