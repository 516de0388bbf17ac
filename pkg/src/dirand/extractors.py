"""Deterministic, two-source and seeded randomness extractors.

Statistical distance is ``1/2 * sum |p - q|``. Worst-case distances of the
two-source extractors are measured over pairs of flat sources, the extreme
points of the (n, k) source class, so the maximum over flats is the maximum
over all independent source pairs.
"""

from __future__ import annotations

import functools
import itertools
import logging
import math
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

from .gf2 import (
    all_strings,
    as_bits,
    bits_to_int,
    field_mul,
    gf2_rank,
    int_to_bits,
    multiplication_matrix,
)

logger = logging.getLogger(__name__)

PASS_TOL = 1e-12
EXHAUSTIVE_PAIR_CAP = 2 * 10**8


# Deterministic extraction --------------------------------------------------------


def von_neumann(bits: Sequence[int] | str) -> np.ndarray:
    """Keep the second bit of every unequal pair; drop equal pairs.

    A trailing odd bit is ignored.
    """
    b = as_bits(bits)
    pairs = b[: b.size - b.size % 2].reshape(-1, 2)
    return pairs[pairs[:, 0] != pairs[:, 1], 1].copy()


def von_neumann_output_distributions(n: int, p0: float) -> dict[int, np.ndarray]:
    """Exact output distribution given the output length, for i.i.d. input.

    Enumerates all ``2**n`` inputs with ``P(bit = 0) = p0`` and returns, for
    every reachable output length L, the conditional distribution over the
    ``2**L`` output strings.
    """
    acc: dict[int, np.ndarray] = {}
    for x in all_strings(n):
        ones = int(x.sum())
        w = p0 ** (n - ones) * (1.0 - p0) ** ones
        out = von_neumann(x)
        L = out.size
        if L not in acc:
            acc[L] = np.zeros(2**L)
        acc[L][bits_to_int(out) if L else 0] += w
    return {L: d / d.sum() for L, d in sorted(acc.items()) if d.sum() > 0}


# Two-source extractors -----------------------------------------------------------


def _pair(x, y) -> tuple[np.ndarray, np.ndarray]:
    x, y = as_bits(x), as_bits(y)
    if x.size != y.size:
        raise ValueError(f"inputs have different lengths {x.size} and {y.size}")
    return x, y


def hadamard(x: Sequence[int] | str, y: Sequence[int] | str) -> int:
    """Inner product of two bit strings modulo 2."""
    x, y = _pair(x, y)
    return int(np.dot(x.astype(np.int64), y.astype(np.int64)) % 2)


def bpp(x: Sequence[int] | str, y: Sequence[int] | str) -> int:
    """``x_1 + y_1 + sum_{i >= 2} x_i y_i`` modulo 2."""
    x, y = _pair(x, y)
    if x.size == 0:
        raise ValueError("inputs must be nonempty")
    return int((int(x[0]) + int(y[0]) + int(np.dot(x[1:].astype(np.int64), y[1:].astype(np.int64)))) % 2)


@functools.lru_cache(maxsize=None)
def _deor_matrices(n: int) -> tuple[np.ndarray, ...]:
    mats = []
    for i in range(n):
        M = multiplication_matrix(1 << i, n)
        M.setflags(write=False)
        mats.append(M)
    return tuple(mats)


def deor_matrices(n: int) -> tuple[np.ndarray, ...]:
    """Matrices ``A_1..A_n`` of multiplication by ``1, x, ..., x**(n-1)``.

    Any nonempty subset sum is multiplication by a nonzero field element of
    GF(2^n), hence invertible. ``A_1`` is the identity.
    """
    if n < 1:
        raise ValueError("n must be positive")
    return _deor_matrices(n)


def check_deor_ranks(n: int) -> tuple[bool, int]:
    """Check every nonempty subset sum has full rank by elimination.

    Returns the verdict and the number of subsets checked (``2**n - 1``).
    """
    mats = deor_matrices(n)
    count = 0
    for mask in range(1, 2**n):
        S = np.zeros((n, n), dtype=np.uint8)
        for i in range(n):
            if (mask >> i) & 1:
                S ^= mats[i]
        count += 1
        if gf2_rank(S) != n:
            return False, count
    return True, count


def deor(x: Sequence[int] | str, y: Sequence[int] | str, m: int) -> np.ndarray:
    """``m`` bits ``Had(A_j x, y)`` for j = 1..m."""
    x, y = _pair(x, y)
    n = x.size
    if not 1 <= m <= n:
        raise ValueError(f"m must lie in [1, {n}]")
    # A_j x is the field product x**(j-1) * x, so only m products are needed.
    xv = bits_to_int(x)
    return np.array([hadamard(int_to_bits(field_mul(1 << j, xv, n), n), y) for j in range(m)], dtype=np.uint8)


# Seeded extractors -------------------------------------------------------------------


def universal_hash(x: Sequence[int] | str, seed: Sequence[int] | str, ell: int) -> np.ndarray:
    """Member ``h_s`` of a pairwise-independent family on n-bit inputs.

    The 2n-bit seed is split into field elements ``a`` and ``b`` of
    GF(2^n); the hash is the first ``ell`` bits of ``a * x + b``.
    """
    x, s = as_bits(x), as_bits(seed)
    n = x.size
    if s.size != 2 * n:
        raise ValueError(f"seed must have {2 * n} bits")
    if not 0 <= ell < n:
        raise ValueError("output length must satisfy 0 <= ell < n")
    a, b = bits_to_int(s[:n]), bits_to_int(s[n:])
    v = field_mul(a, bits_to_int(x), n) ^ b
    return int_to_bits(v, n)[:ell]


def universal_hash_extract(x: Sequence[int] | str, seed: Sequence[int] | str, ell: int) -> np.ndarray:
    """Seed followed by ``h_seed(x)``."""
    return np.concatenate([as_bits(seed), universal_hash(x, seed, ell)])


def check_pairwise_uniform(n: int, ell: int) -> tuple[bool, float]:
    """Exhaustive check of ``P[h(w1) = z1 and h(w2) = z2] = 2**(-2 ell)``.

    Runs over all ``2**(2n)`` seeds and every pair ``w1 != w2``. Returns the
    verdict and the largest deviation from the target probability.
    """
    if n > 5:
        raise ValueError("exhaustive check is limited to n <= 5")
    seeds = all_strings(2 * n)
    xs = all_strings(n)
    H = np.array([[bits_to_int(universal_hash(x, s, ell)) if ell else 0 for x in xs] for s in seeds])
    target = 2.0 ** (-2 * ell)
    worst = 0.0
    for w1, w2 in itertools.permutations(range(2**n), 2):
        joint = np.bincount(H[:, w1] * 2**ell + H[:, w2], minlength=4**ell) / len(seeds)
        worst = max(worst, float(np.abs(joint - target).max()))
    return worst <= PASS_TOL, worst


def toeplitz_hash(x: Sequence[int], seed: Sequence[int], ell: int) -> np.ndarray:
    """``T x`` for the ell-by-n Toeplitz matrix ``T[i, j] = seed[i - j + n - 1]``.

    The family is pairwise independent once an affine shift is added; here
    the seed has ``n + ell - 1`` bits and the product is computed by FFT.
    """
    x = as_bits(x)
    s = as_bits(seed)
    n = x.size
    if s.size != n + ell - 1:
        raise ValueError(f"seed must have {n + ell - 1} bits")
    if ell == 0:
        return np.zeros(0, dtype=np.uint8)
    size = 1 << (n + s.size - 1).bit_length()
    conv = np.fft.irfft(np.fft.rfft(s.astype(float), size) * np.fft.rfft(x.astype(float), size), size)
    # y_i = sum_j s[i - j + n - 1] x[j] = conv[i + n - 1]
    vals = np.rint(conv[n - 1 : n - 1 + ell]).astype(np.int64)
    return (vals % 2).astype(np.uint8)


def toeplitz_seed_length(n: int, ell: int) -> int:
    """Bits needed for the affine Toeplitz extractor: matrix plus shift."""
    return n + 2 * ell - 1 if ell else 0


def toeplitz_extract(x: Sequence[int], seed: Sequence[int], ell: int) -> np.ndarray:
    """Affine Toeplitz hashing ``T x + c`` with seed ``(T, c)``."""
    x = as_bits(x)
    s = as_bits(seed)
    need = toeplitz_seed_length(x.size, ell)
    if s.size != need:
        raise ValueError(f"seed must have {need} bits")
    if ell == 0:
        return np.zeros(0, dtype=np.uint8)
    t_bits = s[: x.size + ell - 1]
    shift = s[x.size + ell - 1 :]
    return toeplitz_hash(x, t_bits, ell) ^ shift


def leftover_hash_length(min_entropy: float, epsilon: float) -> int:
    """Output length ``floor(k - 2 log2(1/epsilon))``, never negative."""
    if not 0 < epsilon < 1:
        raise ValueError("epsilon must lie in (0, 1)")
    return max(0, int(math.floor(min_entropy - 2 * math.log2(1 / epsilon))))


# Distances and worst-case sweeps --------------------------------------------------


def statistical_distance(p: Sequence[float], q: Sequence[float]) -> float:
    p = np.asarray(p, dtype=float).reshape(-1)
    q = np.asarray(q, dtype=float).reshape(-1)
    if p.shape != q.shape:
        raise ValueError("distributions live on different domains")
    return float(0.5 * np.abs(p - q).sum())


TWO_SOURCE = ("hadamard", "bpp", "deor")


def output_table(extractor: str, n: int, m: int = 1) -> np.ndarray:
    """Integer output ``E[x, y]`` for every pair of n-bit strings."""
    X = all_strings(n).astype(np.int64)
    if extractor == "hadamard":
        return (X @ X.T) % 2
    if extractor == "bpp":
        return (X[:, :1] + X[:, :1].T + X[:, 1:] @ X[:, 1:].T) % 2
    if extractor == "deor":
        mats = deor_matrices(n)
        out = np.zeros((2**n, 2**n), dtype=np.int64)
        for j in range(m):
            AX = (X @ mats[j].T.astype(np.int64)) % 2
            out = out * 2 + (AX @ X.T) % 2
        return out
    raise ValueError(f"unknown extractor {extractor!r}; choose from {TWO_SOURCE}")


def claimed_bound(extractor: str, n: int, k_x: float, k_y: float, m: int = 1) -> float:
    if extractor == "hadamard":
        return 2.0 ** ((n - k_x - k_y - 1) / 2)
    if extractor == "bpp":
        return 2.0 ** ((n - k_x - k_y - 3) / 2)
    if extractor == "deor":
        return 2.0 ** ((n + m - k_x - k_y - 1) / 2)
    raise ValueError(f"unknown extractor {extractor!r}")


@dataclass(frozen=True)
class ExtractorReport:
    extractor: str
    n: int
    k_x: int
    k_y: int
    m: int
    measured: float
    claimed: float
    passed: bool
    sampled: bool
    pairs: int

    def to_dict(self) -> dict:
        return asdict(self)


def _flat_matrix(n: int, k: int, rows: Sequence[Sequence[int]] | None = None) -> np.ndarray:
    if rows is None:
        rows = list(itertools.combinations(range(2**n), 2**k))
    F = np.zeros((len(rows), 2**n))
    for i, sup in enumerate(rows):
        F[i, list(sup)] = 1.0
    return F


def _random_flats(n: int, k: int, count: int, rng: np.random.Generator) -> list[tuple[int, ...]]:
    return [tuple(sorted(rng.choice(2**n, size=2**k, replace=False).tolist())) for _ in range(count)]


def worst_case_distance(
    extractor: str,
    n: int,
    k_x: int,
    k_y: int,
    m: int = 1,
    sampled: bool = False,
    samples: int = 4096,
    seed: int = 0,
    chunk: int = 512,
) -> ExtractorReport:
    """Largest distance from uniform over independent flat source pairs.

    Exhaustive unless ``sampled`` is set, in which case ``samples`` random
    flats are drawn per side with ``default_rng(seed)`` and the report is
    labeled as sampled.
    """
    if not (0 <= k_x <= n and 0 <= k_y <= n):
        raise ValueError("need 0 <= k <= n")
    E = output_table(extractor, n, m)
    n_out = 2 ** (m if extractor == "deor" else 1)
    if sampled:
        rng = np.random.default_rng(seed)
        Fx = _flat_matrix(n, k_x, _random_flats(n, k_x, samples, rng))
        Fy = _flat_matrix(n, k_y, _random_flats(n, k_y, samples, rng))
    else:
        cx, cy = math.comb(2**n, 2**k_x), math.comb(2**n, 2**k_y)
        if cx * cy > EXHAUSTIVE_PAIR_CAP:
            raise ValueError(f"{cx * cy} flat pairs exceed the exhaustive cap; pass sampled=True")
        Fx, Fy = _flat_matrix(n, k_x), _flat_matrix(n, k_y)
    norm = 2.0**k_x * 2.0**k_y
    indicators = [(E == v).astype(float) for v in range(n_out)]
    worst = 0.0
    for start in range(0, Fx.shape[0], chunk):
        block = Fx[start : start + chunk]
        dist = np.zeros((block.shape[0], Fy.shape[0]))
        for ind in indicators:
            dist += np.abs(block @ ind @ Fy.T / norm - 1.0 / n_out)
        worst = max(worst, float(dist.max()) / 2)
    claimed = claimed_bound(extractor, n, k_x, k_y, m)
    report = ExtractorReport(
        extractor,
        n,
        k_x,
        k_y,
        m,
        worst,
        claimed,
        worst <= claimed + PASS_TOL,
        sampled,
        Fx.shape[0] * Fy.shape[0],
    )
    logger.debug("%s", report)
    return report
