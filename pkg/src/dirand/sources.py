"""Weak randomness sources: models, samplers and exhaustive checkers.

Distributions over n-bit strings are dense probability vectors indexed by
the big-endian integer value of the string (first bit most significant).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .gf2 import all_strings, as_bits, bits_to_int
from .lp import LinearProgram, lp_solve

DENSE_LIMIT = 20
PROB_TOL = 1e-9

# P(next bit = 0 | prefix) for program-defined sources.
Conditional = Callable[[tuple], float]
# Support of the next block given the previous blocks, as integers.
BlockProgram = Callable[[tuple], Sequence[int]]

KINDS = ("von_neumann", "sv", "block", "min_entropy", "flat", "explicit", "program")


class SourceError(ValueError):
    """A source model is malformed or cannot serve the request."""


@dataclass(frozen=True)
class SourceModel:
    """One weak-source class with its parameters.

    Use the constructors rather than the raw fields:

    * ``von_neumann(eps)``: i.i.d. bits with ``P(X_i = 0) = eps``.
    * ``sv(eps, program=None)``: every conditional ``P(X_i = 0 | past)`` lies in
      ``[1/2 - eps, 1/2 + eps]``; an optional program picks the conditional.
    * ``block(n, k, program=None)``: n-bit blocks with conditional min-entropy
      at least ``k``; an optional program returns the support of the next block.
    * ``min_entropy(n, k, support=None)``: one n-bit string, min-entropy >= k.
    * ``flat(n, support)``, ``explicit(n, probs)``: explicit distributions.
    * ``program(n, conditional)``: sequential conditionals for long strings.
    """

    kind: str
    n: int | None = None
    epsilon: float | None = None
    k: float | None = None
    support: tuple[int, ...] | None = None
    probs: np.ndarray | None = field(default=None, repr=False)
    program: Callable | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise SourceError(f"unknown source kind {self.kind!r}")
        if self.kind in ("von_neumann", "sv"):
            if self.epsilon is None or not 0 <= self.epsilon <= 0.5:
                raise SourceError("epsilon must lie in [0, 1/2]")
        if self.kind in ("block", "min_entropy"):
            if self.n is None or self.n < 1 or self.k is None or not 0 <= self.k <= self.n:
                raise SourceError("need 1 <= n and 0 <= k <= n")
        if self.support is not None:
            sup = tuple(sorted(set(int(v) for v in self.support)))
            if not sup:
                raise SourceError("support must be nonempty")
            if self.n is None or sup[0] < 0 or sup[-1] >= 2**self.n:
                raise SourceError("support elements must be n-bit strings")
            object.__setattr__(self, "support", sup)
            if self.kind == "min_entropy" and math.log2(len(sup)) < self.k - PROB_TOL:
                raise SourceError("support is too small for the min-entropy bound")
        if self.kind == "flat" and self.support is None:
            raise SourceError("flat sources need a support")
        if self.kind == "explicit":
            if self.n is None or self.n > DENSE_LIMIT:
                raise SourceError(f"explicit distributions are limited to {DENSE_LIMIT} bits")
            p = np.asarray(self.probs, dtype=float).reshape(-1)
            check_distribution(p, self.n)
            p.setflags(write=False)
            object.__setattr__(self, "probs", p)
        if self.kind == "program" and (self.n is None or self.program is None):
            raise SourceError("program sources need a length and a conditional")

    # Constructors ---------------------------------------------------------------

    @classmethod
    def von_neumann(cls, epsilon: float) -> SourceModel:
        return cls("von_neumann", epsilon=float(epsilon))

    @classmethod
    def sv(cls, epsilon: float, program: Conditional | None = None) -> SourceModel:
        return cls("sv", epsilon=float(epsilon), program=program)

    @classmethod
    def block(cls, n: int, k: float, program: BlockProgram | None = None) -> SourceModel:
        return cls("block", n=int(n), k=float(k), program=program)

    @classmethod
    def min_entropy(cls, n: int, k: float, support: Sequence[int] | None = None) -> SourceModel:
        return cls("min_entropy", n=int(n), k=float(k), support=None if support is None else tuple(support))

    @classmethod
    def flat(cls, n: int, support: Sequence[int]) -> SourceModel:
        return cls("flat", n=int(n), support=tuple(support))

    @classmethod
    def explicit(cls, n: int, probs: Sequence[float]) -> SourceModel:
        return cls("explicit", n=int(n), probs=np.asarray(probs, dtype=float))

    @classmethod
    def from_program(cls, n: int, conditional: Conditional) -> SourceModel:
        return cls("program", n=int(n), program=conditional)

    # Views ----------------------------------------------------------------------

    def distribution(self) -> np.ndarray:
        """Dense distribution for fixed-length sources of at most 20 bits."""
        if self.kind == "explicit":
            return self.probs
        if self.kind in ("flat", "min_entropy") and self.support is not None:
            p = np.zeros(2**self.n)
            p[list(self.support)] = 1.0 / len(self.support)
            return p
        if self.kind == "min_entropy":
            return np.full(2**self.n, 2.0**-self.n)
        raise SourceError(f"{self.kind} sources have no single dense distribution")

    def to_dict(self) -> dict:
        d: dict = {"kind": self.kind}
        for key in ("n", "epsilon", "k"):
            if getattr(self, key) is not None:
                d[key] = getattr(self, key)
        if self.support is not None:
            d["support"] = list(self.support)
        if self.probs is not None:
            d["probs"] = self.probs.tolist()
        return d


def check_distribution(p: np.ndarray, n: int | None = None, tol: float = PROB_TOL) -> None:
    if p.size == 0:
        raise SourceError("empty distribution")
    if n is not None and p.size != 2**n:
        raise SourceError(f"need {2**n} probabilities, got {p.size}")
    if p.size & (p.size - 1):
        raise SourceError("distribution length must be a power of two")
    if np.any(p < -tol) or abs(p.sum() - 1.0) > tol:
        raise SourceError("not a probability distribution")


def min_entropy(probs: Sequence[float]) -> float:
    """``-log2`` of the largest probability."""
    p = np.asarray(probs, dtype=float).reshape(-1)
    if p.size == 0:
        raise SourceError("empty distribution")
    check_distribution(p)
    return float(-math.log2(p.max()))


def _conditionals(p: np.ndarray, n: int):
    """Yield (position, prefix value, P(prefix), P(next = 0 | prefix))."""
    t = p.reshape((2,) * n) if n else p
    for i in range(n):
        # Marginal over the first i + 1 bits.
        m = t.sum(axis=tuple(range(i + 1, n))) if i + 1 < n else t
        m = m.reshape(-1, 2)
        for prefix in range(m.shape[0]):
            tot = m[prefix].sum()
            if tot > 0:
                yield i, prefix, tot, m[prefix, 0] / tot


def sv_check(probs: Sequence[float], epsilon: float, tol: float = PROB_TOL) -> tuple[bool, float]:
    """Whether a distribution over n <= 20 bits is an SV(epsilon) source.

    Returns the verdict and the worst conditional bias
    ``|P(X_i = 0 | prefix) - 1/2|`` over prefixes of positive probability.
    """
    p = np.asarray(probs, dtype=float).reshape(-1)
    check_distribution(p)
    n = p.size.bit_length() - 1
    if n > DENSE_LIMIT:
        raise SourceError(f"exhaustive conditioning is limited to {DENSE_LIMIT} bits")
    worst = 0.0
    for _, _, _, c in _conditionals(p, n):
        worst = max(worst, abs(c - 0.5))
    return bool(worst <= epsilon + tol), float(worst)


def iid_distribution(n: int, p0: float) -> np.ndarray:
    """Distribution of n i.i.d. bits with ``P(bit = 0) = p0``."""
    ones = all_strings(n).sum(axis=1)
    return p0 ** (n - ones) * (1.0 - p0) ** ones


def flat_supports(n: int, size: int):
    """All subsets of ``size`` n-bit strings, lexicographic."""
    return itertools.combinations(range(2**n), size)


# Sampling -----------------------------------------------------------------------


def sample(source: SourceModel, length: int | None, rng: np.random.Generator) -> np.ndarray:
    """Draw ``length`` bits from the source.

    Fixed-length sources (min-entropy, flat, explicit, program) produce
    exactly ``n`` bits and ``length`` may be omitted. Block sources need a
    multiple of the block length. The honest SV sampler draws each
    conditional uniformly in the allowed band unless a program is attached.
    """
    kind = source.kind
    if kind in ("min_entropy", "flat", "explicit", "program"):
        if length not in (None, source.n):
            raise SourceError(f"{kind} sources emit exactly {source.n} bits")
        length = source.n
    if length is None or length < 0:
        raise SourceError("a non-negative length is required")
    if kind == "von_neumann":
        return (rng.random(length) >= source.epsilon).astype(np.uint8)
    if kind == "sv":
        return _sample_sv(source, length, rng)
    if kind == "block":
        return _sample_block(source, length, rng)
    if kind in ("min_entropy", "flat"):
        if source.support is None:
            v = int(rng.integers(0, 2**source.n))
        else:
            v = source.support[int(rng.integers(0, len(source.support)))]
        return _to_bits(v, source.n)
    if kind == "explicit":
        v = int(rng.choice(source.probs.size, p=source.probs / source.probs.sum()))
        return _to_bits(v, source.n)
    return _sample_program(source, rng)


def _to_bits(v: int, n: int) -> np.ndarray:
    return ((v >> np.arange(n - 1, -1, -1)) & 1).astype(np.uint8)


def _sample_sv(source: SourceModel, length: int, rng: np.random.Generator) -> np.ndarray:
    eps = source.epsilon
    out = np.zeros(length, dtype=np.uint8)
    if source.program is None:
        p0 = rng.uniform(0.5 - eps, 0.5 + eps, size=length)
        out[:] = rng.random(length) >= p0
        return out
    for i in range(length):
        p0 = float(source.program(tuple(int(b) for b in out[:i])))
        if not 0.5 - eps - PROB_TOL <= p0 <= 0.5 + eps + PROB_TOL:
            raise SourceError(f"SV program left the band at bit {i}: P(0) = {p0}")
        out[i] = rng.random() >= p0
    return out


def _sample_block(source: SourceModel, length: int, rng: np.random.Generator) -> np.ndarray:
    n = source.n
    if length % n:
        raise SourceError(f"block sources emit multiples of {n} bits")
    blocks: list[int] = []
    for _ in range(length // n):
        if source.program is None:
            blocks.append(int(rng.integers(0, 2**n)))
            continue
        sup = sorted(set(int(v) for v in source.program(tuple(blocks))))
        if not sup or sup[0] < 0 or sup[-1] >= 2**n:
            raise SourceError("block program returned an invalid support")
        if math.log2(len(sup)) < source.k - PROB_TOL:
            raise SourceError(f"block support of size {len(sup)} has min-entropy below {source.k}")
        blocks.append(sup[int(rng.integers(0, len(sup)))])
    if not blocks:
        return np.zeros(0, dtype=np.uint8)
    return np.concatenate([_to_bits(v, n) for v in blocks])


def _sample_program(source: SourceModel, rng: np.random.Generator) -> np.ndarray:
    out = np.zeros(source.n, dtype=np.uint8)
    for i in range(source.n):
        p0 = float(source.program(tuple(int(b) for b in out[:i])))
        if not -PROB_TOL <= p0 <= 1 + PROB_TOL:
            raise SourceError(f"conditional probability {p0} out of range")
        out[i] = rng.random() >= p0
    return out


def program_distribution(source: SourceModel) -> np.ndarray:
    """Dense distribution of a program source by exhaustive conditioning."""
    if source.kind != "program":
        return source.distribution()
    n = source.n
    if n > DENSE_LIMIT:
        raise SourceError(f"exhaustive conditioning is limited to {DENSE_LIMIT} bits")
    probs = np.zeros(2**n)
    for v, bits in enumerate(all_strings(n)):
        pr = 1.0
        for i in range(n):
            p0 = float(source.program(tuple(int(b) for b in bits[:i])))
            pr *= p0 if bits[i] == 0 else 1.0 - p0
            if pr == 0.0:
                break
        probs[v] = pr
    return probs


# Flat decomposition ---------------------------------------------------------------


@dataclass(frozen=True)
class FlatDecomposition:
    """Mixture of flat sources, each given by its support, with weights."""

    n: int
    k: int
    supports: tuple[tuple[int, ...], ...]
    weights: np.ndarray = field(repr=False)

    def mixture(self) -> np.ndarray:
        p = np.zeros(2**self.n)
        for sup, w in zip(self.supports, self.weights):
            p[list(sup)] += w / len(sup)
        return p


def flat_decomposition(probs: Sequence[float], k: int, max_bits: int = 4) -> FlatDecomposition:
    """Write an (n, k) distribution as a convex mixture of flat (n, k) sources.

    Solves the feasibility LP over all flats of size exactly ``2**k``; these
    are the extreme points of the set of (n, k) distributions.
    """
    p = np.asarray(probs, dtype=float).reshape(-1)
    check_distribution(p)
    n = p.size.bit_length() - 1
    if not 0 <= k <= n:
        raise SourceError("need 0 <= k <= n")
    if n > max_bits:
        raise SourceError(f"flat enumeration is limited to {max_bits} bits")
    if p.max() > 2.0**-k + PROB_TOL:
        raise SourceError(f"min-entropy {min_entropy(p):.4f} is below {k}; no flat decomposition exists")
    size = 2**k
    supports = list(flat_supports(n, size))
    F = np.zeros((p.size, len(supports)))
    for j, sup in enumerate(supports):
        F[list(sup), j] = 1.0 / size
    res = lp_solve(LinearProgram(c=np.zeros(len(supports)), A_eq=F, b_eq=p))
    if res.status != "optimal":
        raise SourceError(f"flat decomposition LP ended with status {res.status}")
    w = np.maximum(res.x, 0.0)
    keep = np.nonzero(w > 1e-12)[0]
    w = w[keep] / w[keep].sum()
    return FlatDecomposition(n, k, tuple(supports[j] for j in keep), w)


# Adversarial constructions ------------------------------------------------------


def ghz_blocking_source(n: int, avoid: int = 0b11) -> SourceModel:
    """Flat source on n bits where every 2-bit pair avoids one pattern.

    Each pair then selects one of only three GHZ inputs, so a deterministic
    strategy can win every round. The min-entropy rate is ``log2(3) / 2``.
    """
    if n <= 0 or n % 2:
        raise SourceError("n must be a positive even number")
    if not 0 <= avoid < 4:
        raise SourceError("avoid must be a 2-bit pattern")
    if n > DENSE_LIMIT:
        raise SourceError(f"explicit supports are limited to {DENSE_LIMIT} bits")
    allowed = [v for v in range(4) if v != avoid]
    support = []
    for pairs in itertools.product(allowed, repeat=n // 2):
        v = 0
        for pr in pairs:
            v = (v << 2) | pr
        support.append(v)
    return SourceModel.flat(n, support)


def bits_value(bits: Sequence[int]) -> int:
    return bits_to_int(as_bits(bits))
