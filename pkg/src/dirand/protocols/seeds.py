"""Bit supplies and exact seed accounting.

A :class:`SeedSource` pulls bits one at a time from a supply and turns them
into the random choices a protocol needs. Every bit pulled is charged to the
category of the request that pulled it, so the identity
``supply.drawn == sum(ledger.values())`` holds exactly.

Non-uniform choices use an entropy-recycling pool: a value ``V`` uniform on
``[0, M)``. A draw with integer frequencies ``f`` (total ``T``) splits ``V``
into a uniform symbol index and a uniform remainder; the unused part of the
symbol interval stays in the pool. Choices are exact for rational
probabilities and cost close to their entropy on average.
"""

from __future__ import annotations

from collections import Counter
from fractions import Fraction
from typing import Sequence

import numpy as np

from ..sources import SourceModel, sample

POOL_MARGIN = 20


class SeedExhausted(RuntimeError):
    """A finite seed ran out of bits."""


class UniformBits:
    """Perfect random bits from a numpy generator."""

    def __init__(self, rng: np.random.Generator, chunk: int = 4096):
        self.rng = rng
        self.chunk = chunk
        self._buf = np.zeros(0, dtype=np.uint8)
        self._pos = 0
        self.drawn = 0

    def next_bits(self, k: int) -> np.ndarray:
        out = []
        need = k
        while need:
            if self._pos == self._buf.size:
                self._buf = self.rng.integers(0, 2, size=max(self.chunk, need), dtype=np.uint8)
                self._pos = 0
            take = min(need, self._buf.size - self._pos)
            out.append(self._buf[self._pos : self._pos + take])
            self._pos += take
            need -= take
        self.drawn += k
        return np.concatenate(out) if out else np.zeros(0, dtype=np.uint8)


class FiniteBits:
    """A fixed bit string consumed from the front."""

    def __init__(self, bits: Sequence[int]):
        self.bits = np.asarray(bits, dtype=np.uint8).reshape(-1)
        self.drawn = 0

    @property
    def remaining(self) -> int:
        return self.bits.size - self.drawn

    def next_bits(self, k: int) -> np.ndarray:
        if k > self.remaining:
            raise SeedExhausted(f"needed {k} bits but only {self.remaining} remain")
        out = self.bits[self.drawn : self.drawn + k]
        self.drawn += k
        return out


class SourceBits:
    """Bits streamed from a weak source model.

    SV and von Neumann sources stream bit by bit; block sources stream
    whole blocks. Fixed-length sources (flat, min-entropy, explicit,
    program) are concatenated from independent draws.
    """

    def __init__(self, source: SourceModel, rng: np.random.Generator, chunk: int = 1024):
        self.source = source
        self.rng = rng
        if source.kind in ("sv", "von_neumann"):
            self.chunk = chunk
        elif source.kind == "block":
            self.chunk = source.n * max(1, chunk // source.n)
        else:
            self.chunk = None
        self.history = np.zeros(0, dtype=np.uint8)
        self.drawn = 0

    def next_bits(self, k: int) -> np.ndarray:
        while self.history.size < self.drawn + k:
            if self.source.kind == "sv" and self.source.program is not None:
                # A program conditions on the whole history, so extend bit by bit.
                prog = self.source.program
                shifted = SourceModel.sv(self.source.epsilon, lambda pre, h=tuple(self.history): prog(h + pre))
                more = sample(shifted, 1, self.rng)
            else:
                more = sample(self.source, self.chunk, self.rng)
            more = np.asarray(more, dtype=np.uint8)
            self.history = np.concatenate([self.history, more])
        out = self.history[self.drawn : self.drawn + k]
        self.drawn += k
        return out


def _frequencies(probs: Sequence) -> list[int]:
    fr = [Fraction(p).limit_denominator(1 << 30) if not isinstance(p, Fraction) else p for p in probs]
    if any(f < 0 for f in fr) or sum(fr) != 1:
        raise ValueError("probabilities must be non-negative rationals summing to 1")
    den = 1
    for f in fr:
        den = den * f.denominator // np.gcd(den, f.denominator)
    return [int(f * den) for f in fr]


class SeedSource:
    """Random choices drawn from a bit supply with per-category accounting."""

    def __init__(self, supply, record: bool = False):
        self.supply = supply
        self.ledger: Counter = Counter()
        self._record: list[np.ndarray] | None = [] if record else None
        self._V = 0
        self._M = 1

    @property
    def drawn(self) -> int:
        return self.supply.drawn

    def balanced(self) -> bool:
        """The seed-ledger identity: bits drawn equal bits charged."""
        return self.supply.drawn == sum(self.ledger.values())

    def summary(self) -> dict:
        return {"drawn": int(self.supply.drawn), "by_category": {k: int(v) for k, v in sorted(self.ledger.items())}}

    def bits(self, k: int, category: str) -> np.ndarray:
        """``k`` raw bits straight from the supply."""
        if k < 0:
            raise ValueError("bit count must be non-negative")
        out = np.asarray(self.supply.next_bits(k), dtype=np.uint8)
        self.ledger[category] += k
        if self._record is not None:
            self._record.append(out.copy())
        return out

    def consumed_bits(self) -> np.ndarray:
        """Every bit pulled so far, in order (needs ``record=True``)."""
        if self._record is None:
            raise RuntimeError("this seed source does not record its bits")
        return np.concatenate(self._record) if self._record else np.zeros(0, dtype=np.uint8)

    def _refill(self, total: int, category: str) -> None:
        need = 0
        M = self._M
        while M < (total << POOL_MARGIN):
            M <<= 1
            need += 1
        if need:
            new = self.bits(need, category)
            v = 0
            for b in new:
                v = (v << 1) | int(b)
            self._V = (self._V << need) | v
            self._M = M

    def categorical_freq(self, freqs: Sequence[int], category: str) -> int:
        """Symbol ``s`` with probability ``freqs[s] / sum(freqs)``."""
        T = int(sum(freqs))
        if T <= 0 or any(f < 0 for f in freqs):
            raise ValueError("frequencies must be non-negative with a positive total")
        cum = np.cumsum(freqs)
        while True:
            self._refill(T, category)
            q = self._M // T
            lim = q * T
            if self._V < lim:
                u, r = divmod(self._V, q)
                s = int(np.searchsorted(cum, u, side="right"))
                lo = int(cum[s - 1]) if s else 0
                self._V = (u - lo) * q + r
                self._M = int(freqs[s]) * q
                return s
            self._V -= lim
            self._M -= lim

    def categorical(self, probs: Sequence, category: str) -> int:
        return self.categorical_freq(_frequencies(probs), category)

    def uniform_int(self, m: int, category: str) -> int:
        if m < 1:
            raise ValueError("range must be positive")
        if m == 1:
            return 0
        return self.categorical_freq([1] * m, category)

    def bernoulli(self, num: int, den: int, category: str) -> bool:
        """True with probability ``num / den``."""
        if not 0 <= num <= den or den <= 0:
            raise ValueError("need 0 <= num <= den")
        return self.categorical_freq([den - num, num], category) == 1
