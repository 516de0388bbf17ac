"""Bell expressions, local bounds and CHSH-based randomness certification."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .scenario import (
    ENUMERATION_CAP,
    Behavior,
    DeterministicPoint,
    Scenario,
    StructureError,
    deterministic_outputs,
)

TSIRELSON = 2 * math.sqrt(2)


@dataclass(frozen=True)
class ReferenceBounds:
    local: float
    quantum: float
    no_signaling: float | None = None


@dataclass(frozen=True)
class BellExpression:
    """Linear functional ``sum_x w(x) sum_a c[x, a] p(a|x)`` on a scenario.

    With ``input_weights`` unset every input has weight one, so the value is
    the plain sum of coefficients times probabilities. ``sense`` tells which
    direction is "more nonlocal": ``"max"`` for CHSH-type expressions and
    ``"min"`` for expressions that quantum strategies drive to zero.
    """

    name: str
    scenario: Scenario
    coefficients: np.ndarray = field(repr=False)
    input_weights: np.ndarray | None = field(default=None, repr=False)
    sense: str = "max"
    bounds: ReferenceBounds | None = None

    def __post_init__(self):
        c = np.array(self.coefficients, dtype=float)
        if c.shape != self.scenario.shape:
            raise StructureError(f"coefficients shape {c.shape} does not match scenario {self.scenario.shape}")
        c.setflags(write=False)
        object.__setattr__(self, "coefficients", c)
        if self.input_weights is not None:
            w = np.array(self.input_weights, dtype=float).reshape(-1)
            if w.size != self.scenario.n_input_tuples:
                raise StructureError("need one weight per input tuple")
            w.setflags(write=False)
            object.__setattr__(self, "input_weights", w)
        if self.sense not in ("max", "min"):
            raise ValueError("sense must be 'max' or 'min'")

    def weighted_coefficients(self) -> np.ndarray:
        """Coefficients with input weights folded in, shape (n_in, n_out)."""
        if self.input_weights is None:
            return self.coefficients
        return self.coefficients * self.input_weights[:, None]

    def support(self) -> np.ndarray:
        """Indices of input tuples that carry weight in the expression."""
        wc = self.weighted_coefficients()
        return np.nonzero(np.any(wc != 0, axis=1))[0]


def evaluate(expr: BellExpression, b: Behavior) -> float:
    if b.scenario != expr.scenario:
        raise StructureError("behavior and expression use different scenarios")
    return float(np.sum(expr.weighted_coefficients() * b.table))


def local_bound(expr: BellExpression, cap: int = ENUMERATION_CAP) -> tuple[float, DeterministicPoint]:
    """Optimum of ``expr`` over deterministic points in its own sense.

    Returns the value and the first optimal point in enumeration order.
    """
    s = expr.scenario
    outs = deterministic_outputs(s, cap)  # (n_det, n_in)
    wc = expr.weighted_coefficients()
    values = wc[np.arange(s.n_input_tuples)[None, :], outs].sum(axis=1)
    k = int(np.argmax(values) if expr.sense == "max" else np.argmin(values))
    return float(values[k]), point_from_index(s, k)


def point_from_index(s: Scenario, k: int) -> DeterministicPoint:
    """Deterministic point number ``k`` in enumeration order."""
    rows = []
    for m, o in reversed(list(zip(s.inputs, s.outputs))):
        count = o**m
        k, r = divmod(k, count)
        digits = []
        for _ in range(m):
            r, d = divmod(r, o)
            digits.append(d)
        rows.append(tuple(reversed(digits)))
    return DeterministicPoint(s, tuple(reversed(rows)))


# Built-in expressions ---------------------------------------------------------


def _table(s: Scenario, fn: Callable[[tuple, tuple], float]) -> np.ndarray:
    xs, as_ = s.input_tuples(), s.output_tuples()
    return np.array([[fn(x, a) for a in as_] for x in xs], dtype=float)


def chsh() -> BellExpression:
    """CHSH correlator sum <A0B0> + <A0B1> + <A1B0> - <A1B1>."""
    s = Scenario.binary(2)
    c = _table(s, lambda x, a: (-1) ** (a[0] + a[1]) * (-1 if x == (1, 1) else 1))
    return BellExpression("chsh", s, c, sense="max", bounds=ReferenceBounds(2.0, TSIRELSON, 4.0))


def chsh_game() -> BellExpression:
    """Winning probability of the CHSH game with uniform inputs."""
    s = Scenario.binary(2)
    c = _table(s, lambda x, a: float((a[0] ^ a[1]) == (x[0] & x[1])))
    return BellExpression(
        "chsh_game",
        s,
        c,
        input_weights=np.full(4, 0.25),
        sense="max",
        bounds=ReferenceBounds(0.75, math.cos(math.pi / 8) ** 2, 1.0),
    )


GHZ_INPUTS = ((1, 1, 1), (1, 0, 0), (0, 1, 0), (0, 0, 1))


def ghz_game() -> BellExpression:
    """Three-party parity game: outputs must XOR to the AND of the inputs.

    Inputs are uniform over the four strings of ``GHZ_INPUTS``.
    """
    s = Scenario.binary(3)
    valid = set(GHZ_INPUTS)
    c = _table(s, lambda x, a: float(x in valid and (a[0] ^ a[1] ^ a[2]) == (x[0] & x[1] & x[2])))
    w = np.array([0.25 if x in valid else 0.0 for x in s.input_tuples()])
    return BellExpression("ghz_game", s, c, input_weights=w, sense="max", bounds=ReferenceBounds(0.75, 1.0, 1.0))


def _weight(x: tuple) -> int:
    return sum(x)


def mermin5_inputs() -> tuple[list[tuple], list[tuple]]:
    """Input sets of the five-party Mermin expression.

    The first set (weight one, plus all ones) should produce even output
    parity, the second set (weight three) odd parity.
    """
    s = Scenario.binary(5)
    first = [x for x in s.input_tuples() if _weight(x) == 1 or _weight(x) == 5]
    second = [x for x in s.input_tuples() if _weight(x) == 3]
    return first, second


def mermin5_penalty(a: tuple, x: tuple) -> int:
    """1 when outputs ``a`` fail the parity requirement of input ``x``."""
    w = _weight(x)
    if w in (1, 5):
        return _weight(a) % 2
    if w == 3:
        return (_weight(a) + 1) % 2
    return 0


def mermin5() -> BellExpression:
    """Number of failed parity tests, summed over the 16 test inputs."""
    s = Scenario.binary(5)
    c = _table(s, lambda x, a: float(mermin5_penalty(a, x)))
    return BellExpression("mermin5", s, c, sense="min", bounds=ReferenceBounds(6.0, 0.0, 0.0))


def brandao4_penalty(a: tuple, x: tuple) -> int:
    """Weight-three inputs need even parity, weight-one inputs odd parity."""
    w = _weight(x)
    if w == 3:
        return _weight(a) % 2
    if w == 1:
        return (_weight(a) + 1) % 2
    return 0


def brandao4() -> BellExpression:
    s = Scenario.binary(4)
    c = _table(s, lambda x, a: float(brandao4_penalty(a, x)))
    return BellExpression("brandao4", s, c, sense="min", bounds=ReferenceBounds(2.0, 0.0, 0.0))


BUILTIN = {
    "chsh": chsh,
    "chsh_game": chsh_game,
    "ghz_game": ghz_game,
    "mermin5": mermin5,
    "brandao4": brandao4,
}


def builtin(name: str) -> BellExpression:
    try:
        return BUILTIN[name]()
    except KeyError:
        raise KeyError(f"unknown Bell expression {name!r}; choose from {sorted(BUILTIN)}") from None


# Estimation and entropy bounds --------------------------------------------------


@dataclass(frozen=True)
class CountTable:
    """Observed counts N(a, x) from n rounds with known input distribution."""

    scenario: Scenario
    counts: np.ndarray
    input_distribution: np.ndarray

    def __post_init__(self):
        counts = np.array(self.counts, dtype=np.int64)
        if counts.shape != self.scenario.shape:
            raise StructureError("counts must have the scenario's shape")
        if np.any(counts < 0):
            raise ValueError("counts must be non-negative")
        dist = np.array(self.input_distribution, dtype=float).reshape(-1)
        if dist.size != self.scenario.n_input_tuples:
            raise StructureError("need one probability per input tuple")
        if np.any(dist < 0) or abs(dist.sum() - 1.0) > 1e-9:
            raise ValueError("input distribution must be a probability vector")
        counts.setflags(write=False)
        dist.setflags(write=False)
        object.__setattr__(self, "counts", counts)
        object.__setattr__(self, "input_distribution", dist)

    @property
    def n(self) -> int:
        return int(self.counts.sum())


def estimate_from_counts(ct: CountTable, expr: BellExpression | None = None) -> float:
    """Unbiased estimate of ``expr`` from counts.

    Each count is divided by ``n * p(x)``, the expected number of rounds
    with input ``x``, rather than by the observed number. For CHSH this is
    S = [a0b0] + [a0b1] + [a1b0] - [a1b1] with
    [a_x b_y] = sum_ab (-1)^(a+b) N(ab|xy) / (n p(xy)).
    """
    expr = chsh() if expr is None else expr
    if ct.scenario != expr.scenario:
        raise StructureError("counts and expression use different scenarios")
    n = ct.n
    if n == 0:
        raise ValueError("no rounds recorded")
    p = ct.input_distribution
    wc = expr.weighted_coefficients()
    used = np.any(wc != 0, axis=1) | (ct.counts.sum(axis=1) > 0)
    if np.any(used & (p <= 0)):
        raise ValueError("an input used by the expression or the data has zero probability")
    est = 0.0
    for i in np.nonzero(used)[0]:
        est += float(wc[i] @ ct.counts[i]) / (n * p[i])
    return est


def confidence_epsilon(n: int, q: float, I_q: float = TSIRELSON, delta: float = 0.01) -> float:
    """Deviation bound (1/q + I_q) sqrt(2 ln(1/delta) / n) for the CHSH estimate."""
    if n <= 0:
        raise ValueError("n must be positive")
    if not 0 < q <= 1:
        raise ValueError("q must lie in (0, 1]")
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    return (1.0 / q + I_q) * math.sqrt(2.0 * math.log(1.0 / delta) / n)


def min_entropy_rate_bound(S: float, tol: float = 1e-9) -> float:
    """Per-round min-entropy bound f(S) = 1 - log2(1 + sqrt(2 - S^2/4)).

    Values below the local bound 2 give 0; values above 2*sqrt(2) by more
    than ``tol`` are rejected.
    """
    if S > TSIRELSON + tol:
        raise ValueError(f"CHSH value {S} exceeds the quantum maximum {TSIRELSON}")
    if S <= 2.0:
        return 0.0
    S = min(S, TSIRELSON)
    return 1.0 - math.log2(1.0 + math.sqrt(max(0.0, 2.0 - S * S / 4.0)))


def total_entropy_bound(n: int, S_obs: float, eps: float) -> float:
    """n * f(S_obs - eps), with the argument clipped to [2, 2*sqrt(2)].

    A finite-sample estimate can land above the quantum maximum; the
    certified value then saturates at the per-round maximum of one bit.
    """
    arg = min(max(S_obs - eps, 2.0), TSIRELSON)
    return n * min_entropy_rate_bound(arg)
