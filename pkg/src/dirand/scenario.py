"""Bell scenarios, behaviors and deterministic local strategies.

A behavior ``p(a|x)`` is stored as a dense table of shape
``(n_input_tuples, n_output_tuples)``. Both axes use mixed-radix indexing
with party 0 as the most significant digit, so the flat row-major layout
has outputs varying fastest.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

DEFAULT_TOL = 1e-9
ENUMERATION_CAP = 10**7


class StructureError(ValueError):
    """A table or record does not match the shape of its scenario."""


class EnumerationTooLarge(ValueError):
    """Refusal to enumerate more deterministic points than the cap allows."""

    def __init__(self, count: int, cap: int):
        super().__init__(f"{count} deterministic points exceed the enumeration cap {cap}")
        self.count = count
        self.cap = cap


@dataclass(frozen=True)
class Scenario:
    """Number of inputs and outputs for each party."""

    inputs: tuple[int, ...]
    outputs: tuple[int, ...]

    def __post_init__(self):
        inputs = tuple(int(m) for m in self.inputs)
        outputs = tuple(int(o) for o in self.outputs)
        if not inputs:
            raise ValueError("a scenario needs at least one party")
        if len(inputs) != len(outputs):
            raise ValueError("inputs and outputs must list the same number of parties")
        if min(inputs) < 1 or min(outputs) < 1:
            raise ValueError("every party needs at least one input and one output")
        object.__setattr__(self, "inputs", inputs)
        object.__setattr__(self, "outputs", outputs)

    @classmethod
    def binary(cls, parties: int) -> Scenario:
        return cls((2,) * parties, (2,) * parties)

    @property
    def parties(self) -> int:
        return len(self.inputs)

    @property
    def n_input_tuples(self) -> int:
        return math.prod(self.inputs)

    @property
    def n_output_tuples(self) -> int:
        return math.prod(self.outputs)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n_input_tuples, self.n_output_tuples)

    @property
    def n_deterministic(self) -> int:
        return math.prod(o**m for m, o in zip(self.inputs, self.outputs))

    def input_tuples(self) -> list[tuple[int, ...]]:
        return list(itertools.product(*(range(m) for m in self.inputs)))

    def output_tuples(self) -> list[tuple[int, ...]]:
        return list(itertools.product(*(range(o) for o in self.outputs)))

    def input_index(self, x: Sequence[int]) -> int:
        return _encode(x, self.inputs)

    def output_index(self, a: Sequence[int]) -> int:
        return _encode(a, self.outputs)

    def input_digits(self) -> np.ndarray:
        """Array of shape (n_input_tuples, parties) listing every input tuple."""
        return np.array(self.input_tuples(), dtype=np.int64).reshape(-1, self.parties)

    def output_digits(self) -> np.ndarray:
        return np.array(self.output_tuples(), dtype=np.int64).reshape(-1, self.parties)

    def to_dict(self) -> dict:
        return {"parties": self.parties, "inputs": list(self.inputs), "outputs": list(self.outputs)}

    @classmethod
    def from_dict(cls, d: dict) -> Scenario:
        s = cls(tuple(d["inputs"]), tuple(d["outputs"]))
        if "parties" in d and int(d["parties"]) != s.parties:
            raise StructureError("party count disagrees with the input/output lists")
        return s


def _encode(digits: Sequence[int], radices: Sequence[int]) -> int:
    if len(digits) != len(radices):
        raise StructureError(f"expected {len(radices)} digits, got {len(digits)}")
    idx = 0
    for d, r in zip(digits, radices):
        if not 0 <= int(d) < r:
            raise StructureError(f"digit {d} out of range for radix {r}")
        idx = idx * r + int(d)
    return idx


@dataclass(frozen=True)
class Behavior:
    """Conditional distribution ``p(a|x)`` over a scenario."""

    scenario: Scenario
    table: np.ndarray = field(repr=False)

    def __post_init__(self):
        table = np.array(self.table, dtype=float)
        if table.ndim == 1 and table.size == math.prod(self.scenario.shape):
            table = table.reshape(self.scenario.shape)
        if table.shape != self.scenario.shape:
            raise StructureError(f"table shape {table.shape} does not match scenario {self.scenario.shape}")
        table.setflags(write=False)
        object.__setattr__(self, "table", table)

    def prob(self, a: Sequence[int], x: Sequence[int]) -> float:
        return float(self.table[self.scenario.input_index(x), self.scenario.output_index(a)])

    def tensor(self) -> np.ndarray:
        """View with one axis per party input followed by one per party output."""
        s = self.scenario
        t = self.table.reshape(s.inputs + s.outputs)
        return t

    def marginal(self, keep: Sequence[int]) -> np.ndarray:
        """Marginal over the parties in ``keep``, still indexed by every input.

        Returns an array of shape ``inputs + outputs[keep]``.
        """
        s = self.scenario
        drop = [s.parties + k for k in range(s.parties) if k not in keep]
        return self.tensor().sum(axis=tuple(drop))

    def to_dict(self) -> dict:
        return {"scenario": self.scenario.to_dict(), "table": self.table.reshape(-1).tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> Behavior:
        s = Scenario.from_dict(d["scenario"])
        flat = np.asarray(d["table"], dtype=float)
        if flat.size != math.prod(s.shape):
            raise StructureError(f"table has {flat.size} entries, expected {math.prod(s.shape)}")
        return cls(s, flat.reshape(s.shape))

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> Behavior:
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class ValidationReport:
    ok: bool
    violations: tuple[str, ...] = ()


def validate_behavior(b: Behavior, tol: float = DEFAULT_TOL) -> ValidationReport:
    """Check non-negativity and per-input normalization of ``b``."""
    problems = []
    t = b.table
    if not np.all(np.isfinite(t)):
        problems.append("table contains non-finite entries")
    neg = np.argwhere(t < -tol)
    for i, j in neg[:10]:
        problems.append(f"negative probability {t[i, j]:.3g} at input {i}, output {j}")
    sums = t.sum(axis=1)
    for i in np.nonzero(np.abs(sums - 1.0) > tol)[0][:10]:
        problems.append(f"input {i} sums to {sums[i]:.12g}")
    return ValidationReport(not problems, tuple(problems))


def signaling_violation(b: Behavior) -> float:
    """Largest dependence of any party-removed marginal on the removed input.

    Summing out party k's output must leave a table that does not depend on
    party k's input. Requiring this for every k is equivalent to requiring
    it for every subset of parties.
    """
    s = b.scenario
    t = b.tensor()
    worst = 0.0
    for k in range(s.parties):
        m = t.sum(axis=s.parties + k)  # drop party k's output axis
        ref = np.take(m, [0], axis=k)
        worst = max(worst, float(np.abs(m - ref).max(initial=0.0)))
    return worst


def is_no_signaling(b: Behavior, tol: float = DEFAULT_TOL) -> tuple[bool, float]:
    """Return whether ``b`` is no-signaling and the size of the worst violation."""
    v = signaling_violation(b)
    return v <= tol, v


@dataclass(frozen=True)
class DeterministicPoint:
    """A local deterministic strategy: each party's output for each of its inputs."""

    scenario: Scenario
    assignment: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        s = self.scenario
        assignment = tuple(tuple(int(v) for v in row) for row in self.assignment)
        if len(assignment) != s.parties:
            raise StructureError("one response row per party is required")
        for k, row in enumerate(assignment):
            if len(row) != s.inputs[k]:
                raise StructureError(f"party {k} needs {s.inputs[k]} responses")
            if any(not 0 <= v < s.outputs[k] for v in row):
                raise StructureError(f"party {k} response out of range")
        object.__setattr__(self, "assignment", assignment)

    def respond(self, x: Sequence[int]) -> tuple[int, ...]:
        return tuple(self.assignment[k][x[k]] for k in range(self.scenario.parties))

    def behavior(self) -> Behavior:
        s = self.scenario
        t = np.zeros(s.shape)
        for i, x in enumerate(s.input_tuples()):
            t[i, s.output_index(self.respond(x))] = 1.0
        return Behavior(s, t)

    def to_dict(self) -> dict:
        return {"scenario": self.scenario.to_dict(), "assignment": [list(r) for r in self.assignment]}


def _party_response_tables(s: Scenario) -> list[np.ndarray]:
    """For each party, all response functions as rows (o**m, m)."""
    return [
        np.array(list(itertools.product(range(o), repeat=m)), dtype=np.int64).reshape(-1, m)
        for m, o in zip(s.inputs, s.outputs)
    ]


def enumerate_deterministic(s: Scenario, cap: int = ENUMERATION_CAP) -> Iterable[DeterministicPoint]:
    """Yield every deterministic point, party 0's response varying slowest."""
    count = s.n_deterministic
    if count > cap:
        raise EnumerationTooLarge(count, cap)
    per_party = [list(itertools.product(range(o), repeat=m)) for m, o in zip(s.inputs, s.outputs)]
    for combo in itertools.product(*per_party):
        yield DeterministicPoint(s, combo)


def deterministic_outputs(s: Scenario, cap: int = ENUMERATION_CAP) -> np.ndarray:
    """Output index chosen by every deterministic point on every input tuple.

    Returns an integer array of shape ``(n_deterministic, n_input_tuples)``
    whose rows follow the order of :func:`enumerate_deterministic`.
    """
    count = s.n_deterministic
    if count > cap:
        raise EnumerationTooLarge(count, cap)
    tables = _party_response_tables(s)
    xs = s.input_digits()
    out = np.zeros((1, s.n_input_tuples), dtype=np.int64)
    for k, tab in enumerate(tables):
        resp = tab[:, xs[:, k]]  # (choices_k, n_inputs)
        out = (out[:, None, :] * s.outputs[k] + resp[None, :, :]).reshape(-1, s.n_input_tuples)
    return out


def deterministic_matrix(s: Scenario, cap: int = ENUMERATION_CAP) -> np.ndarray:
    """0/1 matrix whose rows are the flattened deterministic behaviors."""
    outs = deterministic_outputs(s, cap)
    n_det, n_in = outs.shape
    D = np.zeros((n_det, n_in * s.n_output_tuples))
    cols = np.arange(n_in) * s.n_output_tuples + outs
    D[np.arange(n_det)[:, None], cols] = 1.0
    return D


def mix(points: Sequence[DeterministicPoint | Behavior], weights: Sequence[float], tol: float = DEFAULT_TOL) -> Behavior:
    """Convex combination of behaviors; weights must be non-negative and sum to 1."""
    w = np.asarray(weights, dtype=float)
    if len(points) != w.size or w.size == 0:
        raise ValueError("need one weight per point")
    if np.any(w < -tol) or abs(w.sum() - 1.0) > tol:
        raise ValueError("weights must be non-negative and sum to 1")
    behaviors = [p.behavior() if isinstance(p, DeterministicPoint) else p for p in points]
    s = behaviors[0].scenario
    if any(b.scenario != s for b in behaviors):
        raise StructureError("all points must share one scenario")
    table = sum(wi * b.table for wi, b in zip(w, behaviors))
    return Behavior(s, table)


def uniform_behavior(s: Scenario) -> Behavior:
    return Behavior(s, np.full(s.shape, 1.0 / s.n_output_tuples))
