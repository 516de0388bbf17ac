"""Device models played by the protocol harness.

Every device has a fixed number of components (parties), each taking one
input and returning one output bit per round. ``play`` runs a batch of
consecutive rounds; stateful devices keep their transcript until
``reset``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from ..quantum import SX, SZ, QuantumStrategy, behavior_from_quantum
from ..scenario import Behavior, DeterministicPoint, Scenario


class DeviceError(RuntimeError):
    """A device program misbehaved."""


def _check_inputs(inputs: np.ndarray, scenario: Scenario) -> np.ndarray:
    x = np.asarray(inputs, dtype=np.int64)
    if x.ndim == 1:
        x = x.reshape(1, -1)
    if x.shape[1] != scenario.parties:
        raise DeviceError(f"device has {scenario.parties} components, got {x.shape[1]} inputs per round")
    if np.any(x < 0) or np.any(x >= np.array(scenario.inputs)):
        raise DeviceError("input out of range")
    return x


def _radix(values: np.ndarray, radices: Sequence[int]) -> np.ndarray:
    idx = np.zeros(values.shape[0], dtype=np.int64)
    for k, r in enumerate(radices):
        idx = idx * r + values[:, k]
    return idx


def _digits(idx: np.ndarray, radices: Sequence[int]) -> np.ndarray:
    out = np.zeros((idx.size, len(radices)), dtype=np.int64)
    for k in range(len(radices) - 1, -1, -1):
        idx, out[:, k] = np.divmod(idx, radices[k])
    return out


class BehaviorDevice:
    """Memoryless device sampling each round from a fixed behavior.

    ``noise`` flips each output bit independently with that probability.
    """

    def __init__(self, behavior: Behavior, noise: float = 0.0):
        if not 0 <= noise <= 1:
            raise ValueError("noise must be a probability")
        self.behavior = behavior
        self.scenario = behavior.scenario
        self.noise = float(noise)
        self._cum = np.cumsum(behavior.table, axis=1)
        self._cum[:, -1] = 1.0

    @property
    def parties(self) -> int:
        return self.scenario.parties

    def reset(self) -> None:
        pass

    def play(self, inputs: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        x = _check_inputs(inputs, self.scenario)
        rows = _radix(x, self.scenario.inputs)
        u = rng.random(rows.size)
        out_idx = (u[:, None] >= self._cum[rows]).sum(axis=1)
        out = _digits(out_idx, self.scenario.outputs)
        if self.noise:
            out ^= (rng.random(out.shape) < self.noise).astype(np.int64)
        return out


class HonestQuantumDevice(BehaviorDevice):
    """Born-rule device for a quantum strategy with optional output flips."""

    def __init__(self, strategy: QuantumStrategy, noise: float = 0.0):
        super().__init__(behavior_from_quantum(strategy), noise)
        self.strategy = strategy


class DeterministicDevice:
    """Deterministic local device; round r uses ``points[r % len(points)]``."""

    def __init__(self, points: DeterministicPoint | Sequence[DeterministicPoint]):
        if isinstance(points, DeterministicPoint):
            points = [points]
        points = list(points)
        if not points:
            raise ValueError("need at least one deterministic point")
        self.scenario = points[0].scenario
        if any(p.scenario != self.scenario for p in points):
            raise ValueError("points must share one scenario")
        self.points = points
        self._tables = [np.array(p.assignment, dtype=np.int64) for p in points]
        self._round = 0

    @property
    def parties(self) -> int:
        return self.scenario.parties

    def reset(self) -> None:
        self._round = 0

    def play(self, inputs: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        x = _check_inputs(inputs, self.scenario)
        out = np.zeros_like(x)
        parties = np.arange(x.shape[1])
        for i in range(x.shape[0]):
            tab = self._tables[(self._round + i) % len(self._tables)]
            out[i] = [tab[k][x[i, k]] for k in parties]
        self._round += x.shape[0]
        return out


# program(party, round, own_input, history, lam) -> output bit, or None to defer
Program = Callable[[int, int, int, tuple, object], "int | None"]


@dataclass
class MemoryProgramDevice:
    """Device whose components run a shared deterministic program.

    Each component sees its own current input, the full transcript of past
    rounds and the shared parameter ``lam``, never another component's
    current input. A component may return ``None`` to defer; the round is
    then played by ``fallback``, which requires every component to defer.
    """

    scenario: Scenario
    program: Program
    lam: object = None
    fallback: BehaviorDevice | None = None
    history: list = field(default_factory=list)

    @property
    def parties(self) -> int:
        return self.scenario.parties

    def reset(self) -> None:
        self.history = []

    def respond(self, party: int, own_input: int) -> int | None:
        return self.program(party, len(self.history), int(own_input), tuple(self.history), self.lam)

    def play(self, inputs: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        x = _check_inputs(inputs, self.scenario)
        out = np.zeros_like(x)
        for i in range(x.shape[0]):
            answers = [self.respond(k, x[i, k]) for k in range(self.parties)]
            if all(a is None for a in answers):
                if self.fallback is None:
                    raise DeviceError("every component deferred but no fallback device is attached")
                out[i] = self.fallback.play(x[i : i + 1], rng)[0]
            elif any(a is None for a in answers):
                raise DeviceError("components must all answer or all defer in one round")
            else:
                if any(a not in (0, 1) for a in answers):
                    raise DeviceError("program outputs must be bits")
                out[i] = answers
            self.history.append((tuple(int(v) for v in x[i]), tuple(int(v) for v in out[i])))
        return out


def as_device(obj, scenario: Scenario | None = None):
    """Wrap strategies, behaviors and deterministic points as devices."""
    if isinstance(obj, QuantumStrategy):
        return HonestQuantumDevice(obj)
    if isinstance(obj, Behavior):
        return BehaviorDevice(obj)
    if isinstance(obj, DeterministicPoint):
        return DeterministicDevice(obj)
    if hasattr(obj, "play") and hasattr(obj, "parties"):
        return obj
    raise TypeError(f"cannot use {type(obj).__name__} as a device")


# Setting labels of the quantum-secure exponential protocol, in input order.
VV_LABELS = ("A0", "A1", "B0", "B1")


def vv_strategy() -> QuantumStrategy:
    """Honest strategy for the four-label CHSH variant.

    Both components share ``(|00> + |11>)/sqrt(2)`` and measure the same
    observable for the same label: ``(A,0) = X``, ``(A,1) = Z``,
    ``(B,0) = (X + Z)/sqrt(2)`` and ``(B,1) = (X - Z)/sqrt(2)``. Equal labels
    give equal outputs, ``(A,1)`` against ``(A,0)`` agrees with probability
    1/2, and ``(A,x)`` against ``(B,0)`` agrees with probability
    ``cos(pi/8)**2``.
    """
    r = 1 / math.sqrt(2)
    row = (SX, SZ, r * (SX + SZ), r * (SX - SZ))
    phi_plus = np.array([1, 0, 0, 1], dtype=complex) * r
    return QuantumStrategy(phi_plus, (row, row))
