"""Qubit strategies with one projective two-outcome measurement per input.

Each party holds one qubit. A measurement is either an angle ``theta``,
meaning the equatorial observable ``cos(theta) X + sin(theta) Y``, or an
explicit 2x2 Hermitian matrix with eigenvalues +-1. Outcome ``a`` of
observable ``O`` has projector ``(I + (-1)**a O) / 2``; a per-(party, input)
relabel flag swaps the two outcomes.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from .scenario import Behavior, Scenario

I2 = np.eye(2, dtype=complex)
SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)

Measurement = Union[float, np.ndarray]


def equatorial(theta: float) -> np.ndarray:
    return math.cos(theta) * SX + math.sin(theta) * SY


def observable(m: Measurement) -> np.ndarray:
    if isinstance(m, (int, float, np.floating, np.integer)):
        return equatorial(float(m))
    return np.asarray(m, dtype=complex)


def _check_observable(O: np.ndarray, tol: float) -> None:
    if O.shape != (2, 2):
        raise ValueError("observables must be 2x2")
    if np.abs(O - O.conj().T).max() > tol:
        raise ValueError("observable is not Hermitian")
    if np.abs(O @ O - I2).max() > tol:
        raise ValueError("observable must square to the identity (eigenvalues +-1)")


def ghz_state(n: int) -> np.ndarray:
    psi = np.zeros(2**n, dtype=complex)
    psi[0] = psi[-1] = 1 / math.sqrt(2)
    return psi


def singlet_state() -> np.ndarray:
    return np.array([0, 1, -1, 0], dtype=complex) / math.sqrt(2)


@dataclass(frozen=True)
class QuantumStrategy:
    """A pure n-qubit state plus measurements and relabel flags per party."""

    state: np.ndarray = field(repr=False)
    measurements: tuple[tuple[Measurement, ...], ...]
    flips: tuple[tuple[bool, ...], ...] | None = None
    tol: float = 1e-9

    def __post_init__(self):
        state = np.asarray(self.state, dtype=complex).reshape(-1)
        n = len(self.measurements)
        if n == 0 or state.size != 2**n:
            raise ValueError(f"state of dimension {state.size} does not fit {n} qubits")
        if abs(np.vdot(state, state).real - 1.0) > self.tol:
            raise ValueError("state is not normalized")
        meas = tuple(tuple(row) for row in self.measurements)
        for row in meas:
            if not row:
                raise ValueError("every party needs at least one measurement")
            for m in row:
                _check_observable(observable(m), self.tol)
        flips = self.flips
        if flips is None:
            flips = tuple((False,) * len(row) for row in meas)
        flips = tuple(tuple(bool(f) for f in row) for row in flips)
        if [len(r) for r in flips] != [len(r) for r in meas]:
            raise ValueError("flip flags must match the measurement layout")
        state.setflags(write=False)
        object.__setattr__(self, "state", state)
        object.__setattr__(self, "measurements", meas)
        object.__setattr__(self, "flips", flips)

    @property
    def parties(self) -> int:
        return len(self.measurements)

    @property
    def scenario(self) -> Scenario:
        return Scenario(tuple(len(r) for r in self.measurements), (2,) * self.parties)

    def projectors(self, party: int, x: int) -> np.ndarray:
        """Array ``P[a]`` of the two outcome projectors, flags applied."""
        O = observable(self.measurements[party][x])
        P = np.stack([(I2 + O) / 2, (I2 - O) / 2])
        if self.flips[party][x]:
            P = P[::-1]
        return P

    def to_dict(self) -> dict:
        def enc(m):
            if isinstance(m, (int, float, np.floating, np.integer)):
                return float(m)
            O = np.asarray(m, dtype=complex)
            return [[[float(v.real), float(v.imag)] for v in row] for row in O]

        return {
            "state": [[float(v.real), float(v.imag)] for v in self.state],
            "measurements": [[enc(m) for m in row] for row in self.measurements],
            "flips": [list(r) for r in self.flips],
        }

    @classmethod
    def from_dict(cls, d: dict) -> QuantumStrategy:
        def dec(m):
            if isinstance(m, (int, float)):
                return float(m)
            return np.array([[complex(re, im) for re, im in row] for row in m])

        state = np.array([complex(re, im) for re, im in d["state"]])
        meas = tuple(tuple(dec(m) for m in row) for row in d["measurements"])
        flips = d.get("flips")
        return cls(state, meas, None if flips is None else tuple(tuple(r) for r in flips))

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def behavior_from_quantum(q: QuantumStrategy) -> Behavior:
    """Born-rule probabilities for every input tuple."""
    s = q.scenario
    n = q.parties
    if n > 8:
        raise ValueError("at most 8 parties are supported")
    psi = q.state.reshape((2,) * n)
    letters = "abcdefghijklmnopqrstuvwx"
    outs, rows, cols = letters[:n], letters[n : 2 * n], letters[2 * n : 3 * n]
    # phi[a.., i..] = prod_k P_k[a_k, i_k, j_k] psi[j..]
    spec = ",".join(f"{outs[k]}{rows[k]}{cols[k]}" for k in range(n)) + f",{cols}->{outs}{rows}"
    table = np.zeros(s.shape)
    for idx, x in enumerate(s.input_tuples()):
        projs = [q.projectors(k, x[k]) for k in range(n)]
        phi = np.einsum(spec, *projs, psi, optimize=True)
        probs = (np.abs(phi) ** 2).reshape(2**n, 2**n).sum(axis=1)
        table[idx] = probs
    return Behavior(s, table)


def parity_expectation(state: np.ndarray, ops: Sequence[np.ndarray]) -> float:
    """<psi| O_1 x ... x O_n |psi> by building the full operator."""
    full = np.array([[1.0 + 0j]])
    for O in ops:
        full = np.kron(full, np.asarray(O, dtype=complex))
    psi = np.asarray(state, dtype=complex)
    return float(np.vdot(psi, full @ psi).real)


def ghz_parity_expectation(angles: Sequence[float]) -> float:
    """Expected parity observable of equatorial measurements on a GHZ state."""
    return math.cos(float(sum(angles)))


def _chsh_strategy() -> QuantumStrategy:
    r = 1 / math.sqrt(2)
    alice = (SX, SZ)
    bob = (r * (-SX - SZ), r * (-SX + SZ))
    return QuantumStrategy(singlet_state(), (alice, bob))


def _ghz3_strategy() -> QuantumStrategy:
    # Input 0 measures Y, input 1 measures X; party 0 relabels both outcomes
    # so that the output parity matches the AND of the three inputs.
    meas = ((math.pi / 2, 0.0),) * 3
    flips = ((True, True), (False, False), (False, False))
    return QuantumStrategy(ghz_state(3), meas, flips)


def _mermin5_strategy() -> QuantumStrategy:
    return QuantumStrategy(ghz_state(5), ((math.pi / 2, 0.0),) * 5)


def _brandao4_strategy() -> QuantumStrategy:
    # Angles give parity 1 on weight-one inputs (3*t0 + t1 = pi) and
    # parity 0 on weight-three inputs (t0 + 3*t1 = 0).
    return QuantumStrategy(ghz_state(4), ((3 * math.pi / 8, -math.pi / 8),) * 4)


CANONICAL = {
    "chsh": _chsh_strategy,
    "ghz3": _ghz3_strategy,
    "mermin5": _mermin5_strategy,
    "brandao4": _brandao4_strategy,
}


def canonical_strategy(name: str) -> QuantumStrategy:
    try:
        return CANONICAL[name]()
    except KeyError:
        raise KeyError(f"unknown strategy {name!r}; choose from {sorted(CANONICAL)}") from None
