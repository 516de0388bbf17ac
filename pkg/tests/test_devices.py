from __future__ import annotations

import itertools

import numpy as np
import pytest

from dirand.bell import local_bound, chsh
from dirand.protocols import (
    BehaviorDevice,
    DeterministicDevice,
    DeviceError,
    HonestQuantumDevice,
    MemoryProgramDevice,
    as_device,
    repeat_attack_device,
    vv_strategy,
)
from dirand.quantum import behavior_from_quantum, canonical_strategy
from dirand.scenario import DeterministicPoint, Scenario


def test_behavior_device_frequencies(rng):
    dev = HonestQuantumDevice(canonical_strategy("chsh"))
    b = dev.behavior
    x = np.tile([1, 1], (40_000, 1))
    out = dev.play(x, rng)
    idx = out[:, 0] * 2 + out[:, 1]
    freq = np.bincount(idx, minlength=4) / len(idx)
    np.testing.assert_allclose(freq, b.table[3], atol=0.01)


def test_noise_flips_outputs(rng):
    dev = DeterministicDevice(DeterministicPoint(Scenario.binary(2), ((0, 0), (0, 0))))
    noisy = BehaviorDevice(dev.points[0].behavior(), noise=0.1)
    out = noisy.play(np.zeros((20_000, 2), dtype=int), rng)
    assert out.mean() == pytest.approx(0.1, abs=0.01)


def test_deterministic_device_cycles_points(rng):
    s = Scenario.binary(2)
    dev = DeterministicDevice([DeterministicPoint(s, ((0, 0), (0, 0))), DeterministicPoint(s, ((1, 1), (1, 1)))])
    out = dev.play(np.zeros((4, 2), dtype=int), rng)
    assert out[:, 0].tolist() == [0, 1, 0, 1]
    dev.reset()
    assert dev.play(np.zeros((1, 2), dtype=int), rng)[0, 0] == 0


def test_input_validation(rng):
    dev = HonestQuantumDevice(canonical_strategy("chsh"))
    with pytest.raises(DeviceError):
        dev.play(np.array([[0, 2]]), rng)
    with pytest.raises(DeviceError):
        dev.play(np.array([[0, 0, 0]]), rng)


def _echo_program(party, r, own_input, history, lam):
    # Output depends on own input, past transcript and the round index only.
    past = sum(sum(o) for _, o in history)
    return (own_input + past + r + party) % 2


def test_memory_program_no_signaling_by_replay(rng):
    s = Scenario.binary(3)
    dev = MemoryProgramDevice(s, _echo_program)
    xs = rng.integers(0, 2, size=(30, 3))
    dev.play(xs, rng)
    transcript = list(dev.history)
    for r, (x, out) in enumerate(transcript):
        for k in range(3):
            for others in itertools.product((0, 1), repeat=2):
                alt = list(others)
                alt.insert(k, x[k])
                replay = MemoryProgramDevice(s, _echo_program, history=list(transcript[:r]))
                got = replay.play(np.array([alt]), rng)[0]
                assert got[k] == out[k]


def test_repeat_attack_device_no_signaling_by_replay(rng):
    dev = repeat_attack_device()
    xs = np.array([[1, 1, 1], [1, 1, 1], [1, 0, 0], [0, 0, 1]])
    dev.play(xs, rng)
    transcript = list(dev.history)
    # Answering rounds only: round 1 and 3 echo the previous outputs.
    for r in (1, 3):
        x, out = transcript[r]
        for k in range(3):
            for others in itertools.product((0, 1), repeat=2):
                alt = list(others)
                alt.insert(k, x[k])
                replay = repeat_attack_device()
                replay.history = list(transcript[:r])
                assert replay.play(np.array([alt]), rng)[0][k] == out[k]


def test_mixed_defer_rejected(rng):
    dev = MemoryProgramDevice(Scenario.binary(2), lambda p, r, x, h, lam: None if p == 0 else 1)
    with pytest.raises(DeviceError):
        dev.play(np.array([[0, 0]]), rng)


def test_defer_without_fallback(rng):
    dev = MemoryProgramDevice(Scenario.binary(2), lambda p, r, x, h, lam: None)
    with pytest.raises(DeviceError):
        dev.play(np.array([[0, 0]]), rng)


def test_as_device_wraps():
    assert isinstance(as_device(canonical_strategy("chsh")), HonestQuantumDevice)
    assert isinstance(as_device(local_bound(chsh())[1]), DeterministicDevice)
    with pytest.raises(TypeError):
        as_device(3)


def test_vv_strategy_correlations():
    b = behavior_from_quantum(vv_strategy())
    for x in range(4):
        assert b.prob((0, 0), (x, x)) + b.prob((1, 1), (x, x)) == pytest.approx(1.0)
    agree = lambda x, y: b.prob((0, 0), (x, y)) + b.prob((1, 1), (x, y))  # noqa: E731
    assert agree(1, 0) == pytest.approx(0.5)
    assert agree(0, 2) == pytest.approx(np.cos(np.pi / 8) ** 2)
    assert agree(1, 2) == pytest.approx(np.cos(np.pi / 8) ** 2)
