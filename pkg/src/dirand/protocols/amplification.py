"""Randomness amplification from weak sources with Bell-tested devices."""

from __future__ import annotations

import logging
import math
from typing import Callable, Sequence

import numpy as np

from ..bell import GHZ_INPUTS, brandao4_penalty, mermin5_penalty
from ..extractors import deor, hadamard
from ..hashcover import EXHAUSTIVE_MAX_N, HashFamily, verify_cover
from ..sources import SourceModel, min_entropy
from .config import ProtocolConfig
from .devices import as_device
from .seeds import SeedSource, SourceBits
from .verdict import Verdict

logger = logging.getLogger(__name__)


def _is_power_of_two(v: int) -> bool:
    return v >= 1 and v & (v - 1) == 0


def _bits_to_index(bits: np.ndarray) -> int:
    v = 0
    for b in bits:
        v = (v << 1) | int(b)
    return v


def _penalties(fn: Callable[[tuple, tuple], int], outputs: np.ndarray, inputs: np.ndarray) -> np.ndarray:
    return np.array([fn(tuple(a), tuple(x)) for a, x in zip(outputs.tolist(), inputs.tolist())], dtype=np.int64)


def _play_each(devices, inputs: np.ndarray, parties: int, rng: np.random.Generator, what: str) -> np.ndarray:
    """Play row ``i`` on device ``i`` (a sequence) or all rows on one device."""
    if isinstance(devices, (list, tuple)):
        if len(devices) != inputs.shape[0]:
            raise ValueError(f"{what} needs one device per round: {inputs.shape[0]} rounds, {len(devices)} devices")
        out = []
        for d, x in zip(devices, inputs):
            dev = as_device(d)
            if dev.parties != parties:
                raise ValueError(f"{what} needs {parties}-component devices")
            out.append(dev.play(x[None, :], rng)[0])
        return np.array(out, dtype=np.int64).reshape(-1, parties)
    dev = as_device(devices)
    if dev.parties != parties:
        raise ValueError(f"{what} needs {parties}-component devices, got {dev.parties}")
    return dev.play(inputs, rng)


def _check_sv(sv: SourceModel) -> None:
    if sv.kind != "sv":
        raise ValueError("this protocol takes an SV source")
    if not sv.epsilon < 0.5:
        raise ValueError("the SV parameter must be below 1/2")


# Many-device SV amplification ---------------------------------------------------------


def majority(bits: Sequence[int]) -> int:
    """Majority of the first three bits."""
    return int(sum(int(b) for b in list(bits)[:3]) >= 2)


def mermin5_valid(x: Sequence[int]) -> bool:
    """Input quintuplets that appear in the five-party Mermin test."""
    return sum(int(v) for v in x) in (1, 3, 5)


def run_gallego_amplification(
    cfg: ProtocolConfig,
    devices,
    sv: SourceModel,
    rng: np.random.Generator,
    distill: Callable[[np.ndarray], np.ndarray] | None = None,
) -> Verdict:
    """SV amplification with ``N`` five-component Mermin devices.

    1. ``5N`` SV bits give ``N`` input quintuplets; every quintuplet is
       played on its device.
    2. Quintuplets with weight outside {1, 3, 5} are discarded; fewer than
       ``N/3`` survivors abort.
    3. The first ``N_b * N_d`` survivors form ``N_b`` blocks of ``N_d``; the
       distillation block is picked with ``log2(N_b)`` SV bits.
    4. Any failed parity test in a non-distilling block aborts.
    5. The majority bits of the distillation block are passed to
       ``distill``. Without one, the majority vector itself is the output
       and the verdict is flagged ``undistilled``.
    """
    _check_sv(sv)
    N_b, N_d = int(cfg.N_b), int(cfg.N_d)
    if not _is_power_of_two(N_b):
        raise ValueError("N_b must be a power of two")
    if N_d < 1:
        raise ValueError("N_d must be at least 1")
    N = 4 * N_b * N_d if cfg.N is None else int(cfg.N)
    if N < 1:
        raise ValueError("N must be positive")
    seed = SeedSource(SourceBits(sv, rng))
    xs = seed.bits(5 * N, "inputs").reshape(N, 5).astype(np.int64)
    outs = _play_each(devices, xs, 5, rng, "many-device amplification")

    valid = np.array([mermin5_valid(x) for x in xs])
    kept = int(valid.sum())
    stats = {"N": N, "N_b": N_b, "N_d": N_d, "valid": kept, "discarded": N - kept}

    def verdict(accepted, reason, out=None, flags=()):
        return Verdict(
            protocol="gallego",
            accepted=accepted,
            abort_reason=reason,
            rounds=N,
            inputs=xs,
            outputs=outs,
            output_bits=out,
            seed=seed.summary(),
            stats=stats,
            flags=tuple(flags),
        )

    if 3 * kept < N:
        return verdict(False, f"only {kept} of {N} quintuplets are valid (fewer than N/3)")
    if kept < N_b * N_d:
        return verdict(False, f"{kept} valid quintuplets cannot fill {N_b} blocks of {N_d}")
    vx = xs[valid][: N_b * N_d].reshape(N_b, N_d, 5)
    va = outs[valid][: N_b * N_d].reshape(N_b, N_d, 5)
    choice = _bits_to_index(seed.bits(int(math.log2(N_b)), "block_choice")) if N_b > 1 else 0
    stats["distillation_block"] = choice
    for j in range(N_b):
        if j == choice:
            continue
        pen = _penalties(mermin5_penalty, va[j], vx[j])
        if pen.any():
            stats["failed_block"] = j
            return verdict(False, f"block {j} does not maximally violate the Mermin test")
    maj = np.array([majority(a) for a in va[choice]], dtype=np.uint8)
    if distill is None:
        return verdict(True, None, maj, flags=("undistilled",))
    return verdict(True, None, np.asarray(distill(maj), dtype=np.uint8))


def gallego_bias_bound(N_b: float, N_d: int, epsilon: float, alpha: float, beta: float) -> float:
    """Guessing bound ``1/2 + (3 sqrt(N_d)/2) [alpha^N_d + 2 N_b^log2(1/2+eps) (32 beta (1/2-eps)^-5)^N_d]``.

    Evaluated in log space; returns ``inf`` when the value overflows.
    """
    if not 0 < alpha < 1 < beta:
        raise ValueError("need 0 < alpha < 1 < beta")
    if not 0 <= epsilon < 0.5:
        raise ValueError("epsilon must lie in [0, 1/2)")
    if N_d < 1 or int(N_d) != N_d:
        raise ValueError("N_d must be a positive integer")
    if N_b < 1:
        raise ValueError("N_b must be at least 1")
    log2_second = 1 + math.log2(N_b) * math.log2(0.5 + epsilon) + N_d * (
        math.log2(32 * beta) - 5 * math.log2(0.5 - epsilon)
    )
    first = alpha**N_d
    second = math.inf if log2_second > 1000 else 2.0**log2_second
    return 0.5 + 1.5 * math.sqrt(N_d) * (first + second)


def gallego_block_count(N_d: int, epsilon: float, beta: float) -> float:
    """``N_b = (32 beta (1/2 - eps)^-5)^(2 N_d / |log2(1/2 + eps)|)`` as a float."""
    if not 0 <= epsilon < 0.5 or beta <= 1:
        raise ValueError("need 0 <= epsilon < 1/2 and beta > 1")
    base = math.log2(32 * beta) - 5 * math.log2(0.5 - epsilon)
    log2_nb = base * 2 * N_d / abs(math.log2(0.5 + epsilon))
    return math.inf if log2_nb > 1000 else 2.0**log2_nb


# Eight-device SV amplification ---------------------------------------------------------


def brandao_threshold(sv_epsilon: float, delta_const: float, mu_const: float) -> float:
    """Abort threshold ``(1/2 - sv_epsilon)^4 (delta_const / 2) (1 - mu_const)``."""
    return (0.5 - sv_epsilon) ** 4 * (delta_const / 2) * (1 - mu_const)


def run_brandao_amplification(
    cfg: ProtocolConfig,
    devices: Sequence,
    sv: SourceModel,
    rng: np.random.Generator,
) -> Verdict:
    """SV amplification with two four-component devices.

    Device ``j`` plays ``n N_j`` rounds on SV-chosen input quadruples, split
    into ``N_j`` blocks of ``n``. One block per device is picked with
    ``log2 N_j`` SV bits; the empirical Bell term ``L_j`` of each picked block
    must not exceed :func:`brandao_threshold`. The outputs of the two picked
    blocks are then combined by the DEOR two-source extractor.
    """
    _check_sv(sv)
    if not isinstance(devices, (list, tuple)) or len(devices) != 2:
        raise ValueError("eight-device amplification takes exactly two four-component devices")
    devs = [as_device(d) for d in devices]
    if any(d.parties != 4 for d in devs):
        raise ValueError("each device needs four components")
    n = int(cfg.n)
    Ns = [cfg.N_b if cfg.N1 is None else cfg.N1, cfg.N_b if cfg.N2 is None else cfg.N2]
    if n < 1 or any(not _is_power_of_two(int(v)) for v in Ns):
        raise ValueError("block length must be positive and block counts powers of two")
    sv_eps = sv.epsilon if cfg.sv_epsilon is None else cfg.sv_epsilon
    thr = brandao_threshold(sv_eps, cfg.delta_const, cfg.mu_const)
    seed = SeedSource(SourceBits(sv, rng))

    ins, outs = [], []
    for d, Nj in zip(devs, Ns):
        u = seed.bits(4 * n * int(Nj), "inputs").reshape(-1, 4).astype(np.int64)
        ins.append(u)
        outs.append(d.play(u, rng))
    choices, L = [], []
    for u, x, Nj in zip(ins, outs, Ns):
        c = _bits_to_index(seed.bits(int(math.log2(Nj)), "block_choice")) if Nj > 1 else 0
        choices.append(c)
        sl = slice(c * n, (c + 1) * n)
        L.append(float(_penalties(brandao4_penalty, x[sl], u[sl]).mean()))
    stats = {"n": n, "N1": int(Ns[0]), "N2": int(Ns[1]), "blocks": choices, "L": L, "threshold": thr}
    accepted = all(v <= thr for v in L)
    out = None
    if accepted:
        xa = outs[0][choices[0] * n : (choices[0] + 1) * n].reshape(-1)
        xb = outs[1][choices[1] * n : (choices[1] + 1) * n].reshape(-1)
        out = deor(xa, xb, int(cfg.output_bits))
    return Verdict(
        protocol="brandao",
        accepted=accepted,
        abort_reason=None if accepted else f"Bell term above threshold {thr:g}: L = {L}",
        rounds=int(sum(int(v) for v in Ns) * n),
        inputs=np.concatenate(ins),
        outputs=np.concatenate(outs),
        output_bits=out,
        seed=seed.summary(),
        stats=stats,
        flags=("deor-extractor",),
    )


# Block-source amplification ---------------------------------------------------------


def rounds_needed(gamma: float, f_eps: float) -> int:
    """Smallest integer ``l`` with ``l > log(gamma) / log(f_eps)``."""
    if not 0 < gamma < 1 or not 0 < f_eps < 1:
        raise ValueError("gamma and f(eps) must lie in (0, 1)")
    return math.floor(math.log(gamma) / math.log(f_eps)) + 1


def _source_entropy(source: SourceModel) -> float:
    if source.kind in ("block", "min_entropy"):
        return float(source.k)
    if source.kind == "flat":
        return math.log2(len(source.support))
    return min_entropy(source.distribution())


def ghz_wins(inputs: np.ndarray, outputs: np.ndarray) -> np.ndarray:
    """Per-round GHZ win flags: output parity equals the AND of the inputs."""
    par = outputs.sum(axis=1) % 2
    return par == np.prod(inputs, axis=1)


def run_bouda_block_amplification(
    cfg: ProtocolConfig,
    family: HashFamily,
    devices,
    source: SourceModel,
    rng: np.random.Generator,
) -> Verdict:
    """Block-source amplification with one GHZ device per hash function.

    Each round takes a fresh n-bit block ``r``; device ``i`` gets the GHZ
    input ``GHZ_INPUTS[h_i(r)]``. Any lost GHZ round aborts; otherwise the
    round bit is the XOR of all first-component outputs. The protocol
    output is the XOR of the round bits over ``cfg.rounds`` rounds
    (default: :func:`rounds_needed` from ``gamma_cheat`` and ``f_eps`` when
    both are set, else one round).

    ``devices`` is either a callable ``(round, member) -> device``, a
    sequence with one device per member (reused every round), or a single
    device used for every member.
    """
    n = family.n
    if source.n != n:
        raise ValueError(f"family hashes {n}-bit blocks but the source emits {source.n}-bit blocks")
    if _source_entropy(source) < 2 - 1e-9:
        raise ValueError("the source needs min-entropy at least 2 per block")
    if cfg.check_cover:
        res = verify_cover(family, sampled=n > EXHAUSTIVE_MAX_N)
        if not res.ok:
            raise ValueError(f"family is not covering; quadruple {res.counterexample} is never separated")
    if cfg.rounds is not None:
        rounds = int(cfg.rounds)
    elif cfg.gamma_cheat is not None and cfg.f_eps is not None:
        rounds = rounds_needed(cfg.gamma_cheat, cfg.f_eps)
    else:
        rounds = 1
    if rounds < 1:
        raise ValueError("at least one round is required")

    if callable(devices) and not hasattr(devices, "play"):
        get = devices
    elif isinstance(devices, (list, tuple)):
        if len(devices) != family.size:
            raise ValueError(f"need one device per family member ({family.size}), got {len(devices)}")
        fixed = [as_device(d) for d in devices]
        get = lambda r, i: fixed[i]  # noqa: E731
    else:
        single = as_device(devices)
        get = lambda r, i: single  # noqa: E731

    seed = SeedSource(SourceBits(source, rng))
    table = np.array(GHZ_INPUTS, dtype=np.int64)
    all_in, all_out = [], []
    bit = 0
    abort = None
    played = 0
    for r in range(rounds):
        v = _bits_to_index(seed.bits(n, "inputs"))
        z = family.members[:, v]
        x = table[z]
        out = np.zeros_like(x)
        for i in range(family.size):
            dev = as_device(get(r, i))
            if dev.parties != 3:
                raise ValueError("block-source amplification needs three-component devices")
            out[i] = dev.play(x[i][None, :], rng)[0]
        all_in.append(x)
        all_out.append(out)
        played += 1
        wins = ghz_wins(x, out)
        if not wins.all():
            abort = f"round {r}: device {int(np.argmin(wins))} lost the GHZ test"
            break
        bit ^= int(out[:, 0].sum() % 2)
    return Verdict(
        protocol="bouda",
        accepted=abort is None,
        abort_reason=abort,
        rounds=played,
        inputs=np.concatenate(all_in),
        outputs=np.concatenate(all_out),
        output_bits=np.array([bit], dtype=np.uint8) if abort is None else None,
        seed=seed.summary(),
        stats={"family_size": family.size, "rounds_planned": rounds, "rounds_played": played},
    )


# Single-device min-entropy amplification ------------------------------------------------


def single_device_inputs(x_bits: Sequence[int]) -> np.ndarray:
    """Round inputs ``(R1, R2, R1 xor R2 xor 1)`` from consecutive bit pairs."""
    x = np.asarray(x_bits, dtype=np.int64).reshape(-1, 2)
    return np.stack([x[:, 0], x[:, 1], x[:, 0] ^ x[:, 1] ^ 1], axis=1)


def run_single_device_protocol(
    cfg: ProtocolConfig,
    device,
    source: SourceModel,
    rng: np.random.Generator,
) -> Verdict:
    """n GHZ rounds on one device with inputs from a single 2n-bit string.

    Any lost round aborts; otherwise the output bit is the Hadamard
    extractor of the first and second components' output strings.
    """
    dev = as_device(device)
    if dev.parties != 3:
        raise ValueError("the single-device protocol needs a three-component device")
    n = int(cfg.n)
    if n < 1 or source.n != 2 * n:
        raise ValueError(f"the source must emit 2n = {2 * n} bits")
    seed = SeedSource(SourceBits(source, rng))
    xs = single_device_inputs(seed.bits(2 * n, "inputs"))
    outs = dev.play(xs, rng)
    wins = ghz_wins(xs, outs)
    accepted = bool(wins.all())
    out = np.array([hadamard(outs[:, 0], outs[:, 1])], dtype=np.uint8) if accepted else None
    return Verdict(
        protocol="single_device",
        accepted=accepted,
        abort_reason=None if accepted else f"round {int(np.argmin(wins))} lost the GHZ test",
        rounds=n,
        inputs=xs,
        outputs=outs,
        output_bits=out,
        seed=seed.summary(),
        stats={"rounds_lost": int((~wins).sum())},
    )
