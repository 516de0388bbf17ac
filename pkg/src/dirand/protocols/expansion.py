"""Randomness expansion: CHSH-based protocols driven by a short seed."""

from __future__ import annotations

import logging
import math
from typing import Callable, Sequence

import numpy as np

from ..bell import CountTable, chsh, confidence_epsilon, estimate_from_counts, total_entropy_bound
from ..extractors import leftover_hash_length, toeplitz_extract, toeplitz_seed_length
from .config import ProtocolConfig
from .devices import as_device
from .seeds import FiniteBits, SeedSource, UniformBits
from .verdict import Verdict

logger = logging.getLogger(__name__)

# Input probabilities are quantized to multiples of 2**-16 so that the
# seed pool draws them exactly; q = 1/4 is represented without error.
INPUT_QUANTUM = 1 << 16
CHUNK_ROUNDS = 1 << 18
# CHSH setting bit carried by each label of VV_LABELS: (A,0), (A,1), (B,0), (B,1).
SETTING_BIT = (0, 1, 0, 1)


def _device(devices, parties: int, inputs: tuple[int, ...], what: str):
    if isinstance(devices, (list, tuple)):
        if len(devices) != 1:
            raise ValueError(f"{what} takes one {parties}-component device, got {len(devices)} objects")
        devices = devices[0]
    dev = as_device(devices)
    if dev.parties != parties:
        raise ValueError(f"{what} needs a device with {parties} components, got {dev.parties}")
    if tuple(dev.scenario.inputs) != inputs:
        raise ValueError(f"{what} needs inputs {inputs}, device has {tuple(dev.scenario.inputs)}")
    return dev


def quadratic_input_frequencies(q: float) -> list[int]:
    """Integer weights of the input pairs 00, 01, 10, 11 for bias ``q``.

    Pair 00 gets ``1 - 3q`` and the other three ``q`` each, quantized to
    multiples of ``2**-16``.
    """
    if not 0 < q <= 1 / 3:
        raise ValueError("q must lie in (0, 1/3]")
    fq = round(q * INPUT_QUANTUM)
    if fq < 1:
        raise ValueError(f"q = {q} is below the input resolution 2**-16")
    return [INPUT_QUANTUM - 3 * fq, fq, fq, fq]


def _recorded(seed: SeedSource, start: int) -> np.ndarray | None:
    try:
        return seed.consumed_bits()[start:]
    except RuntimeError:
        return None


def run_quadratic_expansion(
    cfg: ProtocolConfig,
    devices,
    rng: np.random.Generator,
    seed: SeedSource | None = None,
    extractor_seed: SeedSource | None = None,
) -> Verdict:
    """CHSH rounds with biased inputs, entropy certification and hashing.

    The seed supplies the inputs (category ``inputs``); the extractor seed
    (by default the same source) supplies the affine Toeplitz hash seed
    (category ``extractor_seed``). The output is the consumed seed ``t``
    followed by the extracted string.
    """
    dev = _device(devices, 2, (2, 2), "quadratic expansion")
    n = int(cfg.n)
    if n <= 0:
        raise ValueError("n must be positive")
    freqs = quadratic_input_frequencies(cfg.q)
    seed = SeedSource(UniformBits(rng), record=True) if seed is None else seed
    ext = seed if extractor_seed is None else extractor_seed
    start = seed.drawn

    idx = np.array([seed.categorical_freq(freqs, "inputs") for _ in range(n)], dtype=np.int64)
    inputs = np.stack([idx >> 1, idx & 1], axis=1)
    outputs = dev.play(inputs, rng)

    counts = np.zeros((4, 4), dtype=np.int64)
    np.add.at(counts, (idx, 2 * outputs[:, 0] + outputs[:, 1]), 1)
    p_in = np.array(freqs, dtype=float) / INPUT_QUANTUM
    q_eff = freqs[1] / INPUT_QUANTUM
    S_obs = estimate_from_counts(CountTable(chsh().scenario, counts, p_in), chsh())
    eps = confidence_epsilon(n, q_eff, cfg.I_q, cfg.delta)
    bound = total_entropy_bound(n, S_obs, eps)

    raw = outputs.reshape(-1).astype(np.uint8)
    ell = leftover_hash_length(bound, cfg.eps_ext) if bound > 0 else 0
    extracted = np.zeros(0, dtype=np.uint8)
    if ell > 0:
        hseed = ext.bits(toeplitz_seed_length(raw.size, ell), "extractor_seed")
        extracted = toeplitz_extract(raw, hseed, ell)
    t = _recorded(seed, start)
    flags: tuple[str, ...] = ()
    if t is None:
        t = np.zeros(0, dtype=np.uint8)
        flags = ("seed-not-recorded",)
    accepted = bound > 0
    return Verdict(
        protocol="quadratic",
        accepted=bool(accepted),
        abort_reason=None if accepted else "no certified entropy: S_obs - epsilon <= 2",
        rounds=n,
        inputs=inputs,
        outputs=outputs,
        output_bits=np.concatenate([t, extracted]),
        certified_entropy=float(bound),
        seed=seed.summary(),
        stats={
            "S_obs": float(S_obs),
            "epsilon": float(eps),
            "q_effective": q_eff,
            "entropy_bound": float(bound),
            "raw_length": int(raw.size),
            "extracted_length": int(extracted.size),
            "t_length": int(t.size),
            "extractor_seed_source": "shared" if ext is seed else "separate",
            "extractor_seed": ext.summary() if ext is not seed else None,
        },
        flags=flags,
    )


# Block protocols -----------------------------------------------------------------


def _block_protocol(
    name: str,
    dev,
    m: int,
    k: int,
    bell: np.ndarray,
    seed: SeedSource,
    rng: np.random.Generator,
    default_input: tuple[int, int],
    default_ok: Callable[[np.ndarray], np.ndarray],
    draw_bell: Callable[[], tuple[int, int]],
    bell_ok: Callable[[tuple[int, int], np.ndarray], bool],
    stats: dict,
) -> Verdict:
    """Play ``m`` blocks of ``k`` rounds and stop at the first failed block.

    ``default_ok`` receives outputs of shape (blocks, k, 2) for a run of
    consecutive non-Bell blocks and returns a pass flag per block;
    ``bell_ok`` judges one Bell block. Bell inputs are drawn only when the
    block is reached.
    """
    ins: list[np.ndarray] = []
    outs: list[np.ndarray] = []
    passed = bell_passed = 0
    abort = None
    per_chunk = max(1, CHUNK_ROUNDS // k)
    i = 0
    while i < m and abort is None:
        j = i
        while j < m and not bell[j]:
            j += 1
        for lo in range(i, j, per_chunk):
            hi = min(j, lo + per_chunk)
            nb = hi - lo
            x = np.tile(np.array(default_input, dtype=np.int64), (nb * k, 1))
            out = dev.play(x, rng)
            ok = default_ok(out.reshape(nb, k, 2))
            if not ok.all():
                bad = int(np.argmin(ok))
                ins.append(x[: (bad + 1) * k])
                outs.append(out[: (bad + 1) * k])
                passed += bad
                abort = f"non-Bell block {lo + bad} failed"
                break
            ins.append(x)
            outs.append(out)
            passed += nb
        if abort is not None or j >= m:
            break
        xy = draw_bell()
        x = np.tile(np.array(xy, dtype=np.int64), (k, 1))
        out = dev.play(x, rng)
        ins.append(x)
        outs.append(out)
        if not bell_ok(xy, out):
            abort = f"Bell block {j} with inputs {xy} failed"
            break
        passed += 1
        bell_passed += 1
        i = j + 1
    inputs = np.concatenate(ins) if ins else np.zeros((0, 2), dtype=np.int64)
    outputs = np.concatenate(outs) if outs else np.zeros((0, 2), dtype=np.int64)
    stats = dict(stats)
    stats.update(
        {
            "blocks_passed": passed,
            "bell_blocks": int(bell.sum()),
            "bell_blocks_passed": bell_passed,
            "seed_bits_used": int(seed.drawn),
        }
    )
    return Verdict(
        protocol=name,
        accepted=abort is None,
        abort_reason=abort,
        rounds=int(inputs.shape[0]),
        inputs=inputs.astype(np.uint8),
        outputs=outputs.astype(np.uint8),
        output_bits=outputs[:, 1].astype(np.uint8) if abort is None else None,
        seed=seed.summary(),
        stats=stats,
    )


def _choose_bell_blocks(seed: SeedSource, m: int, ell: int) -> np.ndarray:
    return np.array([seed.bernoulli(1, ell, "blocks") for _ in range(m)], dtype=bool)


def run_vv_exponential(
    cfg: ProtocolConfig,
    devices,
    rng: np.random.Generator,
    seed: SeedSource | None = None,
) -> Verdict:
    """Exponential expansion with Bell blocks chosen with probability 1/ell.

    Non-Bell blocks use inputs (0, 0) and fail when ``a xor b`` has more
    than ``ceil(0.16 k)`` ones. Bell blocks draw (x, y) from two seed bits
    and fail when ``a xor b`` differs from ``x and y`` in more than
    ``ceil(0.16 k)`` rounds. The output is Bob's output string.
    """
    dev = _device(devices, 2, (2, 2), "exponential expansion")
    p = cfg.vv_parameters()
    k, m, ell = p["k"], p["m"], p["ell"]
    seed = SeedSource(UniformBits(rng)) if seed is None else seed
    limit = math.ceil(0.16 * k)
    bell = _choose_bell_blocks(seed, m, ell)

    def default_ok(out):
        return (out[..., 0] ^ out[..., 1]).sum(axis=1) <= limit

    def draw():
        b = seed.bits(2, "inputs")
        return int(b[0]), int(b[1])

    def bell_ok(xy, out):
        return int(((out[:, 0] ^ out[:, 1]) != (xy[0] & xy[1])).sum()) <= limit

    return _block_protocol(
        "vv_exponential", dev, m, k, bell, seed, rng, (0, 0), default_ok, draw, bell_ok, {**p, "threshold": limit}
    )


def run_vv_quantum_secure(
    cfg: ProtocolConfig,
    devices,
    rng: np.random.Generator,
    seed: SeedSource | None = None,
) -> Verdict:
    """Quantum-secure variant with four setting labels per component.

    Inputs are label indices into ``VV_LABELS`` = (A,0), (A,1), (B,0), (B,1).
    Non-Bell blocks play (A,0)/(A,0) and need ``a = b`` in every round.
    Bell blocks draw ``x`` in {(A,0), (A,1)} and ``y`` in {(A,0), (B,0)} from
    two seed bits and pass when

    * ``x = y`` and ``a = b`` in every round, or
    * ``y = (B,0)`` and ``a xor b = x and y`` in more than ``ceil(0.84 k)``
      rounds, or
    * ``x = (A,1)``, ``y = (A,0)`` and ``a``, ``b`` differ in between
      ``ceil(0.49 k)`` and ``ceil(0.51 k)`` rounds.

    In ``x and y`` the labels count as their CHSH setting bits, so (B,0)
    contributes 0.
    """
    dev = _device(devices, 2, (4, 4), "quantum-secure expansion")
    p = cfg.vv_quantum_parameters()
    k, m, ell = p["k"], p["m"], p["ell"]
    seed = SeedSource(UniformBits(rng)) if seed is None else seed
    hi_agree = math.ceil(0.84 * k)
    lo_diff, hi_diff = math.ceil(0.49 * k), math.ceil(0.51 * k)
    bell = _choose_bell_blocks(seed, m, ell)

    def default_ok(out):
        return np.all(out[..., 0] == out[..., 1], axis=1)

    def draw():
        b = seed.bits(2, "inputs")
        return int(b[0]), 0 if b[1] == 0 else 2

    def bell_ok(xy, out):
        x, y = xy
        a, b = out[:, 0], out[:, 1]
        if x == y:
            return bool(np.all(a == b))
        if y == 2:
            target = SETTING_BIT[x] & SETTING_BIT[y]
            return int(((a ^ b) == target).sum()) > hi_agree
        if x == 1 and y == 0:
            return lo_diff <= int((a != b).sum()) <= hi_diff
        return False

    thresholds = {"agree_more_than": hi_agree, "differ_between": [lo_diff, hi_diff]}
    return _block_protocol(
        "vv_quantum_secure", dev, m, k, bell, seed, rng, (0, 0), default_ok, draw, bell_ok, {**p, **thresholds}
    )


# Concatenation ---------------------------------------------------------------------

SCHEDULES = ("fehr", "input-secure")


def run_concatenated_expansion(
    schedule: str,
    pool: Sequence,
    cfg: ProtocolConfig,
    rng: np.random.Generator,
    inner: Callable[..., Verdict] = run_quadratic_expansion,
) -> Verdict:
    """Alternate devices, feeding each round's output string to the next.

    Round 0 runs on a fresh uniform seed. Round ``i >= 1`` runs device
    ``i mod len(pool)`` with the previous output string ``s_i`` as its only
    input seed and outputs ``s_{i+1} = s_i + extracted``. In ``"fehr"`` mode
    the extractor seeds of rounds ``i >= 1`` come from a reserve of
    ``cfg.reserve_bits`` fresh bits set aside before round 0; in
    ``"input-secure"`` mode they come from ``s_i`` as well, so no fresh bit
    is drawn after round 0.
    """
    if schedule not in SCHEDULES:
        raise ValueError(f"schedule must be one of {SCHEDULES}")
    pool = list(pool)
    if len(pool) < 2:
        raise ValueError("concatenation needs a pool of at least two devices")
    rounds = 3 if cfg.rounds is None else int(cfg.rounds)
    if rounds < 1:
        raise ValueError("at least one round is required")

    fresh = SeedSource(UniformBits(rng), record=True)
    reserve = None
    if schedule == "fehr":
        reserve = SeedSource(FiniteBits(fresh.bits(int(cfg.reserve_bits), "extractor_reserve")))
    per_round: list[dict] = []
    lengths: list[int] = []
    fresh_after: list[int] = []
    s = None
    abort = None
    for i in range(rounds):
        dev = pool[i % len(pool)]
        if i == 0:
            src = fresh
            ext = fresh
        else:
            src = SeedSource(FiniteBits(s), record=True)
            ext = reserve if schedule == "fehr" else src
        logger.info("concatenation round %d on device %d", i, i % len(pool))
        v = inner(cfg, dev, rng, seed=src, extractor_seed=ext)
        t_len = v.stats["t_length"]
        extracted = v.output_bits[t_len:]
        s = v.output_bits if i == 0 else np.concatenate([s, extracted])
        lengths.append(int(s.size))
        fresh_after.append(int(fresh.drawn))
        per_round.append(
            {
                "round": i,
                "device": i % len(pool),
                "accepted": v.accepted,
                "input_length": int(src.supply.bits.size) if i else int(t_len),
                "output_length": int(s.size),
                "extracted_length": int(extracted.size),
                "seed": src.summary() if i else None,
                "seed_balanced": src.balanced(),
                "S_obs": v.stats.get("S_obs"),
            }
        )
        if not v.accepted:
            abort = f"round {i}: {v.abort_reason}"
            break
    increasing = all(r["output_length"] > r["input_length"] for r in per_round)
    stats = {
        "schedule": schedule,
        "rounds_run": len(per_round),
        "output_lengths": lengths,
        "strictly_increasing": increasing,
        "fresh_drawn_after_round": fresh_after,
        "reserve": reserve.summary() if reserve is not None else None,
        "per_round": per_round,
    }
    return Verdict(
        protocol=f"concatenated-{schedule}",
        accepted=abort is None,
        abort_reason=abort,
        rounds=len(per_round),
        output_bits=s,
        seed=fresh.summary(),
        stats=stats,
    )
