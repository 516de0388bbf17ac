"""Command-line front end: JSON reports on stdout, logs on stderr.

Per-trial generators come from ``SeedSequence([seed, trial])``, so trial
``t`` of a batch is reproducible on its own. ``DIRAND_THREADS`` caps the
number of trials run in parallel (default 1); reports are always ordered
by trial index.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import protocols as P
from .bell import builtin, evaluate, local_bound
from .extractors import TWO_SOURCE, check_deor_ranks, claimed_bound, worst_case_distance
from .hashcover import CoverConstructionError, HashFamily, construct_cover, verify_cover
from .polytope import GuessingQuery, guessing_probability_bound, majority_of_first_three, ns_optimize
from .quantum import behavior_from_quantum, canonical_strategy
from .scenario import Behavior, DeterministicPoint, Scenario
from .sources import SourceModel

logger = logging.getLogger("dirand")

# Canonical strategy evaluated for each built-in expression.
STRATEGY_FOR = {"chsh": "chsh", "chsh_game": "chsh", "ghz_game": "ghz3", "mermin5": "mermin5", "brandao4": "brandao4"}


class CliError(Exception):
    """Bad input file, shape or option; reported with exit code 1."""


def trial_rng(seed: int, trial: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, trial]))


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("DIRAND_THREADS", "1")))
    except ValueError:
        return 1


def _read_json(path: str) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise CliError(f"{path} is not valid JSON: {exc}") from exc


def _ints(text: str) -> tuple[int, ...]:
    return tuple(int(v) for v in text.replace(",", " ").split())


# bell / guess ---------------------------------------------------------------------


def cmd_bell(args) -> dict:
    expr = builtin(args.expression)
    if args.action == "eval":
        if not args.file:
            raise CliError("bell eval needs a behavior file")
        try:
            b = Behavior.from_dict(_read_json(args.file))
        except (KeyError, ValueError) as exc:
            raise CliError(f"malformed behavior: {exc}") from exc
        if b.scenario != expr.scenario:
            raise CliError(f"behavior scenario does not match {expr.name}")
        return {"expression": expr.name, "value": evaluate(expr, b)}
    local, _ = local_bound(expr)
    quantum = None
    if args.expression in STRATEGY_FOR:
        quantum = evaluate(expr, behavior_from_quantum(canonical_strategy(STRATEGY_FOR[args.expression])))
    ns = ns_optimize(expr).value
    return {"expression": expr.name, "sense": expr.sense, "local": local, "quantum": quantum, "ns": ns}


def cmd_guess(args) -> dict:
    expr = builtin(args.expression)
    s = expr.scenario
    inputs = _ints(args.inputs) if args.inputs else (0,) * s.parties
    if args.target == "maj":
        q = GuessingQuery.function(expr, args.value, inputs, majority_of_first_three, args.guess)
    elif args.target.startswith("outputs:"):
        q = GuessingQuery.outcome(expr, args.value, inputs, _ints(args.target.split(":", 1)[1]))
    else:
        raise CliError("target must be 'maj' or 'outputs:a1,a2,...'")
    res = guessing_probability_bound(q)
    return {"expression": expr.name, "fixed_value": args.value, "inputs": list(inputs), "target": args.target,
            "bound": res.value, "relaxation": res.relaxation}


# extractor / hash-cover ---------------------------------------------------------------


def cmd_extractor(args) -> dict:
    if args.action == "deor-ranks":
        ok, count = check_deor_ranks(args.n)
        return {"n": args.n, "passed": ok, "subsets_checked": count}
    if args.extractor not in TWO_SOURCE:
        raise CliError(f"extractor must be one of {TWO_SOURCE}")
    rows = []
    for kx in range(1, args.n + 1):
        for ky in range(1, args.n + 1):
            if args.extractor != "deor" and claimed_bound(args.extractor, args.n, kx, ky) >= 1 and not args.all:
                continue
            rep = worst_case_distance(args.extractor, args.n, kx, ky, args.m, sampled=args.sampled, seed=args.seed)
            rows.append(rep.to_dict())
    return {"extractor": args.extractor, "n": args.n, "passed": all(r["passed"] for r in rows), "reports": rows}


def cmd_hash_cover(args) -> dict:
    if args.action == "verify":
        fam = HashFamily.from_dict(_read_json(args.file))
        res = verify_cover(fam, sampled=args.sampled)
        return {"n": fam.n, "size": fam.size, "ok": res.ok, "counterexample": res.counterexample,
                "checked": res.checked, "sampled": res.sampled}
    try:
        fam = construct_cover(args.n, np.random.default_rng(args.seed), target_size=args.target_size)
    except CoverConstructionError as exc:
        raise CliError(f"{exc} (partial family has {exc.partial.size} members)") from exc
    if args.out:
        Path(args.out).write_text(fam.to_json())
    res = verify_cover(fam, sampled=args.n > 5)
    out = {"n": fam.n, "size": fam.size, "ok": res.ok, "sampled": res.sampled}
    if not args.out:
        out["family"] = fam.to_dict()
    return out


# tree ------------------------------------------------------------------------------


def cmd_tree(args) -> dict:
    if args.action == "bounds":
        return {"bounds": [P.single_device_bounds(R, args.n).to_dict() for R in args.R]}
    rows = []
    for n in args.n_values:
        row = {"n": n, "leaves": P.tree_max_leaves(n), "rate": P.tree_rate(P.tree_max_leaves(n), n)}
        if n % 2 == 0 and n > 0:
            row["repeat_leaves"] = P.tree_max_repeat_leaves(n)
            row["repeat_rate"] = P.tree_rate(row["repeat_leaves"], n)
        rows.append(row)
    return {"trees": rows, "R_H": P.R_HONEST}


# protocol --------------------------------------------------------------------------


def build_device(spec: dict):
    kind = spec.get("kind", "honest")
    if kind in ("honest", "noisy"):
        name = spec.get("strategy", "chsh")
        strat = P.vv_strategy() if name == "vv" else canonical_strategy(name)
        return P.HonestQuantumDevice(strat, float(spec.get("noise", 0.0)))
    if kind == "deterministic":
        s = Scenario.from_dict(spec["scenario"]) if "scenario" in spec else Scenario.binary(len(spec["assignment"]))
        return P.DeterministicDevice(DeterministicPoint(s, tuple(tuple(r) for r in spec["assignment"])))
    if kind == "best-classical":
        _, pt = local_bound(builtin(spec.get("expression", "chsh")))
        return P.DeterministicDevice(pt)
    if kind == "repeat-attack":
        return P.repeat_attack_device()
    raise CliError(f"unknown device kind {kind!r}")


def build_source(spec: dict) -> SourceModel:
    kind = spec.get("kind")
    if kind == "sv":
        return SourceModel.sv(spec.get("epsilon", 0.0))
    if kind == "block":
        return SourceModel.block(spec["n"], spec["k"])
    if kind == "min_entropy":
        return SourceModel.min_entropy(spec["n"], spec["k"], spec.get("support"))
    if kind == "flat":
        return SourceModel.flat(spec["n"], spec["support"])
    if kind == "repeat-attack":
        return P.repeat_attack_source(spec["rounds"])
    raise CliError(f"unknown source kind {kind!r}")


def run_protocol(spec: dict, rng: np.random.Generator) -> P.Verdict:
    """Run one protocol described by a JSON spec."""
    cfg = P.ProtocolConfig.from_dict(spec.get("config", {}))
    name = spec.get("protocol", cfg.protocol)
    dev_spec = spec.get("device", {})
    if name == "quadratic":
        return P.run_quadratic_expansion(cfg, build_device(dev_spec), rng)
    if name == "vv_exponential":
        return P.run_vv_exponential(cfg, build_device(dev_spec), rng)
    if name == "vv_quantum_secure":
        return P.run_vv_quantum_secure(cfg, build_device({"strategy": "vv", **dev_spec}), rng)
    if name == "concatenated":
        pool = [build_device(dev_spec) for _ in range(int(spec.get("pool_size", 2)))]
        return P.run_concatenated_expansion(spec.get("schedule", cfg.schedule), pool, cfg, rng)
    if name == "gallego":
        return P.run_gallego_amplification(cfg, build_device({"strategy": "mermin5", **dev_spec}), build_source(spec["source"]), rng)
    if name == "brandao":
        devs = [build_device({"strategy": "brandao4", **dev_spec}) for _ in range(2)]
        return P.run_brandao_amplification(cfg, devs, build_source(spec["source"]), rng)
    if name == "bouda":
        fam_spec = spec.get("family", {})
        if "members" in fam_spec:
            fam = HashFamily.from_dict(fam_spec)
        else:
            fam = construct_cover(int(fam_spec["n"]), np.random.default_rng(int(fam_spec.get("seed", 0))))
        dev = build_device({"strategy": "ghz3", **dev_spec})
        return P.run_bouda_block_amplification(cfg, fam, dev, build_source(spec["source"]), rng)
    if name == "single_device":
        return P.run_single_device_protocol(cfg, build_device({"strategy": "ghz3", **dev_spec}), build_source(spec["source"]), rng)
    raise CliError(f"unknown protocol {name!r}")


def _summary(verdicts: list[dict]) -> dict:
    n = len(verdicts)
    acc = sum(v["accepted"] for v in verdicts)
    out = {"trials": n, "accepted": acc, "accept_rate": acc / n if n else None,
           "seed_ledger_balanced": all(v["seed"].get("drawn") == sum(v["seed"].get("by_category", {}).values())
                                       for v in verdicts)}
    numeric = {}
    for v in verdicts:
        for key, val in v["stats"].items():
            if isinstance(val, (int, float)) and not isinstance(val, bool):
                numeric.setdefault(key, []).append(float(val))
    out["means"] = {k: float(np.mean(vals)) for k, vals in sorted(numeric.items()) if len(vals) == n}
    return out


def cmd_protocol(args) -> dict:
    spec = _read_json(args.config)

    def one(trial: int) -> dict:
        d = run_protocol(spec, trial_rng(args.seed, trial)).to_dict(transcript=args.transcript)
        d["trial"] = trial
        return d

    try:
        with ThreadPoolExecutor(max_workers=_threads()) as pool:
            verdicts = list(pool.map(one, range(args.trials)))
    except (KeyError, TypeError, ValueError) as exc:
        raise CliError(f"bad protocol config: {exc}") from exc
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["trial", "accepted", "abort_reason", "rounds", "certified_entropy", "output_length", "seed_drawn"])
            for v in verdicts:
                w.writerow([v["trial"], v["accepted"], v["abort_reason"], v["rounds"], v["certified_entropy"],
                            v["output_length"], v["seed"].get("drawn")])
    return {"summary": _summary(verdicts), "verdicts": verdicts}


# entry point -------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="dirand", description=__doc__.splitlines()[0])
    ap.add_argument("--seed", type=int, default=0, help="64-bit master seed")
    ap.add_argument("--trials", type=int, default=1, help="number of Monte Carlo trials (protocol command)")
    ap.add_argument("-v", "--verbose", action="count", default=0)
    sub = ap.add_subparsers(dest="command", required=True)

    b = sub.add_parser("bell", help="evaluate expressions or compute their bounds")
    b.add_argument("action", choices=["eval", "bounds"])
    b.add_argument("expression")
    b.add_argument("file", nargs="?")
    b.set_defaults(func=cmd_bell)

    g = sub.add_parser("guess", help="no-signaling bound on guessing an output event")
    g.add_argument("expression")
    g.add_argument("--value", type=float, required=True, help="fixed value of the expression")
    g.add_argument("--inputs", help="input tuple, e.g. 0,0")
    g.add_argument("--target", default="maj", help="'maj' or 'outputs:a1,a2,...'")
    g.add_argument("--guess", type=int, default=0, help="guessed majority bit")
    g.set_defaults(func=cmd_guess)

    e = sub.add_parser("extractor", help="worst-case sweeps and DEOR rank checks")
    e.add_argument("action", choices=["sweep", "deor-ranks"])
    e.add_argument("--extractor", default="hadamard")
    e.add_argument("--n", type=int, default=3)
    e.add_argument("--m", type=int, default=1)
    e.add_argument("--sampled", action="store_true")
    e.add_argument("--all", action="store_true", help="include (k_x, k_y) pairs with a vacuous bound")
    e.set_defaults(func=cmd_extractor)

    h = sub.add_parser("hash-cover", help="construct or verify covering hash families")
    h.add_argument("action", choices=["construct", "verify"])
    h.add_argument("file", nargs="?", help="family JSON (verify)")
    h.add_argument("--n", type=int, default=3)
    h.add_argument("--target-size", type=int)
    h.add_argument("--out")
    h.add_argument("--sampled", action="store_true")
    h.set_defaults(func=cmd_hash_cover)

    p = sub.add_parser("protocol", help="run a protocol config for --trials trials")
    p.add_argument("config")
    p.add_argument("--csv", help="write a per-trial CSV summary")
    p.add_argument("--transcript", action="store_true", help="include per-round inputs and outputs")
    p.set_defaults(func=cmd_protocol)

    t = sub.add_parser("tree", help="cheating-tree leaf counts and single-device bounds")
    t.add_argument("action", choices=["leaves", "bounds"], nargs="?", default="leaves")
    t.add_argument("--n-values", type=int, nargs="+", default=[1, 2, 4])
    t.add_argument("--n", type=int, default=100)
    t.add_argument("--R", type=float, nargs="+", default=[0.9, 0.95, 1.0])
    t.set_defaults(func=cmd_tree)
    return ap


def _config_echo(args) -> dict:
    return {k: v for k, v in vars(args).items() if k not in ("func", "verbose")}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        stream=sys.stderr,
        format="%(levelname)s %(name)s: %(message)s",
    )
    if args.trials < 1:
        print("error: --trials must be positive", file=sys.stderr)
        return 2
    start = time.perf_counter()
    try:
        results = args.func(args)
    except (CliError, KeyError, ValueError, P.SeedExhausted) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    report = {
        "command": args.command,
        "config": _config_echo(args),
        "seed": args.seed,
        "results": results,
        "wall_time": time.perf_counter() - start,
    }
    json.dump(report, sys.stdout, default=_json_default)
    sys.stdout.write("\n")
    return 0


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, float) and math.isinf(o):
        return str(o)
    raise TypeError(f"cannot serialize {type(o).__name__}")


if __name__ == "__main__":
    sys.exit(main())
