"""Protocol outcomes."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np


def _plain(v):
    if isinstance(v, np.ndarray):
        return v.tolist()
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.floating,)):
        return float(v)
    if isinstance(v, (np.bool_,)):
        return bool(v)
    if isinstance(v, dict):
        return {str(k): _plain(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_plain(x) for x in v]
    return v


@dataclass
class Verdict:
    """Accept/abort decision, accounting and the full round record.

    ``inputs`` and ``outputs`` hold one row per round. ``seed`` is the
    ledger summary of the bit supply that drove the run.
    """

    protocol: str
    accepted: bool
    abort_reason: str | None = None
    rounds: int = 0
    inputs: np.ndarray | None = field(default=None, repr=False)
    outputs: np.ndarray | None = field(default=None, repr=False)
    output_bits: np.ndarray | None = field(default=None, repr=False)
    certified_entropy: float | None = None
    seed: dict = field(default_factory=dict)
    stats: dict = field(default_factory=dict)
    flags: tuple[str, ...] = ()

    @property
    def seed_balanced(self) -> bool:
        by = self.seed.get("by_category", {})
        return self.seed.get("drawn") == sum(by.values())

    def to_dict(self, transcript: bool = False) -> dict:
        d = {
            "protocol": self.protocol,
            "accepted": self.accepted,
            "abort_reason": self.abort_reason,
            "rounds": self.rounds,
            "certified_entropy": self.certified_entropy,
            "output_length": None if self.output_bits is None else int(self.output_bits.size),
            "seed": self.seed,
            "stats": self.stats,
            "flags": list(self.flags),
        }
        if transcript:
            d["inputs"] = self.inputs
            d["outputs"] = self.outputs
            d["output_bits"] = self.output_bits
        return _plain(d)

    def to_json(self, transcript: bool = False) -> str:
        return json.dumps(self.to_dict(transcript))
