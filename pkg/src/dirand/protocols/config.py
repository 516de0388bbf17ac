"""Protocol configuration with derived block parameters."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, fields, replace

from ..bell import TSIRELSON

MAX_ROUNDS = 10**8


@dataclass(frozen=True)
class ProtocolConfig:
    """Parameters shared by all protocol runners.

    Unset block parameters (``None``) are derived from ``n`` and ``delta``
    by the formulas of the respective protocol; see :meth:`vv_parameters`
    and :meth:`vv_quantum_parameters`. Runners ignore fields that do not
    apply to them.
    """

    protocol: str = "quadratic"
    n: int = 10_000
    delta: float = 0.01
    # quadratic expansion
    q: float = 0.25
    I_q: float = TSIRELSON
    extractor_eps: float | None = None
    # Vazirani-Vidick block structure
    k: int | None = None
    m: int | None = None
    ell: int | None = None
    Delta: int | None = None
    C: int | None = None
    gamma: float | None = None
    max_rounds: int = MAX_ROUNDS
    # concatenation
    rounds: int | None = None
    schedule: str = "fehr"
    reserve_bits: int = 0
    # many-device amplification
    N: int | None = None
    N_b: int = 2
    N_d: int = 1
    N1: int | None = None
    N2: int | None = None
    sv_epsilon: float | None = None
    delta_const: float = 1.0
    mu_const: float = 0.0
    output_bits: int = 1
    # block-source amplification
    gamma_cheat: float | None = None
    f_eps: float | None = None
    check_cover: bool = True
    # single device
    R: float | None = None

    def __post_init__(self):
        if self.n is None or int(self.n) != self.n:
            raise ValueError("n must be an integer")
        if not 0 < self.delta < 1:
            raise ValueError("delta must lie in (0, 1)")

    @classmethod
    def from_dict(cls, d: dict) -> ProtocolConfig:
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)

    @classmethod
    def from_json(cls, text: str) -> ProtocolConfig:
        return cls.from_dict(json.loads(text))

    def to_dict(self) -> dict:
        return asdict(self)

    def with_(self, **changes) -> ProtocolConfig:
        return replace(self, **changes)

    # Derived parameters ---------------------------------------------------------

    @property
    def eps_ext(self) -> float:
        return self.delta if self.extractor_eps is None else self.extractor_eps

    def vv_parameters(self) -> dict:
        """Block parameters of the exponential protocol.

        ``ell = C n``, ``Delta = 1000 ceil(log2(1/delta))``,
        ``k = ceil(10 log2(ell)^2)`` and ``m = Delta ell``; every value can be
        overridden, and ``C`` defaults to 100.
        """
        C = 100 if self.C is None else self.C
        ell = C * self.n if self.ell is None else self.ell
        Delta = 1000 * math.ceil(math.log2(1 / self.delta)) if self.Delta is None else self.Delta
        k = math.ceil(10 * math.log2(ell) ** 2) if self.k is None else self.k
        m = Delta * ell if self.m is None else self.m
        return _checked({"C": C, "ell": ell, "Delta": Delta, "k": k, "m": m}, self.max_rounds)

    def vv_quantum_parameters(self) -> dict:
        """Block parameters of the quantum-secure protocol.

        ``alpha = log2(1/delta)``, ``gamma = 1/(10 + 8 alpha)``,
        ``C = ceil(100 alpha)``, ``ell = ceil(n**(1/gamma))``,
        ``k = ceil(10 log2(ell)^2)`` and ``m = ceil(C ell log2(ell)^2)``.
        """
        alpha = math.log2(1 / self.delta)
        gamma = 1 / (10 + 8 * alpha) if self.gamma is None else self.gamma
        C = math.ceil(100 * alpha) if self.C is None else self.C
        if self.ell is None:
            log_ell = math.log2(max(self.n, 1)) / gamma
            ell = math.ceil(2.0**log_ell) if log_ell < 62 else None
            if ell is None:
                raise ValueError(f"ell = n^(1/gamma) = 2^{log_ell:.1f} is too large; set ell explicitly")
        else:
            ell = self.ell
        lg = math.log2(ell) if ell > 1 else 0.0
        k = math.ceil(10 * lg**2) if self.k is None else self.k
        m = math.ceil(C * ell * lg**2) if self.m is None else self.m
        return _checked({"alpha": alpha, "gamma": gamma, "C": C, "ell": ell, "k": k, "m": m}, self.max_rounds)


def _checked(p: dict, max_rounds: int) -> dict:
    if p["ell"] < 1 or p["k"] < 1 or p["m"] < 1:
        raise ValueError(f"block parameters must be positive, got ell={p['ell']}, k={p['k']}, m={p['m']}")
    total = p["k"] * p["m"]
    if total > max_rounds:
        raise ValueError(f"{total} rounds exceed max_rounds={max_rounds}; override k, m or ell for a scaled run")
    return p
