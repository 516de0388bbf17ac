"""Linear programs over the local and no-signaling polytopes.

No-signaling behaviors are written in Collins-Gisin coordinates: the free
parameters are the joint marginals ``P_S(a_S | x_S)`` for every nonempty
party subset ``S`` with each output restricted to all but its last value.
Every no-signaling behavior is ``p = offset + M @ theta`` for exactly one
parameter vector, and the only remaining constraints are ``p >= 0``. The
coefficients are integers, which keeps the simplex well conditioned.
"""

from __future__ import annotations

import functools
import itertools
import logging
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .bell import BellExpression, evaluate
from .lp import REPORT_TOL, LinearProgram, LPError, lp_solve
from .scenario import (
    ENUMERATION_CAP,
    Behavior,
    Scenario,
    StructureError,
    deterministic_matrix,
    is_no_signaling,
)

logger = logging.getLogger(__name__)

RELAXATION_LABEL = "no-signaling relaxation"


class InfeasibleQuery(ValueError):
    """The constraints of an optimization have no solution."""


@functools.lru_cache(maxsize=16)
def _ns_parametrization_cached(inputs: tuple, outputs: tuple) -> tuple[np.ndarray, np.ndarray]:
    s = Scenario(inputs, outputs)
    n = s.parties
    index: dict[tuple, int] = {}
    for r in range(1, n + 1):
        for S in itertools.combinations(range(n), r):
            for xs in itertools.product(*(range(inputs[k]) for k in S)):
                for as_ in itertools.product(*(range(outputs[k] - 1) for k in S)):
                    index[(S, xs, as_)] = len(index)
    n_in, n_out = s.shape
    M = np.zeros((n_in * n_out, len(index)))
    offset = np.zeros(n_in * n_out)
    outs = s.output_tuples()
    # For an output that is not a party's last value the party's factor is
    # the marginal itself; the last value contributes 1 - sum of the others.
    for i, x in enumerate(s.input_tuples()):
        for j, a in enumerate(outs):
            choices = []
            for k in range(n):
                if a[k] < outputs[k] - 1:
                    choices.append([(a[k], 1)])
                else:
                    choices.append([(None, 1)] + [(b, -1) for b in range(outputs[k] - 1)])
            row = i * n_out + j
            for combo in itertools.product(*choices):
                sign = 1
                S, xs, as_ = [], [], []
                for k, (b, c) in enumerate(combo):
                    sign *= c
                    if b is not None:
                        S.append(k)
                        xs.append(x[k])
                        as_.append(b)
                if S:
                    M[row, index[(tuple(S), tuple(xs), tuple(as_))]] += sign
                else:
                    offset[row] += sign
    M.setflags(write=False)
    offset.setflags(write=False)
    return M, offset


def ns_parametrization(s: Scenario) -> tuple[np.ndarray, np.ndarray]:
    """Matrix ``M`` and vector ``offset`` with ``p = offset + M @ theta``.

    ``p`` is the flattened behavior table. The parameter count is
    ``prod_k (m_k (o_k - 1) + 1) - 1``.
    """
    return _ns_parametrization_cached(s.inputs, s.outputs)


def ns_constraints(s: Scenario) -> tuple[np.ndarray, np.ndarray]:
    """Equality system ``A p = b`` for normalization and no-signaling.

    Rows: one normalization row per input tuple, then for every party k,
    every input tuple with party k's input 0, every alternative input of
    party k and every output tuple of the other parties, the difference of
    the two marginals. The system is redundant; use it as a cross-check.
    """
    n_in, n_out = s.shape
    xs = s.input_tuples()
    rows, rhs = [], []
    for i in range(n_in):
        r = np.zeros(n_in * n_out)
        r[i * n_out : (i + 1) * n_out] = 1.0
        rows.append(r)
        rhs.append(1.0)
    for k in range(s.parties):
        others = [range(o) if j != k else range(1) for j, o in enumerate(s.outputs)]
        for x in xs:
            if x[k] != 0:
                continue
            for alt in range(1, s.inputs[k]):
                x2 = x[:k] + (alt,) + x[k + 1 :]
                i1, i2 = s.input_index(x), s.input_index(x2)
                for a in itertools.product(*others):
                    r = np.zeros(n_in * n_out)
                    for ak in range(s.outputs[k]):
                        aa = a[:k] + (ak,) + a[k + 1 :]
                        j = s.output_index(aa)
                        r[i1 * n_out + j] += 1.0
                        r[i2 * n_out + j] -= 1.0
                    rows.append(r)
                    rhs.append(0.0)
    return np.array(rows), np.array(rhs)


@dataclass(frozen=True)
class NSResult:
    value: float
    behavior: Behavior
    relaxation: str = RELAXATION_LABEL


def _solve_ns(
    s: Scenario,
    objective: np.ndarray,
    maximize: bool,
    fixed: Sequence[tuple[np.ndarray, float]] = (),
) -> NSResult:
    """Optimize a linear objective on flattened behaviors over the NS set."""
    M, offset = ns_parametrization(s)
    c = objective @ M
    A_eq = [f @ M for f, _ in fixed]
    b_eq = [v - f @ offset for f, v in fixed]
    lp = LinearProgram(
        c=c,
        A_ub=-M,
        b_ub=offset,
        A_eq=np.array(A_eq) if A_eq else None,
        b_eq=np.array(b_eq) if b_eq else None,
        bounds=[(None, None)] * M.shape[1],
        maximize=maximize,
    )
    res = lp_solve(lp)
    if res.status == "infeasible":
        raise InfeasibleQuery("no no-signaling behavior satisfies the constraints")
    if res.status != "optimal":
        raise LPError(f"no-signaling optimization ended with status {res.status}")
    p = offset + M @ res.x
    p[np.abs(p) < 1e-12] = 0.0
    b = Behavior(s, p.reshape(s.shape))
    ok, viol = is_no_signaling(b, tol=REPORT_TOL)
    if not ok or p.min() < -REPORT_TOL:
        raise LPError(f"optimizer returned an invalid behavior (signaling {viol:.3g}, min {p.min():.3g})")
    value = float(objective @ p)
    return NSResult(value, b)


def ns_optimize(expr: BellExpression, direction: str | None = None) -> NSResult:
    """Optimum of ``expr`` over all no-signaling behaviors.

    ``direction`` is ``"max"`` or ``"min"``; by default the expression's own
    sense.
    """
    direction = expr.sense if direction is None else direction
    if direction not in ("max", "min"):
        raise ValueError("direction must be 'max' or 'min'")
    obj = expr.weighted_coefficients().reshape(-1)
    res = _solve_ns(expr.scenario, obj, maximize=direction == "max")
    return NSResult(evaluate(expr, res.behavior), res.behavior)


# Local polytope membership ------------------------------------------------------


@dataclass(frozen=True)
class Membership:
    """Outcome of a local-polytope membership test.

    Inside: ``weights`` over deterministic points in enumeration order.
    Outside: a functional ``s`` on flattened behaviors with
    ``s @ b - local_max >= REPORT_TOL``.
    """

    inside: bool
    weights: np.ndarray | None = None
    functional: np.ndarray | None = None
    local_max: float | None = None
    value: float | None = None

    @property
    def gap(self) -> float | None:
        if self.inside:
            return None
        return self.value - self.local_max


def local_membership(b: Behavior, cap: int = ENUMERATION_CAP) -> Membership:
    s = b.scenario
    D = deterministic_matrix(s, cap)  # (n_det, n_cells)
    n_det = D.shape[0]
    p = b.table.reshape(-1)
    feas = lp_solve(
        LinearProgram(
            c=np.zeros(n_det),
            A_eq=np.vstack([D.T, np.ones((1, n_det))]),
            b_eq=np.concatenate([p, [1.0]]),
        )
    )
    if feas.status == "optimal":
        w = np.maximum(feas.x, 0.0)
        return Membership(True, weights=w / w.sum())
    n_cells = p.size
    if feas.eq_duals is not None:
        # Farkas certificate of the infeasible weight system: with
        # y = -eq_duals, every vertex d has y_p @ d <= -y_1 < y_p @ p.
        func = -feas.eq_duals[:n_cells]
        norm = float(np.abs(func).max(initial=0.0))
        if norm > 0:
            func = func / norm
            local_max = float((D @ func).max())
            value = float(func @ p)
            if value - local_max >= REPORT_TOL:
                return Membership(False, functional=func, local_max=local_max, value=value)
    # Separation: max s@p - t subject to s@d <= t for every vertex d, |s| <= 1.
    sep = lp_solve(
        LinearProgram(
            c=np.concatenate([p, [-1.0]]),
            A_ub=np.hstack([D, -np.ones((n_det, 1))]),
            b_ub=np.zeros(n_det),
            bounds=[(-1.0, 1.0)] * n_cells + [(None, None)],
            maximize=True,
        )
    )
    if sep.status != "optimal":
        raise LPError(f"separation LP ended with status {sep.status}")
    func = sep.x[:n_cells]
    local_max = float((D @ func).max())
    value = float(func @ p)
    if value - local_max < REPORT_TOL:
        raise LPError(
            f"membership LP infeasible but the best separating gap is only {value - local_max:.3g}"
        )
    return Membership(False, functional=func, local_max=local_max, value=value)


# Guessing probability ----------------------------------------------------------


@dataclass(frozen=True)
class GuessingQuery:
    """Maximize the probability of a target output event at fixed inputs.

    The optimization runs over no-signaling behaviors whose value of
    ``expression`` equals ``fixed_value``. ``target`` is a 0/1 mask over
    output tuples marking the event the adversary bets on.
    """

    expression: BellExpression
    fixed_value: float
    inputs: tuple[int, ...]
    target: np.ndarray

    def __post_init__(self):
        s = self.expression.scenario
        mask = np.asarray(self.target, dtype=float).reshape(-1)
        if mask.size != s.n_output_tuples:
            raise StructureError("target mask needs one entry per output tuple")
        s.input_index(self.inputs)  # validates
        object.__setattr__(self, "target", mask)
        object.__setattr__(self, "inputs", tuple(int(v) for v in self.inputs))

    @classmethod
    def outcome(cls, expr: BellExpression, value: float, inputs: Sequence[int], outputs: Sequence[int]) -> GuessingQuery:
        s = expr.scenario
        mask = np.zeros(s.n_output_tuples)
        mask[s.output_index(outputs)] = 1.0
        return cls(expr, value, tuple(inputs), mask)

    @classmethod
    def function(
        cls,
        expr: BellExpression,
        value: float,
        inputs: Sequence[int],
        fn: Callable[[tuple], int],
        guess: int,
    ) -> GuessingQuery:
        s = expr.scenario
        mask = np.array([float(fn(a) == guess) for a in s.output_tuples()])
        return cls(expr, value, tuple(inputs), mask)


def guessing_probability_bound(q: GuessingQuery) -> NSResult:
    """Largest probability of the target event under the constraints."""
    s = q.expression.scenario
    obj = np.zeros(s.shape)
    obj[s.input_index(q.inputs)] = q.target
    fixed = [(q.expression.weighted_coefficients().reshape(-1), float(q.fixed_value))]
    return _solve_ns(s, obj.reshape(-1), maximize=True, fixed=fixed)


def majority_of_first_three(a: Sequence[int]) -> int:
    return int(a[0] + a[1] + a[2] >= 2)
