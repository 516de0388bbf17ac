"""Dense revised simplex solver for small linear programs.

The solver works on problems of the form

    min/max  c @ x
    s.t.     A_ub @ x <= b_ub
             A_eq @ x == b_eq
             lo <= x <= hi

It converts to standard form, removes linearly dependent equality rows,
runs a two-phase revised simplex (Bland's anti-cycling rule available
alone or as a fallback for Dantzig pricing) and keeps an explicit
basis inverse that is refactorized periodically. Everything is dense
numpy; the problems in this package have at most a few thousand columns.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

logger = logging.getLogger(__name__)

FEAS_TOL = 1e-9
REPORT_TOL = 1e-7
PIVOT_TOL = 1e-7
REFACTOR_EVERY = 100
# Consecutive degenerate pivots after which the hybrid rule falls back to
# Bland's rule, which cannot cycle.
DEGENERATE_SWITCH = 50
# Relative size of the right-hand-side shift used against degeneracy.
PERTURBATION = 1e-7


class LPError(RuntimeError):
    """Raised when the solver cannot reach a trustworthy answer."""


@dataclass(frozen=True)
class LinearProgram:
    """A linear program in inequality/equality form.

    ``bounds`` is a sequence of ``(lo, hi)`` pairs, one per variable; use
    ``None`` or ``+-inf`` for an open side. When omitted every variable is
    non-negative.
    """

    c: np.ndarray
    A_ub: np.ndarray | None = None
    b_ub: np.ndarray | None = None
    A_eq: np.ndarray | None = None
    b_eq: np.ndarray | None = None
    bounds: Sequence[tuple[float | None, float | None]] | None = None
    maximize: bool = False

    @property
    def n_vars(self) -> int:
        return int(np.asarray(self.c).shape[0])


@dataclass(frozen=True)
class LPResult:
    status: str  # "optimal", "infeasible" or "unbounded"
    value: float | None = None
    x: np.ndarray | None = None
    iterations: int = 0
    message: str = ""
    # Multipliers in the sense of the caller's objective: at an optimum of a
    # minimization, c - A_ub.T @ ub_duals - A_eq.T @ eq_duals is the reduced
    # cost vector and ub_duals <= 0. Signs flip for maximization. For an
    # infeasible problem solved by the primal route they hold a Farkas
    # certificate: A_eq.T @ eq_duals + A_ub.T @ ub_duals >= 0 on every
    # non-negative variable while b_eq @ eq_duals + b_ub @ ub_duals < 0.
    ub_duals: np.ndarray | None = None
    eq_duals: np.ndarray | None = None

    @property
    def ok(self) -> bool:
        return self.status == "optimal"


@dataclass
class _Standard:
    """Standard form min c@z, A@z == b, z >= 0 plus the map back to x."""

    A: np.ndarray
    b: np.ndarray
    c: np.ndarray
    # x = offset + sum over (j, k, sign): sign * z[k] added to x[j]
    offset: np.ndarray
    terms: list[tuple[int, int, float]]
    slack_rows: dict[int, int] = field(default_factory=dict)  # row -> slack column
    n_ub_user: int = 0  # leading rows that are the caller's A_ub rows
    n_ub_total: int = 0  # user rows plus rows added for finite upper bounds


def _as_2d(a, n: int) -> np.ndarray:
    if a is None:
        return np.zeros((0, n))
    arr = np.atleast_2d(np.asarray(a, dtype=float))
    if arr.size == 0:
        return np.zeros((0, n))
    if arr.shape[1] != n:
        raise ValueError(f"constraint matrix has {arr.shape[1]} columns, expected {n}")
    return arr


def _as_1d(b, m: int) -> np.ndarray:
    if m == 0:
        return np.zeros(0)
    arr = np.asarray(b, dtype=float).reshape(-1)
    if arr.shape[0] != m:
        raise ValueError(f"right-hand side has length {arr.shape[0]}, expected {m}")
    return arr


def _to_standard(lp: LinearProgram) -> _Standard:
    c = np.asarray(lp.c, dtype=float).reshape(-1)
    n = c.shape[0]
    A_ub = _as_2d(lp.A_ub, n)
    b_ub = _as_1d(lp.b_ub, A_ub.shape[0])
    A_eq = _as_2d(lp.A_eq, n)
    b_eq = _as_1d(lp.b_eq, A_eq.shape[0])
    if lp.maximize:
        c = -c

    bounds = lp.bounds if lp.bounds is not None else [(0.0, None)] * n
    if len(bounds) != n:
        raise ValueError("bounds must have one entry per variable")

    offset = np.zeros(n)
    terms: list[tuple[int, int, float]] = []
    cols: list[np.ndarray] = []  # columns over original variables, as x-space vectors
    col_cost: list[float] = []
    extra_ub_rows: list[tuple[np.ndarray, float]] = []

    def add_col(j: int, sign: float) -> int:
        k = len(cols)
        e = np.zeros(n)
        e[j] = sign
        cols.append(e)
        col_cost.append(sign * c[j])
        terms.append((j, k, sign))
        return k

    for j, (lo, hi) in enumerate(bounds):
        lo = -math.inf if lo is None else float(lo)
        hi = math.inf if hi is None else float(hi)
        if lo > hi:
            raise ValueError(f"variable {j} has empty bounds [{lo}, {hi}]")
        if math.isfinite(lo):
            offset[j] = lo
            k = add_col(j, 1.0)
            if math.isfinite(hi):
                extra_ub_rows.append((k, hi - lo))
        elif math.isfinite(hi):
            offset[j] = hi
            add_col(j, -1.0)
        else:
            add_col(j, 1.0)
            add_col(j, -1.0)

    T = np.array(cols).T if cols else np.zeros((n, 0))  # x - offset = T @ z
    nz = T.shape[1]
    cz = np.array(col_cost)

    rows_ub = A_ub @ T
    rhs_ub = b_ub - A_ub @ offset
    if extra_ub_rows:
        extra = np.zeros((len(extra_ub_rows), nz))
        extra_rhs = np.zeros(len(extra_ub_rows))
        for i, (k, width) in enumerate(extra_ub_rows):
            extra[i, k] = 1.0
            extra_rhs[i] = width
        rows_ub = np.vstack([rows_ub, extra])
        rhs_ub = np.concatenate([rhs_ub, extra_rhs])
    rows_eq = A_eq @ T
    rhs_eq = b_eq - A_eq @ offset

    m_ub = rows_ub.shape[0]
    m_eq = rows_eq.shape[0]
    A = np.zeros((m_ub + m_eq, nz + m_ub))
    A[:m_ub, :nz] = rows_ub
    A[:m_ub, nz:] = np.eye(m_ub)
    A[m_ub:, :nz] = rows_eq
    b = np.concatenate([rhs_ub, rhs_eq])
    cfull = np.concatenate([cz, np.zeros(m_ub)])
    slack_rows = {i: nz + i for i in range(m_ub)}
    return _Standard(
        A=A,
        b=b,
        c=cfull,
        offset=offset,
        terms=terms,
        slack_rows=slack_rows,
        n_ub_user=A_ub.shape[0],
        n_ub_total=m_ub,
    )


def independent_rows(A: np.ndarray, b: np.ndarray, tol: float = 1e-9) -> tuple[list[int], bool]:
    """Pick a maximal linearly independent subset of the rows of ``[A | b]``.

    Returns the kept row indices and whether the dropped rows are
    consistent (a dropped row whose ``b`` entry does not reduce to zero
    means the system has no solution).
    """
    M = np.hstack([A, b[:, None]]).astype(float)
    m, ncol = M.shape
    scale = max(1.0, float(np.abs(M).max(initial=0.0)))
    work = M.copy()
    kept: list[int] = []
    consistent = True
    for i in range(m):
        row = work[i, :-1]
        j = int(np.argmax(np.abs(row))) if row.size else 0
        if row.size == 0 or abs(row[j]) <= tol * scale:
            if abs(work[i, -1]) > 1e3 * tol * scale:
                consistent = False
            continue
        kept.append(i)
        if i + 1 < m:
            factors = work[i + 1 :, j] / work[i, j]
            nzr = np.nonzero(factors)[0]
            if nzr.size:
                work[i + 1 + nzr] -= np.outer(factors[nzr], work[i])
    return kept, consistent


class _Simplex:
    """Revised simplex state on a standard-form problem with artificials."""

    def __init__(
        self,
        A: np.ndarray,
        b: np.ndarray,
        basis: list[int],
        n_real: int,
        max_iter: int,
        pricing: str = "hybrid",
    ):
        if pricing not in ("bland", "dantzig", "hybrid"):
            raise ValueError(f"unknown pricing rule {pricing!r}")
        self.pricing = pricing
        self.A = A
        self.b = b
        self.basis = list(basis)
        self.n_real = n_real  # columns >= n_real are artificial
        # Pricing y @ A dominates each iteration; the constraint matrices here
        # are very sparse, so keep a coordinate list of the nonzeros.
        rows, cols = np.nonzero(A)
        self._nz_rows = rows
        self._nz_cols = cols
        self._nz_vals = A[rows, cols]
        self.max_iter = max_iter
        self.iterations = 0
        self._since_refactor = 0
        self.clamp = True
        self.refactor()

    def refactor(self) -> None:
        B = self.A[:, self.basis]
        try:
            self.Binv = np.linalg.inv(B)
        except np.linalg.LinAlgError as exc:  # pragma: no cover - defensive
            raise LPError("singular basis during refactorization") from exc
        xB = self.Binv @ self.b
        if self.clamp:
            if np.any(xB < -1e-6 * max(1.0, float(np.abs(self.b).max(initial=0.0)))):
                raise LPError("basis lost primal feasibility")
            xB[xB < FEAS_TOL] = 0.0
        self.xB = xB
        self._since_refactor = 0

    def run(self, cost: np.ndarray, allowed: np.ndarray, opt_tol: float) -> str:
        """Minimize ``cost`` over columns flagged in ``allowed``.

        Returns "optimal" or "unbounded".
        """
        A = self.A
        degenerate_run = 0
        while True:
            if self.iterations % 1000 == 0 and self.iterations:
                logger.debug(
                    "iteration %d objective %.15g degenerate run %d",
                    self.iterations,
                    float(cost[self.basis] @ self.xB),
                    degenerate_run,
                )
            if self.iterations >= self.max_iter:
                raise LPError(f"iteration limit {self.max_iter} reached")
            y = cost[self.basis] @ self.Binv
            d = cost - self._price(y)
            is_basic = np.zeros(A.shape[1], dtype=bool)
            is_basic[self.basis] = True
            cand = np.nonzero(allowed & ~is_basic & (d < -opt_tol))[0]
            if cand.size == 0:
                return "optimal"
            use_bland = self.pricing == "bland" or (
                self.pricing == "hybrid" and degenerate_run >= DEGENERATE_SWITCH
            )
            if use_bland:
                j = int(cand[0])  # lowest-index improving column
            else:
                j = int(cand[np.argmin(d[cand])])  # steepest reduced cost
            u = self.Binv @ A[:, j]
            rows = np.nonzero(u > PIVOT_TOL)[0]
            if rows.size == 0:
                return "unbounded"
            ratios = self.xB[rows] / u[rows]
            best = ratios.min()
            ties = rows[ratios <= best + 1e-12 * max(1.0, abs(best))]
            if use_bland:
                basis_arr = np.asarray(self.basis)
                r = int(ties[np.argmin(basis_arr[ties])])  # lowest leaving index
            else:
                r = int(ties[np.argmax(u[ties])])  # largest pivot for stability
            degenerate_run = degenerate_run + 1 if best <= FEAS_TOL else 0
            self._pivot(r, j, u)

    def dual_cleanup(self, cost: np.ndarray, allowed: np.ndarray, tol: float) -> str:
        """Restore primal feasibility from a dual feasible basis.

        Dual simplex: the most negative basic variable leaves, and the
        entering column keeps every reduced cost non-negative. Returns
        "optimal" or "infeasible".
        """
        self.clamp = False
        try:
            while True:
                r = int(np.argmin(self.xB))
                if self.xB[r] >= -tol:
                    return "optimal"
                if self.iterations >= self.max_iter:
                    raise LPError(f"iteration limit {self.max_iter} reached")
                y = cost[self.basis] @ self.Binv
                d = cost - self._price(y)
                alpha = self._price(self.Binv[r])
                is_basic = np.zeros(self.A.shape[1], dtype=bool)
                is_basic[self.basis] = True
                cand = np.nonzero(allowed & ~is_basic & (alpha < -PIVOT_TOL))[0]
                if cand.size == 0:
                    return "infeasible"
                ratios = np.maximum(d[cand], 0.0) / -alpha[cand]
                j = int(cand[np.argmin(ratios)])
                self._pivot(r, j, self.Binv @ self.A[:, j])
        finally:
            self.clamp = True
            xB = self.xB
            xB[np.abs(xB) < FEAS_TOL] = 0.0

    def _price(self, y: np.ndarray) -> np.ndarray:
        return np.bincount(
            self._nz_cols, weights=y[self._nz_rows] * self._nz_vals, minlength=self.A.shape[1]
        )

    def _pivot(self, r: int, j: int, u: np.ndarray) -> None:
        piv = u[r]
        theta = self.xB[r] / piv
        self.xB -= theta * u
        self.xB[r] = theta
        if self.clamp:
            # Snap roundoff-level values to zero so degenerate pivots are
            # recognized as such by the anti-cycling fallback.
            self.xB[self.xB < FEAS_TOL] = 0.0
        row = self.Binv[r] / piv
        self.Binv -= np.outer(u, row)
        self.Binv[r] = row
        self.basis[r] = j
        self.iterations += 1
        self._since_refactor += 1
        if self._since_refactor >= REFACTOR_EVERY:
            self.refactor()

    def drive_out_artificials(self) -> None:
        """Pivot zero-valued artificials out of the basis where possible."""
        for r in range(len(self.basis)):
            if self.basis[r] < self.n_real:
                continue
            row = self.Binv[r] @ self.A[:, : self.n_real]
            is_basic = np.zeros(self.n_real, dtype=bool)
            real_basic = [k for k in self.basis if k < self.n_real]
            is_basic[real_basic] = True
            cand = np.nonzero(~is_basic & (np.abs(row) > 1e-7))[0]
            if cand.size == 0:
                continue  # redundant row; the artificial stays at zero
            j = int(cand[np.argmax(np.abs(row[cand]))])
            u = self.Binv @ self.A[:, j]
            self._pivot(r, j, u)


def lp_solve(
    lp: LinearProgram,
    max_iter: int | None = None,
    pricing: str = "hybrid",
    method: str = "auto",
) -> LPResult:
    """Solve ``lp`` and return its status, optimal value and a minimizer.

    ``pricing`` selects the entering-column rule: ``"bland"`` (lowest index,
    never cycles but slow), ``"dantzig"`` (most negative reduced cost) or
    ``"hybrid"`` (Dantzig, switching to Bland during long degenerate runs).
    Ratio-test ties go to the lowest basic index under Bland's rule and to
    the largest pivot element otherwise.

    ``method="dual"`` runs the simplex on the dual problem and reads the
    primal solution off the final dual multipliers; this pays off when there
    are many more inequality rows than variables. ``"auto"`` picks the dual
    route when every variable is free and inequalities outnumber variables
    by more than two to one.
    """
    if method not in ("auto", "primal", "dual"):
        raise ValueError(f"unknown method {method!r}")
    if method == "auto":
        method = "dual" if _prefers_dual(lp) else "primal"
    if method == "dual":
        return _solve_dual(lp, max_iter, pricing)
    return _solve_primal(lp, max_iter, pricing)


def _prefers_dual(lp: LinearProgram) -> bool:
    n = lp.n_vars
    if lp.bounds is None or lp.A_ub is None:
        return False
    free = all(
        (lo is None or lo == -math.inf) and (hi is None or hi == math.inf) for lo, hi in lp.bounds
    )
    return free and np.atleast_2d(lp.A_ub).shape[0] > 2 * n


def _solve_primal(lp: LinearProgram, max_iter: int | None, pricing: str) -> LPResult:
    std = _to_standard(lp)
    A, b, c = std.A, std.b, std.c
    m_std, n = A.shape

    # Slack columns can start in the basis for rows with b >= 0.
    slack_of = std.slack_rows
    neg = b < 0
    A = A.copy()
    b = b.copy()
    A[neg] *= -1
    b[neg] *= -1

    eq_rows = [i for i in range(m_std) if i not in slack_of or neg[i]]
    kept_eq, consistent = independent_rows(A[eq_rows], b[eq_rows])
    if not consistent:
        return LPResult("infeasible", message="inconsistent equality constraints")
    keep = sorted([i for i in range(m_std) if i in slack_of and not neg[i]] + [eq_rows[k] for k in kept_eq])
    A = A[keep]
    b = b[keep]
    m = A.shape[0]
    if max_iter is None:
        max_iter = 50 * (m + n) + 1000

    if m == 0:
        # No constraints: bounded only if every cost is non-negative.
        if np.any(c < -FEAS_TOL):
            return LPResult("unbounded")
        return _finish(lp, std, np.zeros(n), np.zeros(m_std), 0)

    basis: list[int] = []
    art_rows: list[int] = []
    for new_i, old_i in enumerate(keep):
        if old_i in slack_of and not neg[old_i]:
            basis.append(slack_of[old_i])
        else:
            basis.append(n + len(art_rows))
            art_rows.append(new_i)
    n_art = len(art_rows)
    A_full = np.hstack([A, np.zeros((m, n_art))])
    A_full[art_rows, n + np.arange(n_art)] = 1.0

    # Degenerate problems (the polytope LPs here are extremely degenerate)
    # stall or cycle numerically. Solve with a tiny deterministic shift of
    # the right-hand side, then restore it and repair with dual pivots.
    scale = max(1.0, float(np.abs(b).max()))
    shift = PERTURBATION * scale * (1.0 + np.random.default_rng(0).random(m))
    sx = _Simplex(A_full, b + shift, basis, n_real=n, max_iter=max_iter, pricing=pricing)
    if n_art:
        cost1 = np.concatenate([np.zeros(n), np.ones(n_art)])
        sx.run(cost1, np.ones(n + n_art, dtype=bool), FEAS_TOL)
        infeas = float(cost1[sx.basis] @ sx.xB)
        if infeas > REPORT_TOL * scale + 2 * float(shift.sum()):
            logger.debug("phase 1 residual %.3g", infeas)
            # The phase-1 multipliers form a Farkas certificate: y @ A <= 0
            # on every real column while y @ b > 0.
            y = np.zeros(m_std)
            y[keep] = cost1[sx.basis] @ sx.Binv
            y[neg] *= -1
            return LPResult(
                "infeasible",
                iterations=sx.iterations,
                message=f"phase-1 residual {infeas:.3g}",
                ub_duals=-y[: std.n_ub_user],
                eq_duals=-y[std.n_ub_total :],
            )
        sx.drive_out_artificials()

    cost2 = np.concatenate([c, np.zeros(n_art)])
    allowed = np.concatenate([np.ones(n, dtype=bool), np.zeros(n_art, dtype=bool)])
    status = sx.run(cost2, allowed, FEAS_TOL)
    if status == "unbounded":
        return LPResult("unbounded", iterations=sx.iterations)
    sx.b = b
    sx.clamp = False
    sx.refactor()
    if sx.dual_cleanup(cost2, allowed, FEAS_TOL) == "infeasible":
        return LPResult("infeasible", iterations=sx.iterations, message="infeasible after removing the shift")
    # Artificials must have returned to zero.
    if n_art and float(sx.xB[np.asarray(sx.basis) >= n].max(initial=0.0)) > REPORT_TOL * scale:
        return LPResult("infeasible", iterations=sx.iterations, message="artificial variable left positive")
    sx.refactor()
    z = np.zeros(n + n_art)
    z[sx.basis] = sx.xB
    y_kept = cost2[sx.basis] @ sx.Binv
    y = np.zeros(m_std)
    y[keep] = y_kept
    y[neg] *= -1
    return _finish(lp, std, z[:n], y, sx.iterations)


def _finish(lp: LinearProgram, std: _Standard, z: np.ndarray, y: np.ndarray, iterations: int) -> LPResult:
    x = std.offset.copy()
    for j, k, sign in std.terms:
        x[j] += sign * z[k]
    value = float(np.asarray(lp.c, dtype=float) @ x)
    if lp.maximize:
        y = -y
    return LPResult(
        "optimal",
        value=value,
        x=x,
        iterations=iterations,
        ub_duals=y[: std.n_ub_user],
        eq_duals=y[std.n_ub_total :],
    )


def _solve_dual(lp: LinearProgram, max_iter: int | None, pricing: str) -> LPResult:
    """Solve through the dual, with the primal as the dual's multipliers.

    The problem is first written as min c@x, A_ub@x <= b_ub, A_eq@x == b_eq
    with x free (finite bounds become extra inequality rows). Its dual
    min b_ub@lam - b_eq@nu s.t. A_ub.T@lam - A_eq.T@nu == -c, lam >= 0
    has one equality row per primal variable, and the multipliers of those
    rows are an optimal x.
    """
    c = np.asarray(lp.c, dtype=float).reshape(-1)
    n = c.shape[0]
    A_ub = _as_2d(lp.A_ub, n)
    b_ub = _as_1d(lp.b_ub, A_ub.shape[0])
    A_eq = _as_2d(lp.A_eq, n)
    b_eq = _as_1d(lp.b_eq, A_eq.shape[0])
    cmin = -c if lp.maximize else c

    extra_rows = []
    extra_rhs = []
    for j, (lo, hi) in enumerate(lp.bounds if lp.bounds is not None else [(0.0, None)] * n):
        if lo is not None and math.isfinite(lo):
            row = np.zeros(n)
            row[j] = -1.0
            extra_rows.append(row)
            extra_rhs.append(-float(lo))
        if hi is not None and math.isfinite(hi):
            row = np.zeros(n)
            row[j] = 1.0
            extra_rows.append(row)
            extra_rhs.append(float(hi))
    if extra_rows:
        A_ub = np.vstack([A_ub, np.array(extra_rows)])
        b_ub = np.concatenate([b_ub, np.array(extra_rhs)])

    m_ub, m_eq = A_ub.shape[0], A_eq.shape[0]
    dual = LinearProgram(
        c=np.concatenate([b_ub, -b_eq]),
        A_eq=np.hstack([A_ub.T, -A_eq.T]),
        b_eq=-cmin,
        bounds=[(0.0, None)] * m_ub + [(None, None)] * m_eq,
    )
    res = _solve_primal(dual, max_iter, pricing)
    if res.status == "unbounded":
        return LPResult("infeasible", iterations=res.iterations, message="dual unbounded")
    if res.status == "infeasible":
        # Primal is infeasible or unbounded; let the primal route decide.
        return _solve_primal(lp, max_iter, pricing)
    x = res.eq_duals
    scale = max(1.0, float(np.abs(b_ub).max(initial=0.0)), float(np.abs(b_eq).max(initial=0.0)))
    viol = max(
        float((A_ub @ x - b_ub).max(initial=0.0)),
        float(np.abs(A_eq @ x - b_eq).max(initial=0.0)),
    )
    if viol > REPORT_TOL * scale:
        raise LPError(f"primal recovered from the dual violates constraints by {viol:.3g}")
    lam = res.x[:m_ub]
    nu = res.x[m_ub:]
    sign = -1.0 if lp.maximize else 1.0
    return LPResult(
        "optimal",
        value=float(c @ x),
        x=x,
        iterations=res.iterations,
        ub_duals=sign * -lam[: np.atleast_2d(lp.A_ub).shape[0] if lp.A_ub is not None else 0],
        eq_duals=sign * nu,
    )
