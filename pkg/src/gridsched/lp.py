"""Dense bounded-variable simplex and the NOMA relaxation of the scheduling problem.

The solver works on a dense tableau in double precision: a phase-1 pass
drives artificial variables out of an infeasible slack start, then phase 2
optimises the original objective. Pricing is Dantzig's rule until a run of
degenerate pivots triggers Bland's rule. The pivot loop itself lives in
``_kernels`` (compiled when available).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .schedule import InstanceP0, Schedule, Status

LE, GE, EQ = "<=", ">=", "="


class LpStatus(str, enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    ITERATION_LIMIT = "iteration_limit"


@dataclass(frozen=True, eq=False)
class LinearProgram:
    """``max c @ x`` (or min) subject to ``A x (senses) b`` and ``lo <= x <= hi``."""

    c: np.ndarray
    A: np.ndarray
    senses: tuple[str, ...]
    b: np.ndarray
    lo: np.ndarray
    hi: np.ndarray
    maximize: bool = True

    def __post_init__(self):
        m, n = self.A.shape
        if self.c.shape != (n,) or self.b.shape != (m,) or len(self.senses) != m:
            raise ValueError("inconsistent LP dimensions")
        if self.lo.shape != (n,) or self.hi.shape != (n,):
            raise ValueError("bounds must have one entry per variable")
        if not (np.all(np.isfinite(self.c)) and np.all(np.isfinite(self.A)) and np.all(np.isfinite(self.b))):
            raise ValueError("LP coefficients must be finite")
        if any(s not in (LE, GE, EQ) for s in self.senses):
            raise ValueError(f"unknown constraint sense in {set(self.senses)}")
        if np.any(self.lo > self.hi) or np.any(np.isposinf(self.lo)) or np.any(np.isneginf(self.hi)):
            raise ValueError("invalid variable bounds")

    @classmethod
    def build(cls, c, A, senses, b, lo=None, hi=None, maximize=True) -> "LinearProgram":
        c = np.asarray(c, dtype=float)
        A = np.asarray(A, dtype=float).reshape(-1, c.size)
        b = np.asarray(b, dtype=float).reshape(-1)
        n = c.size
        lo = np.zeros(n) if lo is None else np.asarray(lo, dtype=float).copy()
        hi = np.full(n, np.inf) if hi is None else np.asarray(hi, dtype=float).copy()
        return cls(c, A, tuple(senses), b, lo, hi, maximize)

    @property
    def shape(self) -> tuple[int, int]:
        return self.A.shape

    def with_bounds(self, lo, hi) -> "LinearProgram":
        return LinearProgram(self.c, self.A, self.senses, self.b,
                             np.asarray(lo, dtype=float), np.asarray(hi, dtype=float), self.maximize)


@dataclass(frozen=True, eq=False)
class LpSolution:
    status: LpStatus
    x: np.ndarray | None
    duals: np.ndarray | None
    objective: float | None
    iterations: int
    residuals: dict = field(default_factory=dict)

    @property
    def optimal(self) -> bool:
        return self.status is LpStatus.OPTIMAL


def solve_lp(lp: LinearProgram, max_iter: int = 10**6, opt_tol: float = 1e-9,
             piv_tol: float = 1e-9, feas_tol: float = 1e-7, backend: str | None = None,
             residuals: bool = True) -> LpSolution:
    """Solve ``lp`` with the two-phase bounded simplex.

    Columns with ``lo == hi`` are substituted out before the tableau is
    built. Returned primal values and duals are recomputed from the final
    basis against the original data, and ``residuals`` reports primal and
    dual feasibility, complementary slackness and the duality gap (left
    empty when ``residuals`` is false).
    """
    kern = _kernels.get(backend)
    m, n_all = lp.shape
    sign = 1.0 if lp.maximize else -1.0
    c_all = sign * lp.c

    fixed = lp.lo == lp.hi
    free_cols = np.flatnonzero(~fixed)
    A = np.ascontiguousarray(lp.A[:, free_cols])
    c = c_all[free_cols]
    b = lp.b - lp.A[:, fixed] @ lp.lo[fixed]
    n = free_cols.size

    slack_lo = np.array([0.0 if s in (LE, EQ) else -np.inf for s in lp.senses])
    slack_hi = np.array([np.inf if s == LE else 0.0 for s in lp.senses])

    lo_x, hi_x = lp.lo[free_cols], lp.hi[free_cols]
    x_n = np.where(np.isfinite(lo_x), lo_x, np.where(np.isfinite(hi_x), hi_x, 0.0))
    rho = b - A @ x_n
    slack_ok = (rho >= slack_lo) & (rho <= slack_hi)
    art_rows = np.flatnonzero(~slack_ok)
    s_bar = np.clip(rho, slack_lo, slack_hi)
    sigma = np.sign(rho - s_bar)
    n_art = art_rows.size

    N = n + m + n_art
    T = np.zeros((m, N))
    T[:, :n] = A
    T[np.arange(m), n + np.arange(m)] = 1.0
    T[art_rows, n + m + np.arange(n_art)] = sigma[art_rows]
    T[art_rows] *= sigma[art_rows, None]

    lo = np.concatenate([lo_x, slack_lo, np.zeros(n_art)])
    hi = np.concatenate([hi_x, slack_hi, np.full(n_art, np.inf)])
    x = np.concatenate([x_n, np.where(slack_ok, rho, s_bar), np.abs(rho - s_bar)[art_rows]])
    basis = n + np.arange(m, dtype=np.int64)
    basis[art_rows] = n + m + np.arange(n_art)
    pos = np.full(N, -1, dtype=np.int64)
    pos[basis] = np.arange(m)

    bland_after = 5 * (m + n)
    iters = 0
    scale_b = 1.0 + (np.abs(b).max() if m else 0.0)

    if n_art:
        cost1 = np.zeros(N)
        cost1[n + m:] = -1.0
        d = cost1 - cost1[basis] @ T
        status, it, _ = kern.simplex_iterate(T, x, lo, hi, d, basis, pos, max_iter, bland_after, opt_tol, piv_tol)
        iters += it
        if status == _kernels.SIMPLEX_ITER_LIMIT:
            return LpSolution(LpStatus.ITERATION_LIMIT, None, None, None, iters)
        if x[n + m:].sum() > feas_tol * scale_b:
            return LpSolution(LpStatus.INFEASIBLE, None, None, None, iters)
        hi[n + m:] = 0.0
        x[n + m:][pos[n + m:] < 0] = 0.0

    cost = np.concatenate([c, np.zeros(m + n_art)])
    d = cost - cost[basis] @ T
    status, it, _ = kern.simplex_iterate(T, x, lo, hi, d, basis, pos, max_iter - iters, bland_after, opt_tol, piv_tol)
    iters += it
    if status == _kernels.SIMPLEX_ITER_LIMIT:
        return LpSolution(LpStatus.ITERATION_LIMIT, None, None, None, iters)
    if status == _kernels.SIMPLEX_UNBOUNDED:
        return LpSolution(LpStatus.UNBOUNDED, None, None, None, iters)

    # recompute basic values and duals from the original columns
    full = np.zeros((m, N))
    full[:, :n] = A
    full[np.arange(m), n + np.arange(m)] = 1.0
    full[art_rows, n + m + np.arange(n_art)] = sigma[art_rows]
    if m:
        B = full[:, basis]
        nonbasic = pos < 0
        try:
            xb = np.linalg.solve(B, b - full[:, nonbasic] @ x[nonbasic])
            y = np.linalg.solve(B.T, cost[basis])
            x[basis] = xb
        except np.linalg.LinAlgError:
            y = -d[n:n + m]
    else:
        y = np.zeros(0)

    x_out = lp.lo.copy()
    x_out[free_cols] = x[:n]
    objective = float(lp.c @ x_out)
    duals = sign * y
    res = lp_residuals(lp, x_out, duals) if residuals else {}
    return LpSolution(LpStatus.OPTIMAL, x_out, duals, objective, iters, res)


def lp_residuals(lp: LinearProgram, x: np.ndarray, y: np.ndarray) -> dict:
    """Scaled primal/dual feasibility, complementary slackness and duality gap.

    Duals follow the maximisation convention after sign normalisation:
    ``<=`` rows carry ``y >= 0``, ``>=`` rows ``y <= 0``.
    """
    sign = 1.0 if lp.maximize else -1.0
    c = sign * lp.c
    y = sign * y
    act = lp.A @ x
    senses = np.array(lp.senses)
    le, ge, eq = senses == LE, senses == GE, senses == EQ
    row_viol = np.where(le, np.maximum(act - lp.b, 0), 0) + np.where(ge, np.maximum(lp.b - act, 0), 0) \
        + np.where(eq, np.abs(act - lp.b), 0)
    bound_viol = np.maximum(lp.lo - x, 0) + np.maximum(x - lp.hi, 0)
    primal = max(float(np.max(row_viol / (1 + np.abs(lp.b)), initial=0)),
                 float(np.max(bound_viol, initial=0)))

    d = c - lp.A.T @ y
    c_scale = 1.0 + float(np.max(np.abs(c), initial=0))
    var_dual = np.where((d > 0) & np.isposinf(lp.hi), d, 0) + np.where((d < 0) & np.isneginf(lp.lo), -d, 0)
    row_dual = np.where(le, np.maximum(-y, 0), 0) + np.where(ge, np.maximum(y, 0), 0)
    dual = max(float(np.max(var_dual, initial=0)), float(np.max(row_dual, initial=0))) / c_scale

    with np.errstate(invalid="ignore"):
        gap_up = np.where(d > 0, d * (lp.hi - x), 0)
        gap_lo = np.where(d < 0, -d * (x - lp.lo), 0)
    cs_var = np.nan_to_num(gap_up, posinf=np.inf) + np.nan_to_num(gap_lo, posinf=np.inf)
    cs_row = np.abs(y * (lp.b - act)) * (~eq)
    primal_obj = float(c @ x)
    obj_scale = 1.0 + abs(primal_obj)
    cs = max(float(np.max(cs_var, initial=0)), float(np.max(cs_row, initial=0))) / obj_scale

    finite_hi = np.where(np.isfinite(lp.hi), lp.hi, 0)
    finite_lo = np.where(np.isfinite(lp.lo), lp.lo, 0)
    dual_obj = float(lp.b @ y + np.sum(np.where(d > 0, d * finite_hi, 0)) + np.sum(np.where(d < 0, d * finite_lo, 0)))
    gap = abs(primal_obj - dual_obj) / max(1.0, abs(primal_obj))
    return {"primal": primal, "dual": dual, "complementarity": cs,
            "duality_gap": gap, "dual_objective": sign * dual_obj}


# --- NOMA relaxation -------------------------------------------------------------


@dataclass(frozen=True)
class NomaConfig:
    r_tilde: float = 1.0

    def __post_init__(self):
        if not self.r_tilde >= 1.0:
            raise ValueError(f"r_tilde must be >= 1, got {self.r_tilde}")


@dataclass(frozen=True, eq=False)
class MappedLP:
    """An LP whose column ``j`` is the pair ``columns[j] = (block, service)``."""

    lp: LinearProgram
    columns: np.ndarray  # (n_vars, 2) int
    n_demand_rows: int


def build_p1(inst: InstanceP0, noma: NomaConfig = NomaConfig(), presolve: bool = True) -> MappedLP:
    """Assignment LP with box bounds [0, 1], URLLC demand rows and mini-slot capacity rows.

    Without presolve there is one column per (block, service). Presolve drops
    zero-rate columns and capacity rows that no remaining column touches.
    At ``r_tilde == 1`` it also keeps only the best eMBB service per block
    and one column per (footprint, service) pair, since columns sharing a
    mini-slot then sum to at most one. None of these changes the optimal
    value of the LP or of its integer version.
    """
    r = inst.throughput
    svc = inst.services
    n_b, n_k = r.shape
    if presolve:
        # at unit capacity, columns sharing a mini-slot sum to at most one, so
        # weight can always move to the better of two interchangeable columns
        dominance = noma.r_tilde == 1.0
        cols = []
        for k in svc.urllc_cols:
            for b in np.flatnonzero(r[:, k] > 0):
                cols.append((b, k))
        if svc.embb_cols.size:
            sub = r[:, svc.embb_cols]
            if dominance:
                best = svc.embb_cols[np.argmax(sub, axis=1)]
                for b in np.flatnonzero(sub.max(axis=1) > 0):
                    cols.append((b, best[b]))
            else:
                for b, j in zip(*np.nonzero(sub > 0)):
                    cols.append((b, svc.embb_cols[j]))
        if dominance:
            # same footprint and service: only the higher-rate column can matter
            best_by_key = {}
            for b, k in cols:
                key = (inst.blocks[b].minislots, k)
                cur = best_by_key.get(key)
                if cur is None or r[b, k] > r[cur, k] or (r[b, k] == r[cur, k] and b < cur):
                    best_by_key[key] = b
            cols = [(b, k) for (_, k), b in best_by_key.items()]
        columns = np.array(sorted(cols), dtype=np.int64).reshape(-1, 2)
    else:
        bb, kk = np.meshgrid(np.arange(n_b), np.arange(n_k), indexing="ij")
        columns = np.stack([bb.ravel(), kk.ravel()], axis=1).astype(np.int64)

    n_v = len(columns)
    rates = r[columns[:, 0], columns[:, 1]] if n_v else np.zeros(0)
    is_embb = columns[:, 1] >= svc.n_urllc
    c = np.where(is_embb, rates, 0.0)

    demand = np.zeros((svc.n_urllc, n_v))
    for k in range(svc.n_urllc):
        sel = columns[:, 1] == k
        demand[k, sel] = rates[sel]

    inc = inst.conflicts.incidence.toarray().astype(float)  # blocks x mini-slots
    cap = inc[columns[:, 0]].T if n_v else np.zeros((inst.spec.n_minislots, 0))
    if presolve:
        cap = cap[cap.any(axis=1)]

    A = np.vstack([demand, cap])
    senses = (GE,) * svc.n_urllc + (LE,) * cap.shape[0]
    rhs = np.concatenate([svc.demands, np.full(cap.shape[0], float(noma.r_tilde))])
    lp = LinearProgram.build(c, A, senses, rhs, np.zeros(n_v), np.ones(n_v))
    return MappedLP(lp, columns, svc.n_urllc)


def schedule_from_lp(inst: InstanceP0, model: MappedLP, x: np.ndarray, status: Status,
                     solver: str, threshold: float = 1e-9, **info) -> Schedule:
    x = np.clip(x, 0.0, 1.0)
    keep = np.flatnonzero(x > threshold)
    triples = [(model.columns[j, 0], model.columns[j, 1], x[j]) for j in keep]
    return Schedule.from_assignments(inst, triples, status, solver=solver, **info)


def solve_p1(inst: InstanceP0, noma: NomaConfig = NomaConfig(), backend: str | None = None) -> Schedule:
    """Optimal fractional (NOMA) schedule; ``info['lp']`` holds the raw LP solution."""
    model = build_p1(inst, noma)
    sol = solve_lp(model.lp, backend=backend)
    if sol.status is not LpStatus.OPTIMAL:
        return Schedule.from_assignments(inst, [], Status.INFEASIBLE, solver="p1", lp=sol)
    sched = schedule_from_lp(inst, model, sol.x, Status.OPTIMAL, "p1", lp=sol)
    return sched
