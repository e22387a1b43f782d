"""Exact OMA scheduling: LP-based branch and bound, plus an exhaustive oracle."""

from __future__ import annotations

import heapq
import itertools
import time

import numpy as np

from . import _kernels
from .heuristics import run_bpb, run_ca
from .lp import LpStatus, NomaConfig, build_p1, solve_lp
from .schedule import DEMAND_TOL, InstanceP0, Schedule, Status, validate_schedule

INT_TOL = 1e-6
OBJ_TOL = 1e-9  # relative, for incumbent comparisons

MAX_BRUTE_BLOCKS = 14
MAX_BRUTE_SERVICES = 4


class InstanceTooLarge(ValueError):
    pass


def solve_p0_bruteforce(inst: InstanceP0, backend: str | None = None) -> Schedule:
    """Globally optimal OMA schedule by enumerating every conflict-free assignment.

    Limited to 14 blocks and 4 services. Ties go to the lexicographically
    smallest set of (block, service) pairs.
    """
    if inst.n_blocks > MAX_BRUTE_BLOCKS or inst.n_services > MAX_BRUTE_SERVICES:
        raise InstanceTooLarge(
            f"exhaustive search is limited to {MAX_BRUTE_BLOCKS} blocks and {MAX_BRUTE_SERVICES} "
            f"services; instance has {inst.n_blocks} blocks and {inst.n_services} services")
    kern = _kernels.get(backend)
    slots = np.array([b.minislots for b in inst.blocks], dtype=np.int64).reshape(-1, 4)
    is_urllc = np.zeros(inst.n_services, dtype=np.int8)
    is_urllc[inst.services.urllc_cols] = 1
    found, _, choice, leaves = kern.enumerate_best(
        slots, np.ascontiguousarray(inst.throughput), is_urllc, inst.services.demands,
        inst.spec.n_minislots, OBJ_TOL, DEMAND_TOL)
    if not found:
        return Schedule.from_assignments(inst, [], Status.INFEASIBLE, solver="bruteforce", leaves=leaves)
    pairs = [(b, k) for b, k in enumerate(choice) if k >= 0]
    return Schedule.from_assignments(inst, pairs, Status.OPTIMAL, solver="bruteforce", leaves=leaves)


def _round_lp(inst: InstanceP0, columns: np.ndarray, x: np.ndarray):
    """Greedy rounding of a fractional solution into an OMA schedule, or None.

    URLLC columns are taken in decreasing LP value (then rate) until every
    demand is met; remaining blocks go to their eMBB column in the same
    order, then to any eMBB service by rate.
    """
    r = inst.throughput
    n_u = inst.services.n_urllc
    rates = r[columns[:, 0], columns[:, 1]]
    order = np.lexsort((columns[:, 1], columns[:, 0], -rates, -np.round(x, 9)))
    avail = np.ones(inst.n_blocks, dtype=bool)
    delivered = np.zeros(n_u)
    q = inst.services.demands
    pairs = []
    neighbors = inst.conflicts.neighbors

    def take(b, k):
        pairs.append((b, k))
        avail[b] = False
        avail[neighbors[b]] = False

    for j in order:
        b, k = columns[j]
        if k >= n_u or not avail[b] or delivered[k] >= q[k] - DEMAND_TOL:
            continue
        take(b, k)
        delivered[k] += rates[j]
    if np.any(delivered < q - DEMAND_TOL):
        return None
    for j in order:
        b, k = columns[j]
        if k >= n_u and avail[b] and x[j] > INT_TOL:
            take(b, k)
    embb = inst.services.embb_cols
    if embb.size:
        sub = r[:, embb]
        best = sub.max(axis=1)
        for b in np.lexsort((np.arange(inst.n_blocks), -best)):
            if best[b] <= 0:
                break
            if avail[b]:
                take(b, embb[np.argmax(sub[b])])
    return pairs


def solve_p0_bnb(inst: InstanceP0, time_limit_ms: float | None = None, gap_tol: float = 0.0,
                 seed_heuristics: bool = True, backend: str | None = None) -> Schedule:
    """Best-bound branch and bound over the OMA assignment ILP.

    Node relaxations are the mini-slot-capacity LP with capacity one, solved
    from scratch with variable fixings as bounds. Branching is on the most
    fractional variable (smallest (block, service) on ties), the 1-branch
    first; fixing a column to one also fixes every column whose block shares
    a mini-slot with it to zero. Each node also rounds its LP solution into a candidate incumbent;
    with ``seed_heuristics`` the CA and BPB schedules seed the incumbent.
    The search stops when the best open bound is within
    ``gap_tol * |incumbent|`` of the incumbent, or at the time limit.
    """
    if gap_tol < 0:
        raise ValueError("gap_tol must be >= 0")
    start = time.monotonic()
    deadline = None if time_limit_ms is None else start + time_limit_ms / 1e3
    model = build_p1(inst, NomaConfig(1.0))
    lp, columns = model.lp, model.columns
    n_v = len(columns)
    col_inc = inst.conflicts.incidence[columns[:, 0]]
    clash = [np.flatnonzero(row) for row in (col_inc @ col_inc.T).toarray() > 0]
    stats = {"nodes": 0, "lp_iterations": 0}

    best_obj = -np.inf
    best_pairs = None

    def offer(pairs):
        nonlocal best_obj, best_pairs
        if pairs is None:
            return
        cand = Schedule.from_assignments(inst, pairs, Status.FEASIBLE)
        if not cand.demands_met or validate_schedule(inst, cand):
            return
        if best_pairs is None or cand.objective_kbps > best_obj + OBJ_TOL * max(1.0, abs(best_obj)):
            best_obj, best_pairs = cand.objective_kbps, list(cand.pairs)
            stats["found_at"] = stats["nodes"]

    if seed_heuristics:
        for sched in (run_ca(inst, "total"), run_ca(inst, "baseline"), run_bpb(inst)):
            if sched.demands_met:
                offer(sched.pairs)

    def done(status, bound):
        stats["time_ms"] = (time.monotonic() - start) * 1e3
        if best_pairs is None:
            st = Status.INFEASIBLE if status is Status.OPTIMAL else status
            return Schedule.from_assignments(inst, [], st, bound=bound, solver="exact", **stats)
        return Schedule.from_assignments(inst, best_pairs, status, bound=bound, solver="exact", **stats)

    def prune_level():
        return best_obj + max(OBJ_TOL * max(1.0, abs(best_obj)), gap_tol * abs(best_obj))

    counter = itertools.count()
    heap = [(-np.inf, 0, next(counter), np.zeros(n_v), np.ones(n_v))]
    root_bound = None
    open_bound = -np.inf
    while heap:
        neg_bound, neg_depth, _, lo, hi = heapq.heappop(heap)
        parent_bound = -neg_bound
        if best_pairs is not None and parent_bound <= prune_level():
            open_bound = parent_bound
            break
        if deadline is not None and time.monotonic() > deadline:
            return done(Status.TIME_LIMIT, None if root_bound is None else max(parent_bound, best_obj))

        stats["nodes"] += 1
        sol = solve_lp(lp.with_bounds(lo, hi), backend=backend, residuals=False)
        stats["lp_iterations"] += sol.iterations
        if sol.status is not LpStatus.OPTIMAL:
            if root_bound is None:
                return done(Status.INFEASIBLE, None)
            continue
        bound = min(sol.objective, parent_bound)
        if root_bound is None:
            root_bound = bound
        if best_pairs is not None and bound <= prune_level():
            continue

        x = sol.x
        frac = np.minimum(x - np.floor(x), np.ceil(x) - x)
        if frac.max(initial=0.0) <= INT_TOL:
            pairs = [tuple(columns[j]) for j in np.flatnonzero(x > 0.5)]
            offer(pairs)
            continue
        offer(_round_lp(inst, columns, x))
        if best_pairs is not None and bound <= prune_level():
            continue

        j = int(np.argmax(np.minimum(x, 1.0 - x)))
        depth = -neg_depth + 1
        for val in (1.0, 0.0):
            clo, chi = lo.copy(), hi.copy()
            if val:
                chi[clash[j]] = 0.0
            clo[j] = chi[j] = val
            heapq.heappush(heap, (-bound, -depth, next(counter), clo, chi))

    if root_bound is None:
        return done(Status.INFEASIBLE, None)
    return done(Status.OPTIMAL, max(open_bound, best_obj) if best_pairs is not None else None)
