"""Conflict-aware greedy (CA) and bin-packing based (BPB, mBP) schedulers.

All heuristics place URLLC services first, then hand the remaining blocks
to eMBB services greedily by rate. Ties are broken by the smallest
``(block, service)`` pair throughout, so every heuristic is deterministic.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .grid import latency_mask
from .schedule import DEMAND_TOL, InstanceP0, Schedule, Status


class Utility(str, enum.Enum):
    BASELINE = "baseline"
    TOTAL = "total"
    AVG = "avg"
    LASTPL = "lastpl"


class LossMetric(str, enum.Enum):
    CONFLICTING = "conflicting"  # eMBB rate of the blocks that b blocks
    LITERAL = "literal"  # C^t_b times the eMBB rate of b itself


@dataclass(frozen=True, eq=False)
class ConflictMetrics:
    c_total: np.ndarray  # (n_blocks,)
    c_avg: np.ndarray  # (n_blocks, n_urllc)


def conflict_metrics(inst: InstanceP0) -> ConflictMetrics:
    """Aggregate conflict count per block and average conflicting URLLC rate.

    The average is taken as 0 for blocks without conflicts.
    """
    ct = inst.conflicts.degree()
    r_u = inst.throughput[:, inst.services.urllc_cols]
    sums = inst.conflicts.adjacency @ r_u
    safe = np.where(ct > 0, ct, 1.0)
    c_avg = np.where(ct[:, None] > 0, sums / safe[:, None], 0.0)
    return ConflictMetrics(ct, c_avg)


def utility_matrix(inst: InstanceP0, variant, metrics: ConflictMetrics | None = None) -> np.ndarray:
    """URLLC utilities (n_blocks x n_urllc) for one CA variant.

    Division guards: a zero denominator leaves the utility equal to the rate.
    """
    variant = Utility(variant)
    r = inst.throughput[:, inst.services.urllc_cols]
    if variant is Utility.BASELINE:
        return r.copy()
    if metrics is None:
        metrics = conflict_metrics(inst)
    ct = metrics.c_total[:, None]
    if variant is Utility.TOTAL:
        return np.where(ct > 0, r / np.where(ct > 0, ct, 1.0), r)
    ca = metrics.c_avg
    u_avg = np.where(ca > 0, r / np.where(ca > 0, ca, 1.0), r)
    if variant is Utility.AVG:
        return u_avg
    u = r.copy()
    if u.shape[1]:
        u[:, -1] = u_avg[:, -1]
    return u


def loss_vector(inst: InstanceP0, metric=LossMetric.CONFLICTING) -> np.ndarray:
    """eMBB throughput foreclosed by allocating each block."""
    metric = LossMetric(metric)
    r_c = inst.throughput[:, inst.services.embb_cols].sum(axis=1)
    if metric is LossMetric.LITERAL:
        return inst.conflicts.degree() * r_c
    return np.asarray(inst.conflicts.adjacency @ r_c, dtype=float)


def alt_loss_vector(inst: InstanceP0) -> np.ndarray:
    """Largest URLLC rate of each block (zero without URLLC services)."""
    r_u = inst.throughput[:, inst.services.urllc_cols]
    if r_u.shape[1] == 0:
        return np.zeros(inst.n_blocks)
    return r_u.max(axis=1)


class _State:
    """Mutable placement state shared by the heuristic phases."""

    def __init__(self, inst: InstanceP0):
        self.inst = inst
        self.avail = np.ones(inst.n_blocks, dtype=bool)
        self.delivered = np.zeros(inst.n_services)
        self.pairs = []
        q = inst.services.demands
        self.q = q
        self.satisfied = np.zeros(q.size, dtype=bool)

    def place(self, b, k):
        inst = self.inst
        self.pairs.append((int(b), int(k)))
        self.delivered[k] += inst.throughput[b, k]
        self.avail[b] = False
        self.avail[inst.conflicts.neighbors[b]] = False
        if k < self.q.size and self.delivered[k] >= self.q[k] - DEMAND_TOL:
            self.satisfied[k] = True

    def finish(self, solver, **info) -> Schedule:
        status = Status.FEASIBLE if self.satisfied.all() else Status.PARTIAL
        unmet = np.flatnonzero(~self.satisfied).tolist()
        return Schedule.from_assignments(self.inst, self.pairs, status, solver=solver, unmet=unmet, **info)


def _greedy_urllc(state: _State, util: np.ndarray):
    """Repeatedly take the highest-utility available (block, URLLC service) pair.

    Utilities are static, so the repeated argmax is one pass over the pairs
    in decreasing utility order.
    """
    if util.size == 0:
        return
    bb, kk = np.nonzero(util > 0)
    uu = util[bb, kk]
    order = np.lexsort((kk, bb, -uu))
    avail, satisfied = state.avail, state.satisfied
    for idx in order:
        b, k = bb[idx], kk[idx]
        if satisfied[k] or not avail[b]:
            continue
        state.place(b, k)
        if satisfied.all():
            break


def _greedy_embb(state: _State):
    inst = state.inst
    cols = inst.services.embb_cols
    if cols.size == 0:
        return
    sub = inst.throughput[:, cols]
    best_k = cols[np.argmax(sub, axis=1)]
    best = sub.max(axis=1)
    order = np.lexsort((np.arange(inst.n_blocks), -best))
    avail = state.avail
    for b in order:
        if best[b] <= 0:
            break
        if avail[b]:
            state.place(b, best_k[b])


def run_ca(inst: InstanceP0, variant=Utility.TOTAL) -> Schedule:
    """Conflict-aware greedy; ``variant='baseline'`` gives the plain greedy."""
    variant = Utility(variant)
    state = _State(inst)
    _greedy_urllc(state, utility_matrix(inst, variant))
    _greedy_embb(state)
    name = "baseline" if variant is Utility.BASELINE else f"ca-{variant.value}"
    return state.finish(name)


def default_h(inst: InstanceP0, cap: int = 16) -> int:
    """Category count from the largest demand over the smallest positive URLLC rate."""
    r_u = inst.throughput[:, inst.services.urllc_cols]
    pos = r_u[r_u > 0]
    if pos.size == 0:
        return 1
    q_max = inst.services.demands.max()
    return int(min(cap, max(1, math.ceil(q_max / pos.min()))))


def category_table(inst: InstanceP0, H: int, key: np.ndarray) -> list[list[np.ndarray]]:
    """``table[k][i-1]``: blocks with ceil(q_k / r_bk) == i after conflict pruning.

    ``key`` ranks blocks (lower is preferred). Pruning sweeps each category
    in block-id order and, for every conflicting pair inside it, drops the
    member with the larger ``(key, block_id)``. Survivors are returned
    sorted by ``(key, block_id)``.
    """
    if H < 1:
        raise ValueError("H must be >= 1")
    neighbors = inst.conflicts.neighbors
    n = inst.n_blocks
    table = []
    for k, q in zip(inst.services.urllc_cols, inst.services.demands):
        r_k = inst.throughput[:, k]
        idx = np.zeros(n, dtype=np.int64)
        pos = r_k > 0
        idx[pos] = np.ceil(q / r_k[pos]).astype(np.int64)
        idx[idx > H] = 0
        # one block-id sweep covers every category: conflicts only count inside one
        alive = idx > 0
        cat_of = idx.tolist()
        keys = key.tolist()
        for b in np.flatnonzero(alive).tolist():
            if not alive[b]:
                continue
            c = cat_of[b]
            for p in neighbors[b].tolist():
                if not alive[p] or cat_of[p] != c:
                    continue
                if (keys[p], p) > (keys[b], b):
                    alive[p] = False
                else:
                    alive[b] = False
                    break
        cats = []
        for i in range(1, H + 1):
            kept = np.flatnonzero(alive & (idx == i))
            cats.append(kept[np.lexsort((kept, key[kept]))])
        table.append(cats)
    return table


def _bpb(inst: InstanceP0, H: int, key: np.ndarray, name: str, **info) -> Schedule:
    state = _State(inst)
    table = category_table(inst, H, key)
    avail = state.avail
    for i in range(1, H + 1):
        while True:
            chosen = None
            for k in range(len(table)):
                if state.satisfied[k]:
                    continue
                cat = table[k][i - 1]
                free = cat[avail[cat]]
                if free.size >= i and (chosen is None or free.size < chosen[1].size):
                    chosen = (k, free)
            if chosen is None:
                break
            k, free = chosen
            for b in free[:i]:
                state.place(b, k)
    _greedy_embb(state)
    return state.finish(name, H=H, **info)


def run_bpb(inst: InstanceP0, H: int | None = None, loss=LossMetric.CONFLICTING) -> Schedule:
    """Bin-packing based allocation ordered by aggregated eMBB loss."""
    if H is None:
        H = default_h(inst)
    return _bpb(inst, H, loss_vector(inst, loss), "bpb")


def mbp_precheck(inst: InstanceP0, delta: float) -> bool:
    """True when URLLC throughput exceeds ``delta`` of all throughput.

    Both sums run over the blocks that meet the loosest URLLC latency
    tolerance; without URLLC services the check is false.
    """
    urllc = inst.services.urllc_cols
    if urllc.size == 0:
        return False
    tau = max(inst.services.services[k].tau_ms for k in urllc)
    r = inst.throughput[latency_mask(inst.blocks, tau)]
    return bool(r[:, urllc].sum() > delta * r.sum())


def run_mbp(inst: InstanceP0, H: int | None = None, delta: float = 0.5,
            loss=LossMetric.CONFLICTING, alt_order: str = "descending") -> Schedule:
    """BPB with a grid pre-check that swaps the ranking metric to the max URLLC rate.

    When the pre-check trips, ``alt_order='descending'`` ranks blocks by
    decreasing max URLLC rate so the strongest blocks go to URLLC first;
    ``'ascending'`` puts the swapped metric in the loss vector's place
    unchanged, ranking by increasing rate.
    """
    if not 0 < delta < 1:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    if alt_order not in ("ascending", "descending"):
        raise ValueError(f"unknown alt_order {alt_order!r}")
    if H is None:
        H = default_h(inst)
    tripped = mbp_precheck(inst, delta)
    if tripped:
        alt = alt_loss_vector(inst)
        key = alt if alt_order == "ascending" else -alt
    else:
        key = loss_vector(inst, loss)
    return _bpb(inst, H, key, "mbp", precheck=tripped)
