"""Problem instances, schedules and the independent feasibility validator."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .channel import ServiceSet
from .grid import Block, ConflictStructure, GridSpec, build_conflicts

DEMAND_TOL = 1e-6  # kbps


class Status(str, enum.Enum):
    OPTIMAL = "optimal"
    FEASIBLE = "feasible"
    PARTIAL = "partial"  # heuristic ran but left URLLC demand unmet
    INFEASIBLE = "infeasible"
    TIME_LIMIT = "time_limit"

    def __str__(self):
        return self.value


@dataclass(frozen=True, eq=False)
class InstanceP0:
    """One scheduling instance: grid geometry, conflicts, rates and services."""

    spec: GridSpec
    blocks: tuple[Block, ...]
    conflicts: ConflictStructure
    throughput: np.ndarray  # (n_blocks, n_services) kbps
    services: ServiceSet

    def __post_init__(self):
        if self.throughput.shape != (len(self.blocks), self.services.n_services):
            raise ValueError(
                f"throughput shape {self.throughput.shape} does not match "
                f"({len(self.blocks)}, {self.services.n_services})")
        if not np.all(np.isfinite(self.throughput)) or np.any(self.throughput < 0):
            raise ValueError("throughput entries must be finite and non-negative")

    @classmethod
    def from_parts(cls, spec, blocks, throughput, services, conflicts=None) -> "InstanceP0":
        blocks = tuple(blocks)
        if conflicts is None:
            conflicts = build_conflicts(blocks, spec)
        return cls(spec, blocks, conflicts, np.asarray(throughput, dtype=float), services)

    @property
    def n_blocks(self) -> int:
        return len(self.blocks)

    @property
    def n_services(self) -> int:
        return self.services.n_services


@dataclass(frozen=True)
class Schedule:
    """Block/service assignment with its eMBB objective.

    ``assignments`` holds ``(block, service_column, fraction)`` triples sorted
    by ``(block, service)``; OMA schedules use fraction 1.0 throughout.
    """

    assignments: tuple[tuple[int, int, float], ...]
    objective_kbps: float
    status: Status
    delivered_kbps: tuple[float, ...]
    bound: float | None = None
    solver: str = ""
    info: dict = field(default_factory=dict, compare=False)

    @classmethod
    def from_assignments(cls, inst: InstanceP0, assignments, status: Status,
                         bound=None, solver="", **info) -> "Schedule":
        trip = []
        for b, k, *rest in assignments:
            trip.append((int(b), int(k), float(rest[0]) if rest else 1.0))
        trip.sort()
        r = inst.throughput
        embb = set(inst.services.embb_cols.tolist())
        objective = math.fsum(r[b, k] * x for b, k, x in trip if k in embb)
        delivered = [math.fsum(r[b, kk] * x for b, k, x in trip if k == kk)
                     for kk in range(inst.n_services)]
        return cls(tuple(trip), objective, status, tuple(delivered), bound, solver, info)

    @property
    def pairs(self) -> tuple[tuple[int, int], ...]:
        return tuple((b, k) for b, k, _ in self.assignments)

    @property
    def demands_met(self) -> bool:
        return self.status in (Status.OPTIMAL, Status.FEASIBLE)


def unmet_demands(inst: InstanceP0, delivered) -> list[int]:
    q = inst.services.demands
    return [k for k in range(inst.services.n_urllc) if delivered[k] < q[k] - DEMAND_TOL]


def validate_schedule(inst: InstanceP0, sched: Schedule, capacity: float = 1.0,
                      tol: float = 1e-6) -> list[str]:
    """Return a list of violations (empty when the schedule is valid).

    Checks are done from block footprints directly, without the conflict
    structure: mini-slot load within ``capacity``, one service per block for
    OMA schedules, fractions in [0, 1], URLLC blocks ending within the
    service's latency tolerance, delivered rates consistent with the
    assignments, and URLLC demands whenever the status claims them met.
    """
    problems = []
    load = np.zeros(inst.spec.n_minislots)
    per_block = {}
    delivered = np.zeros(inst.n_services)
    oma = capacity == 1.0 and all(x == 1.0 for _, _, x in sched.assignments)
    for b, k, x in sched.assignments:
        if not 0 <= b < inst.n_blocks or not 0 <= k < inst.n_services:
            problems.append(f"assignment ({b}, {k}) out of range")
            continue
        if x < -tol or x > 1 + tol:
            problems.append(f"fraction {x} of ({b}, {k}) outside [0, 1]")
        svc = inst.services.services[k]
        if svc.urllc and x > tol and inst.blocks[b].end_time_ms > svc.tau_ms + 1e-9:
            problems.append(f"URLLC service {k} on block {b} ending after {svc.tau_ms} ms")
        for i in inst.blocks[b].minislots:
            load[i] += x
        per_block[b] = per_block.get(b, 0) + 1
        delivered[k] += inst.throughput[b, k] * x

    over = np.flatnonzero(load > capacity + tol)
    if over.size:
        problems.append(f"mini-slots over capacity {capacity}: {over.tolist()}")
    if oma:
        multi = sorted(b for b, c in per_block.items() if c > 1)
        if multi:
            problems.append(f"blocks assigned to several services: {multi}")

    reported = np.asarray(sched.delivered_kbps)
    if reported.shape != delivered.shape or not np.allclose(reported, delivered, rtol=1e-9, atol=1e-6):
        problems.append("delivered rate vector inconsistent with assignments")
    obj = delivered[inst.services.embb_cols].sum()
    if not math.isclose(obj, sched.objective_kbps, rel_tol=1e-9, abs_tol=1e-6):
        problems.append(f"objective {sched.objective_kbps} != recomputed {obj}")

    if sched.demands_met:
        q = inst.services.demands
        for k in range(inst.services.n_urllc):
            if delivered[k] < q[k] - tol:
                problems.append(f"URLLC service {k} gets {delivered[k]:.6f} < {q[k]} kbps")
    return problems
