"""Monte Carlo experiments: scenarios, per-trial solver runs, gaps and CSV output.

A trial derives its seed as ``base_seed + trial``, builds the instance for
the scenario's numerology, runs every solver in the roster, validates each
schedule and records objectives and gaps. Reports are always aggregated in
trial order, so results do not depend on how trials were scheduled across
worker processes.
"""

from __future__ import annotations

import csv
import enum
import io
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .channel import ServiceSet, sample_snr, throughput_matrix
from .exact import solve_p0_bnb, solve_p0_bruteforce
from .grid import DEFAULT_EFFICIENCY, GridSpec, ShapeId, build_conflicts, default_shapes, enumerate_blocks
from .heuristics import LossMetric, run_bpb, run_ca, run_mbp
from .lp import NomaConfig, solve_p1
from .schedule import InstanceP0, Schedule, Status, validate_schedule

log = logging.getLogger(__name__)

CSV_VERSION = 1
TRIAL_COLUMNS = ("scenario_id", "trial", "seed", "solver", "status", "objective_kbps",
                 "gap_pct", "noma_gap_pct", "time_ms")
SUMMARY_COLUMNS = ("scenario_id", "solver", "n_trials", "n_feasible", "infeasibility_rate",
                   "mean_objective_kbps", "std_objective_kbps", "mean_gap_pct", "n_gap",
                   "mean_noma_gap_pct", "n_noma_gap", "mean_time_ms")

SOLVERS = ("exact", "bruteforce", "p1", "baseline", "ca-total", "ca-avg", "ca-lastpl", "bpb", "mbp")
EXACT_SOLVERS = ("exact", "bruteforce")
HEURISTICS = ("baseline", "ca-total", "ca-avg", "ca-lastpl", "bpb", "mbp")
OMA_SOLVERS = EXACT_SOLVERS + HEURISTICS

_FAILED = (Status.INFEASIBLE, Status.PARTIAL)


class Numerology(str, enum.Enum):
    FIXED = "fixed"
    MULTIPLE_FIXED = "multiple_fixed"
    FLEXIBLE = "flexible"


class ScheduleViolation(RuntimeError):
    """A solver returned a schedule that fails the independent validator."""


@dataclass(frozen=True)
class SolverParams:
    r_tilde: float = 1.0
    H: int | None = None
    delta: float = 0.5
    loss: str = LossMetric.CONFLICTING.value
    mbp_order: str = "descending"
    time_limit_ms: float | None = None
    gap_tol: float = 0.0

    def __post_init__(self):
        NomaConfig(self.r_tilde)
        LossMetric(self.loss)
        if self.H is not None and self.H < 1:
            raise ValueError("H must be >= 1")
        if not 0 < self.delta < 1:
            raise ValueError("delta must lie in (0, 1)")
        if self.mbp_order not in ("ascending", "descending"):
            raise ValueError(f"unknown mbp_order {self.mbp_order!r}")
        if self.time_limit_ms is not None and not self.time_limit_ms > 0:
            raise ValueError("time_limit_ms must be positive")
        if self.gap_tol < 0:
            raise ValueError("gap_tol must be >= 0")


@dataclass(frozen=True)
class Scenario:
    """One Monte Carlo configuration.

    ``exact_mode`` controls the exact solvers: ``'full'`` runs them on every
    trial, ``'reduced'`` only on the first ``exact_trials`` trials and
    ``'skip'`` never. ``embb_tau_ms`` defaults to the grid window.
    """

    scenario_id: str = "default"
    grid: GridSpec = GridSpec()
    numerology: Numerology = Numerology.FLEXIBLE
    fixed_shape: int | None = None
    q_kbps: tuple[float, ...] = (64.0, 64.0)
    tau_ms: tuple[float, ...] = (1.0, 1.0)
    n_embb: int = 2
    embb_tau_ms: float | None = None
    snr_db: tuple[float, float] = (5.0, 30.0)
    efficiency: tuple[float, ...] = tuple(DEFAULT_EFFICIENCY[s] for s in ShapeId)
    n_trials: int = 10
    base_seed: int = 0
    roster: tuple[str, ...] = ("exact", "p1") + HEURISTICS
    params: SolverParams = SolverParams()
    exact_mode: str = "full"
    exact_trials: int = 10

    def __post_init__(self):
        object.__setattr__(self, "numerology", Numerology(self.numerology))
        object.__setattr__(self, "q_kbps", tuple(float(q) for q in self.q_kbps))
        object.__setattr__(self, "tau_ms", tuple(float(t) for t in self.tau_ms))
        object.__setattr__(self, "roster", tuple(self.roster))
        if self.numerology is Numerology.FIXED:
            if self.fixed_shape is None:
                raise ValueError("fixed numerology needs fixed_shape")
            ShapeId(self.fixed_shape)
        elif self.fixed_shape is not None:
            raise ValueError("fixed_shape is only meaningful with fixed numerology")
        if len(self.q_kbps) != len(self.tau_ms):
            raise ValueError("q_kbps and tau_ms must have the same length")
        if len(self.efficiency) != len(ShapeId):
            raise ValueError(f"efficiency needs {len(ShapeId)} entries")
        if self.n_trials < 1:
            raise ValueError("n_trials must be >= 1")
        unknown = set(self.roster) - set(SOLVERS)
        if unknown or not self.roster:
            raise ValueError(f"unknown solver(s) {sorted(unknown)}; choose from {', '.join(SOLVERS)}")
        if len(set(self.roster)) != len(self.roster):
            raise ValueError("duplicate solver in roster")
        if self.exact_mode not in ("full", "reduced", "skip"):
            raise ValueError(f"unknown exact_mode {self.exact_mode!r}")
        if self.exact_trials < 0:
            raise ValueError("exact_trials must be >= 0")

    def seed(self, trial: int) -> int:
        return self.base_seed + trial

    def runs_exact(self, trial: int) -> bool:
        return self.exact_mode == "full" or (self.exact_mode == "reduced" and trial < self.exact_trials)


def allowed_shapes(scn: Scenario, urllc: bool) -> frozenset[ShapeId]:
    if scn.numerology is Numerology.FLEXIBLE:
        return frozenset(ShapeId)
    if scn.numerology is Numerology.FIXED:
        return frozenset({ShapeId(scn.fixed_shape)})
    return frozenset({ShapeId.SHAPE3 if urllc else ShapeId.SHAPE1})


def make_instance(scn: Scenario, trial: int) -> InstanceP0:
    """Instance for one trial; numerology restrictions zero the disallowed rates.

    Every numerology uses the full block set, so restricted and flexible
    runs of one trial share blocks, conflicts and channel realization.
    """
    spec = scn.grid
    eff = {s: e for s, e in zip(ShapeId, scn.efficiency)}
    blocks = enumerate_blocks(spec, default_shapes(eff))
    embb_tau = spec.window_ms if scn.embb_tau_ms is None else scn.embb_tau_ms
    services = ServiceSet.build(scn.q_kbps, scn.tau_ms, scn.n_embb, embb_tau_ms=embb_tau)
    snr = sample_snr(services, spec, scn.snr_db, seed=scn.seed(trial))
    r = np.array(throughput_matrix(snr, blocks, services, spec))
    shape_of = np.array([b.shape_id for b in blocks])
    for k, svc in enumerate(services.services):
        keep = np.isin(shape_of, [int(s) for s in allowed_shapes(scn, svc.urllc)])
        r[~keep, k] = 0.0
    r.setflags(write=False)
    return InstanceP0.from_parts(spec, blocks, r, services, build_conflicts(blocks, spec))


def run_solver(inst: InstanceP0, name: str, params: SolverParams = SolverParams()) -> Schedule:
    if name == "exact":
        return solve_p0_bnb(inst, time_limit_ms=params.time_limit_ms, gap_tol=params.gap_tol)
    if name == "bruteforce":
        return solve_p0_bruteforce(inst)
    if name == "p1":
        return solve_p1(inst, NomaConfig(params.r_tilde))
    if name == "baseline":
        return run_ca(inst, "baseline")
    if name.startswith("ca-"):
        return run_ca(inst, name[3:])
    if name == "bpb":
        return run_bpb(inst, params.H, params.loss)
    if name == "mbp":
        return run_mbp(inst, params.H, params.delta, params.loss, params.mbp_order)
    raise ValueError(f"unknown solver {name!r}; choose from {', '.join(SOLVERS)}")


def optimality_gap(exact_obj: float, heur_obj: float) -> float:
    """Percentage shortfall of a heuristic against the exact optimum."""
    if not exact_obj > 0:
        raise ValueError("optimality gap needs a positive exact objective")
    return 100.0 * (exact_obj - heur_obj) / exact_obj


def noma_gap(noma_obj: float, oma_obj: float) -> float:
    """Percentage shortfall of an OMA schedule against the NOMA objective."""
    if not noma_obj > 0:
        raise ValueError("NOMA gap needs a positive NOMA objective")
    return 100.0 * (noma_obj - oma_obj) / noma_obj


@dataclass(frozen=True)
class SolverResult:
    solver: str
    status: Status
    objective_kbps: float | None
    time_ms: float
    gap_pct: float | None = None
    noma_gap_pct: float | None = None

    @property
    def feasible(self) -> bool:
        return self.status not in _FAILED and self.objective_kbps is not None


@dataclass(frozen=True)
class TrialReport:
    scenario_id: str
    trial: int
    seed: int
    results: tuple[SolverResult, ...]
    schedules: dict = field(default_factory=dict, compare=False, repr=False)

    def result(self, solver: str) -> SolverResult | None:
        for res in self.results:
            if res.solver == solver:
                return res
        return None


def _objective(sched: Schedule) -> float | None:
    if sched.status in _FAILED:
        return None
    if sched.status is Status.TIME_LIMIT and not sched.assignments:
        return None
    return sched.objective_kbps


def run_trial(scn: Scenario, trial: int, keep_schedules: bool = False) -> TrialReport:
    """Run the roster on one trial and derive gaps.

    Optimality gaps are recorded only when the exact solver proved
    optimality and the heuristic met every URLLC demand; NOMA gaps only
    when the NOMA LP was solved and the OMA schedule met every demand.
    Schedules failing the validator raise :class:`ScheduleViolation`.
    """
    inst = make_instance(scn, trial)
    raw = {}
    for name in scn.roster:
        if name in EXACT_SOLVERS and not scn.runs_exact(trial):
            continue
        t0 = time.monotonic()
        sched = run_solver(inst, name, scn.params)
        elapsed = (time.monotonic() - t0) * 1e3
        capacity = scn.params.r_tilde if name == "p1" else 1.0
        problems = validate_schedule(inst, sched, capacity=capacity)
        if problems:
            raise ScheduleViolation(
                f"{name} on scenario {scn.scenario_id!r} trial {trial}: {'; '.join(problems)}")
        raw[name] = (sched, elapsed)

    exact = raw.get("exact") or raw.get("bruteforce")
    opt = exact[0].objective_kbps if exact and exact[0].status is Status.OPTIMAL else None
    noma = raw.get("p1")
    noma_obj = noma[0].objective_kbps if noma and noma[0].status is Status.OPTIMAL else None

    results = []
    for name, (sched, elapsed) in raw.items():
        obj = _objective(sched)
        gap = ngap = None
        if name in HEURISTICS and obj is not None and opt is not None and opt > 0:
            gap = optimality_gap(opt, obj)
        if name in OMA_SOLVERS and obj is not None and noma_obj is not None and noma_obj > 0:
            ngap = noma_gap(noma_obj, obj)
        results.append(SolverResult(name, sched.status, obj, elapsed, gap, ngap))
    schedules = {n: s for n, (s, _) in raw.items()} if keep_schedules else {}
    return TrialReport(scn.scenario_id, trial, scn.seed(trial), tuple(results), schedules)


def _run_one(args):
    scn, trial = args
    return run_trial(scn, trial)


def run_scenario(scn: Scenario, jobs: int = 1, progress=None) -> list[TrialReport]:
    """All trials of ``scn`` in trial order; ``jobs > 1`` uses worker processes."""
    tasks = [(scn, t) for t in range(scn.n_trials)]
    if jobs <= 1:
        reports = []
        for task in tasks:
            reports.append(_run_one(task))
            if progress:
                progress(scn, reports[-1])
        return reports
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        reports = []
        for rep in pool.map(_run_one, tasks):
            reports.append(rep)
            if progress:
                progress(scn, rep)
    return reports


# --- aggregation and CSV -------------------------------------------------

@dataclass(frozen=True)
class SolverSummary:
    scenario_id: str
    solver: str
    n_trials: int
    n_feasible: int
    infeasibility_rate: float
    mean_objective_kbps: float | None
    std_objective_kbps: float | None
    mean_gap_pct: float | None
    n_gap: int
    mean_noma_gap_pct: float | None
    n_noma_gap: int
    mean_time_ms: float | None


def _mean(values):
    return math.fsum(values) / len(values) if values else None


def _std(values):
    if not values:
        return None
    mu = _mean(values)
    return math.sqrt(math.fsum((v - mu) ** 2 for v in values) / len(values))


def trial_rows(reports, record_timing: bool = False) -> list[dict]:
    """Flat per-(trial, solver) rows in trial order; ``None`` marks a missing value."""
    rows = []
    for rep in sorted(reports, key=lambda r: (r.scenario_id, r.trial)):
        for res in rep.results:
            rows.append({
                "scenario_id": rep.scenario_id, "trial": rep.trial, "seed": rep.seed,
                "solver": res.solver, "status": res.status.value,
                "objective_kbps": res.objective_kbps, "gap_pct": res.gap_pct,
                "noma_gap_pct": res.noma_gap_pct,
                "time_ms": res.time_ms if record_timing else None,
            })
    return rows


def summarize_rows(rows) -> list[SolverSummary]:
    """Per (scenario, solver) statistics from trial rows.

    Objective statistics use only trials where the solver met every demand;
    the infeasibility rate is the fraction of its runs that left a URLLC
    demand unmet. Rows are sorted by trial first, so the result does not
    depend on input order.
    """
    rows = sorted(rows, key=lambda r: (r["scenario_id"], int(r["trial"])))
    groups = {}
    for row in rows:
        groups.setdefault((row["scenario_id"], row["solver"]), []).append(row)
    order = {s: i for i, s in enumerate(SOLVERS)}
    out = []
    for (sid, solver) in sorted(groups, key=lambda g: (g[0], order.get(g[1], len(order)), g[1])):
        grp = groups[(sid, solver)]
        objs = [r["objective_kbps"] for r in grp if r["objective_kbps"] is not None]
        failed = sum(Status(r["status"]) in _FAILED for r in grp)
        gaps = [r["gap_pct"] for r in grp if r["gap_pct"] is not None]
        ngaps = [r["noma_gap_pct"] for r in grp if r["noma_gap_pct"] is not None]
        times = [r["time_ms"] for r in grp if r["time_ms"] is not None]
        out.append(SolverSummary(sid, solver, len(grp), len(objs), failed / len(grp),
                                 _mean(objs), _std(objs), _mean(gaps), len(gaps),
                                 _mean(ngaps), len(ngaps), _mean(times)))
    return out


def summarize(reports, record_timing: bool = True) -> list[SolverSummary]:
    if not reports:
        raise ValueError("cannot summarize an empty list of reports")
    return summarize_rows(trial_rows(reports, record_timing))


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _write(columns, rows, kind: str) -> str:
    buf = io.StringIO()
    buf.write(f"# gridsched {kind} v{CSV_VERSION}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_fmt(row[c]) for c in columns])
    return buf.getvalue()


def trials_csv(reports, record_timing: bool = False) -> str:
    return _write(TRIAL_COLUMNS, trial_rows(reports, record_timing), "trials")


def summary_csv(summaries) -> str:
    return _write(SUMMARY_COLUMNS, [s.__dict__ for s in summaries], "summary")


_INT_FIELDS = {"trial", "seed", "n_trials", "n_feasible", "n_gap", "n_noma_gap"}
_STR_FIELDS = {"scenario_id", "solver", "status"}


def read_csv(text: str) -> list[dict]:
    """Parse a trials or summary CSV back into rows (missing values become ``None``)."""
    lines = text.splitlines()
    if not lines or not lines[0].startswith("# gridsched "):
        raise ValueError("missing gridsched CSV header line")
    version = lines[0].rsplit("v", 1)[-1]
    if version != str(CSV_VERSION):
        raise ValueError(f"unsupported CSV version {version!r}")
    rows = []
    for rec in csv.DictReader(lines[1:]):
        row = {}
        for key, val in rec.items():
            if key in _STR_FIELDS:
                row[key] = val
            elif val == "":
                row[key] = None
            elif key in _INT_FIELDS:
                row[key] = int(val)
            else:
                row[key] = float(val)
        rows.append(row)
    return rows
