import dataclasses

import numpy as np
import pytest

from conftest import inst_from_rates, make_inst
from gridsched.grid import GridSpec
from gridsched.heuristics import run_ca
from gridsched.lp import NomaConfig, solve_p1
from gridsched.schedule import Schedule, Status, validate_schedule


def _line():
    # 8x1 grid, shape 1: five overlapping 4-slot blocks at t0 = 0..4; URLLC tau 1 ms
    spec = GridSpec(8, 1, 2.0, 2 / 11)
    r = [[40.0, 10.0]] * 5
    return inst_from_rates(spec, [1], r, 1, [64.0], tau=[1.0])


def test_valid_schedule_passes():
    inst = _line()
    s = Schedule.from_assignments(inst, [(0, 0), (4, 1)], Status.PARTIAL)
    assert s.objective_kbps == 10.0 and s.delivered_kbps == (40.0, 10.0)
    assert validate_schedule(inst, s) == []


def test_overlap_detected():
    inst = _line()
    s = Schedule.from_assignments(inst, [(0, 0), (1, 1)], Status.PARTIAL)
    assert any("over capacity" in p for p in validate_schedule(inst, s))


def test_two_services_on_one_block_detected():
    inst = _line()
    s = Schedule.from_assignments(inst, [(0, 0), (0, 1)], Status.PARTIAL)
    problems = validate_schedule(inst, s)
    assert any("several services" in p for p in problems)


def test_fraction_out_of_range_detected():
    inst = _line()
    s = Schedule.from_assignments(inst, [(0, 1, 1.5)], Status.FEASIBLE)
    assert any("outside [0, 1]" in p for p in validate_schedule(inst, s, capacity=2.0))


def test_false_demand_claim_detected():
    inst = _line()
    s = Schedule.from_assignments(inst, [(0, 0), (4, 1)], Status.FEASIBLE)
    assert any("URLLC service 0" in p for p in validate_schedule(inst, s))


def test_latency_violation_detected():
    # block 4 ends at 2 ms, past the 1 ms tolerance
    inst = _line()
    s = Schedule.from_assignments(inst, [(4, 0)], Status.PARTIAL)
    assert any("ending after" in p for p in validate_schedule(inst, s))


def test_tampered_totals_detected():
    inst = _line()
    s = Schedule.from_assignments(inst, [(0, 0), (4, 1)], Status.PARTIAL)
    bad = dataclasses.replace(s, objective_kbps=11.0)
    assert any("objective" in p for p in validate_schedule(inst, bad))
    bad = dataclasses.replace(s, delivered_kbps=(41.0, 10.0))
    assert any("delivered" in p for p in validate_schedule(inst, bad))


def test_out_of_range_ids():
    inst = _line()
    s = Schedule(((9, 0, 1.0),), 0.0, Status.PARTIAL, (0.0, 0.0))
    assert any("out of range" in p for p in validate_schedule(inst, s))


def test_capacity_relaxation_accepts_noma_overlap():
    inst = make_inst(q=(500.0, 500.0), seed=2)
    s = solve_p1(inst, NomaConfig(1.5))
    assert validate_schedule(inst, s, capacity=1.5) == []
    load = np.zeros(inst.spec.n_minislots)
    for b, _, x in s.assignments:
        load[list(inst.blocks[b].minislots)] += x
    if load.max() > 1.0 + 1e-6:
        assert validate_schedule(inst, s) != []


@pytest.mark.parametrize("seed", range(10))
def test_random_mutations_are_caught(seed):
    inst = make_inst(q=(300.0, 300.0), seed=seed)
    s = run_ca(inst, "total")
    assert validate_schedule(inst, s) == []
    rng = np.random.default_rng(seed)
    b, k, _ = s.assignments[int(rng.integers(len(s.assignments)))]
    # reuse a block for another service, or add a conflicting neighbour
    other = (k + 1) % inst.n_services
    nbrs = inst.conflicts.neighbors[b]
    extra = (int(nbrs[0]), k) if len(nbrs) and rng.random() < 0.5 else (b, other)
    bad = Schedule.from_assignments(inst, list(s.assignments) + [extra], s.status)
    assert validate_schedule(inst, bad) != []


def test_status_string():
    assert str(Status.TIME_LIMIT) == "time_limit"
