import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import inst_from_rates, make_inst, tiny_inst
from gridsched.exact import solve_p0_bruteforce
from gridsched.grid import GridSpec
from gridsched.heuristics import (
    LossMetric, _greedy_urllc, _State, alt_loss_vector, category_table, conflict_metrics, default_h,
    loss_vector, mbp_precheck, run_bpb, run_ca, run_mbp, utility_matrix,
)
from gridsched.schedule import Status, validate_schedule

VARIANTS = ("baseline", "total", "avg", "lastpl")


def _all(inst):
    out = [run_ca(inst, v) for v in VARIANTS]
    out += [run_bpb(inst), run_bpb(inst, loss="literal"), run_mbp(inst),
            run_mbp(inst, delta=0.01), run_mbp(inst, delta=0.01, alt_order="ascending")]
    return out


def _line_instance(urllc_rates, embb_rate=50.0, q=64.0):
    # 8x1 grid with shape 1 only: five 4-slot blocks at t0 = 0..4
    spec = GridSpec(8, 1, 2.0, 2 / 11)
    r = [[u, embb_rate] for u in urllc_rates]
    return inst_from_rates(spec, [1], r, 1, [q])


def test_ca_avoids_high_conflict_block():
    inst = _line_instance([100.0, 0.0, 110.0, 0.0, 0.0])
    base = run_ca(inst, "baseline")
    ca = run_ca(inst, "total")
    assert base.pairs[0] == (2, 0) and base.objective_kbps == 0.0
    assert ca.pairs == ((0, 0), (4, 1)) and ca.objective_kbps == 50.0
    assert ca.objective_kbps >= base.objective_kbps


def test_conflict_metrics_match_loops():
    inst = make_inst(seed=2)
    m = conflict_metrics(inst)
    C = inst.conflicts.matrix
    r = inst.throughput
    for b in range(0, inst.n_blocks, 7):
        ct = C[b].sum()
        assert m.c_total[b] == ct
        for k in range(inst.services.n_urllc):
            expect = sum(r[p, k] for p in range(inst.n_blocks) if C[b, p]) / ct
            assert m.c_avg[b, k] == pytest.approx(expect, rel=1e-12)


def test_loss_vectors_match_loops():
    inst = make_inst(seed=5)
    C = inst.conflicts.matrix
    r = inst.throughput
    embb = inst.services.embb_cols
    e = loss_vector(inst)
    lit = loss_vector(inst, LossMetric.LITERAL)
    for b in range(0, inst.n_blocks, 5):
        assert e[b] == pytest.approx(sum(C[b, p] * r[p, k] for p in range(inst.n_blocks) for k in embb))
        assert lit[b] == pytest.approx(sum(C[b, p] * r[b, k] for p in range(inst.n_blocks) for k in embb))
    assert np.array_equal(alt_loss_vector(inst), r[:, :2].max(axis=1))


def test_utility_variants():
    inst = make_inst(seed=1)
    r = inst.throughput[:, :2]
    m = conflict_metrics(inst)
    assert np.array_equal(utility_matrix(inst, "baseline"), r)
    assert np.allclose(utility_matrix(inst, "total"), r / m.c_total[:, None])
    u_avg = utility_matrix(inst, "avg")
    pos = m.c_avg > 0
    assert np.allclose(u_avg[pos], r[pos] / m.c_avg[pos])
    assert np.array_equal(u_avg[~pos], r[~pos])
    last = utility_matrix(inst, "lastpl")
    assert np.array_equal(last[:, 0], r[:, 0]) and np.array_equal(last[:, 1], u_avg[:, 1])


def test_division_guards_on_isolated_blocks():
    # 4x1 grid: the single block conflicts with nothing
    inst = inst_from_rates(GridSpec(4, 1, 2.0, 2 / 11), [1], [[30.0, 10.0]], 1, [20.0])
    for v in VARIANTS:
        assert utility_matrix(inst, v)[0, 0] == 30.0


def test_category_example_and_masking():
    inst = inst_from_rates(GridSpec(4, 2, 2.0, 4 / 11), [1], [[70.0, 1.0], [0.0, 1.0]], 1, [64.0])
    table = category_table(inst, 3, loss_vector(inst))
    assert list(table[0][0]) == [0]
    assert all(1 not in cat for cat in table[0])


def test_category_partition_without_conflicts():
    # shape-1 blocks on a 4-wide grid are pairwise disjoint
    spec = GridSpec(4, 11, 2.0, 2.0)
    rng = np.random.default_rng(0)
    r = np.column_stack([rng.uniform(5, 80, 11), rng.uniform(5, 80, 11)])
    r[3, 0] = 0.0
    inst = inst_from_rates(spec, [1], r, 1, [100.0])
    H = 8
    table = category_table(inst, H, loss_vector(inst))
    seen = np.concatenate(table[0])
    assert len(seen) == len(set(seen.tolist()))
    expect = {b for b in range(11) if r[b, 0] > 0 and math.ceil(100.0 / r[b, 0]) <= H}
    assert set(seen.tolist()) == expect
    for i, cat in enumerate(table[0], start=1):
        assert all(math.ceil(100.0 / r[b, 0]) == i for b in cat)


def test_pruning_drops_higher_loss_member():
    inst = _line_instance([70.0, 70.0, 0.0, 0.0, 70.0])
    key = np.array([5.0, 1.0, 0.0, 0.0, 3.0])
    cat = category_table(inst, 1, key)[0][0]
    # slots: block 0 -> 0..3, block 1 -> 1..4, block 4 -> 4..7
    # sweep: 0 loses to 1 (larger key), then 4 loses to 1
    assert list(cat) == [1]
    # now 1 loses to 0; 0 and 4 are disjoint and come back ordered by key
    key = np.array([1.0, 5.0, 0.0, 0.0, 3.0])
    assert list(category_table(inst, 1, key)[0][0]) == [0, 4]
    key = np.array([4.0, 5.0, 0.0, 0.0, 3.0])
    assert list(category_table(inst, 1, key)[0][0]) == [4, 0]


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6))
def test_categories_after_pruning_are_conflict_free(seed):
    inst = make_inst(q=(400.0, 250.0), seed=seed)
    key = loss_vector(inst)
    for cats in category_table(inst, default_h(inst), key):
        for cat in cats:
            sub = inst.conflicts.matrix[np.ix_(cat, cat)]
            assert not sub.any()
            assert list(cat) == sorted(cat, key=lambda b: (key[b], b))


def test_default_h():
    inst = inst_from_rates(GridSpec(4, 2, 2.0, 4 / 11), [1], [[30.0, 1.0], [7.0, 1.0]], 1, [64.0])
    assert default_h(inst) == math.ceil(64 / 7)
    assert default_h(inst, cap=4) == 4
    inst = inst_from_rates(GridSpec(4, 2, 2.0, 4 / 11), [1], [[0.0, 1.0], [0.0, 1.0]], 1, [64.0])
    assert default_h(inst) == 1


def test_bpb_takes_least_loss_single_block():
    inst = _line_instance([70.0, 0.0, 0.0, 0.0, 70.0], embb_rate=50.0)
    sched = run_bpb(inst)
    # blocks 0 and 4 both cover 64 alone and carry equal loss: the smaller id wins
    assert sched.pairs[0] == (0, 0) and sched.status is Status.FEASIBLE
    assert sched.pairs == ((0, 0), (4, 1))


def test_partial_status_when_demand_unmet():
    inst = _line_instance([10.0, 0.0, 0.0, 0.0, 0.0])
    for sched in _all(inst):
        assert sched.status is Status.PARTIAL
        assert sched.info["unmet"] == [0]
        assert validate_schedule(inst, sched) == []


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6), st.sampled_from([100.0, 300.0, 700.0]), st.sampled_from([0.25, 0.5, 1.0]))
def test_every_heuristic_passes_validator(seed, q, tau):
    inst = make_inst(q=(q, q), tau=(tau, tau), seed=seed)
    for sched in _all(inst):
        assert validate_schedule(inst, sched) == []
        assert sched.demands_met == all(sched.delivered_kbps[k] >= q - 1e-6 for k in range(2))


@pytest.mark.parametrize("seed", range(30))
def test_heuristics_bounded_by_bruteforce(seed):
    inst = tiny_inst(seed, n_urllc=1 + seed % 2, n_embb=1)
    opt = solve_p0_bruteforce(inst)
    for sched in _all(inst):
        assert validate_schedule(inst, sched) == []
        if sched.demands_met:
            assert opt.status is Status.OPTIMAL
            assert sched.objective_kbps <= opt.objective_kbps + 1e-9


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10**6), st.integers(-20, 20))
def test_argmax_scale_invariance(seed, exponent):
    # powers of two scale without rounding, so ties survive exactly
    inst = make_inst(q=(500.0, 500.0), seed=seed)
    for v in VARIANTS:
        u = utility_matrix(inst, v)
        a, b = _State(inst), _State(inst)
        _greedy_urllc(a, u)
        _greedy_urllc(b, u * 2.0 ** exponent)
        assert a.pairs == b.pairs


def test_determinism():
    inst = make_inst(seed=9)
    for first, second in zip(_all(inst), _all(inst)):
        assert first == second


def test_mbp_threshold_extremes():
    inst = make_inst(q=(200.0, 200.0), seed=3)
    assert not mbp_precheck(inst, 0.999)
    assert run_mbp(inst, delta=0.999).assignments == run_bpb(inst).assignments
    assert mbp_precheck(inst, 1e-6)
    assert run_mbp(inst, delta=1e-6).info["precheck"]
    with pytest.raises(ValueError):
        run_mbp(inst, delta=1.0)
    with pytest.raises(ValueError):
        run_mbp(inst, alt_order="sideways")


def test_mbp_precheck_uses_latency_feasible_blocks():
    # URLLC is masked to the first half of the window; both sums cover that half only
    inst = make_inst(q=(200.0,), tau=(0.5,), n_embb=1, seed=4)
    r = inst.throughput
    first_half = np.array([b.end_time_ms <= 0.5 for b in inst.blocks])
    ratio = r[first_half, 0].sum() / r[first_half].sum()
    assert mbp_precheck(inst, ratio * 0.99) and not mbp_precheck(inst, ratio * 1.01)
