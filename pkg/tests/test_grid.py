import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gridsched.grid import (
    GridSpec, ShapeId, build_conflicts, census, default_shapes, enumerate_blocks, latency_feasible,
    latency_mask, make_shape,
)
from oracles import census_formula, footprint, pairwise_conflicts


def test_default_census():
    spec = GridSpec()
    counts = [census(spec, s) for s in default_shapes()]
    assert counts == [143, 150, 128, 128]
    assert len(enumerate_blocks(spec)) == 549


def test_small_grid_census():
    assert len(enumerate_blocks(GridSpec(4, 4))) == 21
    assert [census(GridSpec(1, 1), s) for s in default_shapes()] == [0, 0, 0, 0]
    assert enumerate_blocks(GridSpec(1, 1)) == []


@given(st.integers(1, 20), st.integers(1, 14))
def test_census_matches_formula(n_time, n_freq):
    spec = GridSpec(n_time, n_freq)
    for shape in default_shapes():
        assert census(spec, shape) == census_formula(n_time, n_freq, shape.time_extent, shape.freq_extent)
    assert len(enumerate_blocks(spec)) == sum(census(spec, s) for s in default_shapes())


def test_block_order_and_footprints():
    spec = GridSpec(6, 5)
    blocks = enumerate_blocks(spec)
    assert [b.block_id for b in blocks] == list(range(len(blocks)))
    shape_ids = [b.shape_id for b in blocks]
    assert shape_ids == sorted(shape_ids)
    for b in blocks:
        t0, f0 = b.origin
        expect = footprint(t0, f0, b.shape.time_extent, b.shape.freq_extent, spec.n_time)
        assert set(b.minislots) == expect and len(b.minislots) == 4
    # within a shape: frequency row outer, time column inner
    first = [b.origin for b in blocks if b.shape_id == ShapeId.SHAPE1][:4]
    assert first == [(0, 0), (1, 0), (2, 0), (0, 1)]


def test_end_times():
    spec = GridSpec()
    blocks = enumerate_blocks(spec)
    for b in blocks:
        assert b.end_time_ms == pytest.approx((b.origin[0] + b.shape.time_extent) * 0.125, abs=1e-12)
    last_s1 = [b for b in blocks if b.shape_id == ShapeId.SHAPE1][-1]
    assert last_s1.origin == (12, 10) and last_s1.end_time_ms == pytest.approx(2.0)


def test_latency_boundary_is_inclusive():
    spec = GridSpec()
    s3 = [b for b in enumerate_blocks(spec, [make_shape(3)])]
    # shape-3 blocks in column t end at (t + 1) * 0.125 ms
    mask = latency_mask(s3, 0.5)
    ends = np.array([b.end_time_ms for b in s3])
    assert np.array_equal(mask, ends <= 0.5 + 1e-12)
    assert latency_feasible(s3[3], 0.5) and not latency_feasible(s3[4], 0.5)
    with pytest.raises(ValueError):
        latency_feasible(s3[0], 0.0)


def test_conflicts_match_pairwise_oracle():
    spec = GridSpec(6, 5)
    blocks = enumerate_blocks(spec)
    cs = build_conflicts(blocks, spec)
    expect = pairwise_conflicts(blocks)
    got = {(b, int(p)) for b in range(len(blocks)) for p in cs.neighbors[b] if b < p}
    assert got == expect
    assert not cs.matrix.diagonal().any()
    assert np.array_equal(cs.matrix, cs.matrix.T)
    assert np.array_equal(cs.matrix, cs.adjacency.toarray() > 0)
    assert np.array_equal(cs.degree(), cs.matrix.sum(axis=1))
    b, p = next(iter(expect))
    assert cs.conflict(b, p) and cs.conflict(p, b)


def test_same_footprint_blocks_conflict():
    spec = GridSpec(4, 4)
    blocks = enumerate_blocks(spec, [make_shape(3), make_shape(4)])
    cs = build_conflicts(blocks, spec)
    n3 = census(spec, make_shape(3))
    for i in range(n3):
        assert blocks[i].minislots == blocks[n3 + i].minislots
        assert cs.conflict(i, n3 + i)


@settings(max_examples=30)
@given(st.integers(1, 9), st.integers(1, 7), st.sets(st.sampled_from(list(ShapeId)), min_size=1))
def test_conflict_relation_property(n_time, n_freq, shapes):
    spec = GridSpec(n_time, n_freq)
    blocks = enumerate_blocks(spec, [make_shape(s) for s in shapes])
    cs = build_conflicts(blocks, spec)
    assert {(b, int(p)) for b in range(len(blocks)) for p in cs.neighbors[b] if b < p} == \
        pairwise_conflicts(blocks)


def test_invalid_inputs():
    with pytest.raises(ValueError):
        GridSpec(0, 4)
    with pytest.raises(ValueError):
        GridSpec(4, 4, window_ms=0.0)
    with pytest.raises(ValueError):
        make_shape(1, efficiency=1.5)
    with pytest.raises(ValueError):
        make_shape(7)
    with pytest.raises(ValueError):
        enumerate_blocks(GridSpec(), [])
    with pytest.raises(ValueError):
        enumerate_blocks(GridSpec(), [make_shape(1), make_shape(1)])
