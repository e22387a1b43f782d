"""Time-frequency mini-slot grid, candidate resource blocks and their conflicts.

Axis convention: the first coordinate is time (columns), the second is
frequency (rows). Mini-slot ``i`` at ``(t, f)`` has index ``f * n_time + t``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse

# absolute slack for end-time comparisons (all grid times are in ms)
_TIME_EPS = 1e-9


class ShapeId(enum.IntEnum):
    SHAPE1 = 1
    SHAPE2 = 2
    SHAPE3 = 3
    SHAPE4 = 4


@dataclass(frozen=True)
class GridSpec:
    n_time: int = 16
    n_freq: int = 11
    window_ms: float = 2.0
    bandwidth_mhz: float = 2.0

    def __post_init__(self):
        if self.n_time < 1 or self.n_freq < 1:
            raise ValueError(f"grid needs at least one column and row, got {self.n_time}x{self.n_freq}")
        if not self.window_ms > 0 or not self.bandwidth_mhz > 0:
            raise ValueError("window_ms and bandwidth_mhz must be positive")

    @property
    def slot_ms(self) -> float:
        return self.window_ms / self.n_time

    @property
    def slot_bandwidth_mhz(self) -> float:
        return self.bandwidth_mhz / self.n_freq

    @property
    def n_minislots(self) -> int:
        return self.n_time * self.n_freq

    def minislot_index(self, t: int, f: int) -> int:
        return f * self.n_time + t


@dataclass(frozen=True)
class BlockShape:
    shape_id: ShapeId
    time_extent: int
    freq_extent: int
    efficiency: float

    def __post_init__(self):
        if self.time_extent * self.freq_extent != 4:
            raise ValueError("every block covers exactly 4 mini-slots")
        if not 0.0 < self.efficiency <= 1.0:
            raise ValueError(f"efficiency must lie in (0, 1], got {self.efficiency}")


DEFAULT_EFFICIENCY = {
    ShapeId.SHAPE1: 0.95,
    ShapeId.SHAPE2: 0.93,
    ShapeId.SHAPE3: 0.90,
    ShapeId.SHAPE4: 0.90,
}

_FOOTPRINTS = {
    ShapeId.SHAPE1: (4, 1),
    ShapeId.SHAPE2: (2, 2),
    ShapeId.SHAPE3: (1, 4),
    ShapeId.SHAPE4: (1, 4),
}


def make_shape(shape_id, efficiency: float | None = None) -> BlockShape:
    shape_id = ShapeId(shape_id)
    dt, df = _FOOTPRINTS[shape_id]
    if efficiency is None:
        efficiency = DEFAULT_EFFICIENCY[shape_id]
    return BlockShape(shape_id, dt, df, efficiency)


def default_shapes(efficiency: dict | None = None) -> tuple[BlockShape, ...]:
    """All four shapes, optionally overriding efficiencies by shape id."""
    efficiency = efficiency or {}
    return tuple(make_shape(s, efficiency.get(s, efficiency.get(int(s)))) for s in ShapeId)


@dataclass(frozen=True)
class Block:
    block_id: int
    shape: BlockShape
    origin: tuple[int, int]
    minislots: tuple[int, ...]
    end_time_ms: float

    @property
    def shape_id(self) -> ShapeId:
        return self.shape.shape_id

    @property
    def freq_rows(self) -> tuple[int, ...]:
        f0 = self.origin[1]
        return tuple(range(f0, f0 + self.shape.freq_extent))


def census(spec: GridSpec, shape: BlockShape) -> int:
    return max(0, spec.n_time - shape.time_extent + 1) * max(0, spec.n_freq - shape.freq_extent + 1)


def enumerate_blocks(spec: GridSpec, shapes=None) -> list[Block]:
    """Every axis-aligned placement of every requested shape.

    Blocks are ordered shape-major, then by origin in row-major order
    (frequency row outer, time column inner); ``block_id`` is the position
    in that ordering. A shape that does not fit contributes nothing.
    """
    if shapes is None:
        shapes = default_shapes()
    shapes = sorted(shapes, key=lambda s: s.shape_id)
    if not shapes:
        raise ValueError("at least one block shape is required")
    if len({s.shape_id for s in shapes}) != len(shapes):
        raise ValueError("duplicate shape ids")

    blocks = []
    for shape in shapes:
        dt, df = shape.time_extent, shape.freq_extent
        for f0 in range(spec.n_freq - df + 1):
            for t0 in range(spec.n_time - dt + 1):
                slots = tuple(
                    spec.minislot_index(t, f)
                    for f in range(f0, f0 + df)
                    for t in range(t0, t0 + dt)
                )
                blocks.append(Block(
                    block_id=len(blocks),
                    shape=shape,
                    origin=(t0, f0),
                    minislots=slots,
                    end_time_ms=(t0 + dt) * spec.slot_ms,
                ))
    return blocks


def latency_feasible(block: Block, tau_ms: float) -> bool:
    if not tau_ms > 0:
        raise ValueError("latency tolerance must be positive")
    return block.end_time_ms <= tau_ms + _TIME_EPS


def latency_mask(blocks, tau_ms: float) -> np.ndarray:
    """Vectorised :func:`latency_feasible` over a block list."""
    if not tau_ms > 0:
        raise ValueError("latency tolerance must be positive")
    ends = np.array([b.end_time_ms for b in blocks], dtype=float)
    return ends <= tau_ms + _TIME_EPS


@dataclass(frozen=True, eq=False)
class ConflictStructure:
    """Block/mini-slot incidence and the symmetric block conflict relation.

    ``incidence`` is a CSR matrix (blocks x mini-slots); ``adjacency`` a CSR
    matrix (blocks x blocks) with a zero diagonal; ``neighbors[b]`` the sorted
    ids of blocks overlapping ``b``; ``matrix`` the same relation as a dense
    boolean array for O(1) pair queries.
    """

    incidence: sparse.csr_matrix
    adjacency: sparse.csr_matrix
    neighbors: tuple[np.ndarray, ...]
    matrix: np.ndarray = field(repr=False)

    @property
    def n_blocks(self) -> int:
        return self.adjacency.shape[0]

    @property
    def n_minislots(self) -> int:
        return self.incidence.shape[1]

    def conflict(self, b: int, p: int) -> bool:
        return bool(self.matrix[b, p])

    def degree(self) -> np.ndarray:
        return np.diff(self.adjacency.indptr).astype(float)


def build_conflicts(blocks, spec: GridSpec) -> ConflictStructure:
    n = len(blocks)
    rows = np.repeat(np.arange(n), 4)
    cols = np.fromiter((i for b in blocks for i in b.minislots), dtype=np.int64, count=4 * n)
    incidence = sparse.csr_matrix(
        (np.ones(4 * n, dtype=np.int8), (rows, cols)), shape=(n, spec.n_minislots))

    overlap = (incidence.astype(np.int32) @ incidence.T.astype(np.int32)).tocsr()
    overlap.setdiag(0)
    overlap.eliminate_zeros()
    overlap.data[:] = 1
    adjacency = overlap.astype(np.int8)
    adjacency.sort_indices()

    neighbors = tuple(
        adjacency.indices[adjacency.indptr[b]:adjacency.indptr[b + 1]].astype(np.int64)
        for b in range(n)
    )
    matrix = adjacency.toarray().astype(bool)
    matrix.setflags(write=False)
    return ConflictStructure(incidence, adjacency, neighbors, matrix)
