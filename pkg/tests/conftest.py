from __future__ import annotations

import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))

from gridsched import _kernels  # noqa: E402
from gridsched.channel import ServiceSet, sample_snr, throughput_matrix  # noqa: E402
from gridsched.grid import GridSpec, enumerate_blocks, make_shape  # noqa: E402
from gridsched.schedule import InstanceP0  # noqa: E402

# reduced grid with the default mini-slot size (0.125 ms x 2/11 MHz)
REDUCED = GridSpec(8, 6, 1.0, 12 / 11)


def make_inst(spec=REDUCED, q=(300.0, 300.0), tau=(0.5, 0.5), n_embb=2, seed=0, shapes=None,
              embb_tau=None, snr_db=(5.0, 30.0)):
    if shapes is not None:
        shapes = [make_shape(s) for s in shapes]
    blocks = enumerate_blocks(spec, shapes)
    svc = ServiceSet.build(q, tau, n_embb, embb_tau_ms=spec.window_ms if embb_tau is None else embb_tau)
    snr = sample_snr(svc, spec, snr_db, seed=seed)
    r = throughput_matrix(snr, blocks, svc, spec)
    return InstanceP0.from_parts(spec, blocks, r, svc)


def inst_from_rates(spec, shapes, r, n_urllc, q, tau=None):
    """Instance with a hand-written rate matrix (URLLC columns first)."""
    blocks = enumerate_blocks(spec, [make_shape(s) for s in shapes])
    r = np.asarray(r, dtype=float).reshape(len(blocks), -1)
    n_k = r.shape[1]
    tau = [spec.window_ms] * n_urllc if tau is None else tau
    svc = ServiceSet.build(q, tau, n_k - n_urllc, embb_tau_ms=spec.window_ms)
    return InstanceP0.from_parts(spec, blocks, r, svc)


def tiny_inst(seed, n_urllc=1, n_embb=1, q=None):
    """4x4 grid with shapes 1 and 2: 13 blocks, small enough for brute force."""
    spec = GridSpec(4, 4, 1.0, 8 / 11)
    rng = np.random.default_rng(seed)
    drawn = [float(rng.uniform(100, 900)) for _ in range(n_urllc)]
    q = drawn if q is None else q
    tau = [float(rng.choice([0.5, 0.75, 1.0])) for _ in range(n_urllc)]
    return make_inst(spec, q, tau, n_embb, seed=seed, shapes=(1, 2))


@pytest.fixture(params=sorted(_kernels.BACKENDS))
def backend(request):
    return request.param
