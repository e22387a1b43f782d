"""Service sets, SNR realizations and the block/service throughput matrix.

Rates use a Shannon model per mini-slot scaled by a per-shape efficiency
factor. SNR is drawn per (service, frequency row) and held constant over
time within a trial. Random draws use NumPy's PCG64 bit generator seeded with
the trial seed, so a (seed, configuration) pair fixes the matrix bit-exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import GridSpec, latency_mask


@dataclass(frozen=True)
class Service:
    service_id: int
    tau_ms: float
    q_kbps: float = 0.0
    urllc: bool = False


@dataclass(frozen=True)
class ServiceSet:
    """URLLC services (with demands) followed by eMBB services.

    Column ``k`` of every per-service array refers to ``services[k]``.
    """

    urllc: tuple[Service, ...]
    embb: tuple[Service, ...]

    def __post_init__(self):
        ids = [s.service_id for s in self.services]
        if len(set(ids)) != len(ids):
            raise ValueError("service ids must be unique")
        for s in self.services:
            if not s.tau_ms > 0:
                raise ValueError(f"service {s.service_id}: latency tolerance must be positive")
        for s in self.urllc:
            if not s.q_kbps > 0:
                raise ValueError(f"URLLC service {s.service_id}: demand must be positive")

    @classmethod
    def build(cls, q_kbps, tau_ms, n_embb: int, embb_tau_ms: float = 2.0) -> "ServiceSet":
        """Services numbered 0.. with URLLC first."""
        q_kbps = list(q_kbps)
        tau_ms = list(tau_ms)
        if len(q_kbps) != len(tau_ms):
            raise ValueError("q_kbps and tau_ms must have the same length")
        urllc = tuple(Service(k, float(t), float(q), True) for k, (q, t) in enumerate(zip(q_kbps, tau_ms)))
        n = len(urllc)
        embb = tuple(Service(n + j, float(embb_tau_ms)) for j in range(n_embb))
        return cls(urllc, embb)

    @property
    def services(self) -> tuple[Service, ...]:
        return self.urllc + self.embb

    @property
    def n_urllc(self) -> int:
        return len(self.urllc)

    @property
    def n_services(self) -> int:
        return len(self.urllc) + len(self.embb)

    @property
    def demands(self) -> np.ndarray:
        return np.array([s.q_kbps for s in self.urllc], dtype=float)

    @property
    def urllc_cols(self) -> np.ndarray:
        return np.arange(self.n_urllc)

    @property
    def embb_cols(self) -> np.ndarray:
        return np.arange(self.n_urllc, self.n_services)


@dataclass(frozen=True, eq=False)
class SnrRealization:
    snr_db: np.ndarray  # (n_services, n_freq)
    seed: int

    @property
    def snr_linear(self) -> np.ndarray:
        return 10.0 ** (self.snr_db / 10.0)


def sample_snr(services: ServiceSet, spec: GridSpec, range_db=(5.0, 30.0), seed: int = 0) -> SnrRealization:
    lo, hi = float(range_db[0]), float(range_db[1])
    if not lo < hi:
        raise ValueError(f"SNR interval must satisfy lower < upper, got [{lo}, {hi}]")
    rng = np.random.Generator(np.random.PCG64(seed))
    snr = rng.uniform(lo, hi, size=(services.n_services, spec.n_freq))
    snr.setflags(write=False)
    return SnrRealization(snr, int(seed))


def minislot_bits(snr_linear, spec: GridSpec, efficiency: float):
    """Bits carried by one mini-slot at the given linear SNR."""
    w_hz = spec.slot_bandwidth_mhz * 1e6
    t_s = spec.slot_ms * 1e-3
    return efficiency * w_hz * t_s * np.log2(1.0 + np.asarray(snr_linear, dtype=float))


def throughput_matrix(snr, blocks, services: ServiceSet, spec: GridSpec,
                      snr_linear: np.ndarray | None = None) -> np.ndarray:
    """Rate in kbps of every (block, service) pair, latency-masked for URLLC.

    ``snr_linear`` (n_services x n_freq) overrides the realization, which
    tests use to pin exact channel states.
    """
    lin = snr.snr_linear if snr_linear is None else np.asarray(snr_linear, dtype=float)
    n_services = services.n_services
    if lin.shape != (n_services, spec.n_freq):
        raise ValueError(f"SNR array shape {lin.shape} does not match ({n_services}, {spec.n_freq})")

    window_s = spec.window_ms * 1e-3
    r = np.zeros((len(blocks), n_services))
    # bits per mini-slot at efficiency 1, per (service, row)
    unit_bits = minislot_bits(lin, spec, 1.0)
    for b, block in enumerate(blocks):
        rows = [i // spec.n_time for i in block.minislots]
        bits = block.shape.efficiency * unit_bits[:, rows].sum(axis=1)
        r[b] = bits / window_s / 1e3

    for k, svc in enumerate(services.services):
        if svc.urllc:
            r[~latency_mask(blocks, svc.tau_ms), k] = 0.0
    r.setflags(write=False)
    return r
