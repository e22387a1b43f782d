"""JSON experiment configuration.

A config is a JSON object with a mandatory ``schema_version`` (currently 1).
Every other key is optional; unknown keys anywhere are rejected. Defaults::

    {
      "schema_version": 1,
      "scenario_id": "default",
      "grid": {"n_time": 16, "n_freq": 11, "window_ms": 2.0, "bandwidth_mhz": 2.0},
      "efficiency": [0.95, 0.93, 0.90, 0.90],
      "snr_db": [5.0, 30.0],
      "services": {"q_kbps": [64, 64, 64, 64, 64], "tau_ms": [1, 1, 1, 1, 1],
                   "n_embb": 5, "embb_tau_ms": null},
      "numerology": {"mode": "flexible", "fixed_shape": null},
      "solver": {"r_tilde": 1.0, "H": null, "delta": 0.5, "loss": "conflicting",
                 "mbp_order": "descending", "time_limit_ms": null, "gap_tol": 0.0},
      "monte_carlo": {"n_trials": 10, "base_seed": 0, "roster": [...all but bruteforce],
                      "exact_mode": "full", "exact_trials": 10, "record_timing": false},
      "sweep": null
    }

``embb_tau_ms: null`` means the grid window. ``H: null`` derives the category
count from the instance. ``sweep`` may hold ``{"q_kbps": [...], "tau_ms":
[...]}``; it expands into one scenario per (q, tau) pair with every URLLC
service given that demand and tolerance.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace

from .grid import DEFAULT_EFFICIENCY, GridSpec, ShapeId
from .harness import HEURISTICS, Scenario, SolverParams

SCHEMA_VERSION = 1


class ConfigError(ValueError):
    pass


_SECTIONS = {
    "schema_version": None,
    "scenario_id": None,
    "grid": {"n_time", "n_freq", "window_ms", "bandwidth_mhz"},
    "efficiency": None,
    "snr_db": None,
    "services": {"q_kbps", "tau_ms", "n_embb", "embb_tau_ms"},
    "numerology": {"mode", "fixed_shape"},
    "solver": {"r_tilde", "H", "delta", "loss", "mbp_order", "time_limit_ms", "gap_tol"},
    "monte_carlo": {"n_trials", "base_seed", "roster", "exact_mode", "exact_trials", "record_timing"},
    "sweep": {"q_kbps", "tau_ms"},
}


@dataclass(frozen=True)
class Config:
    scenarios: tuple[Scenario, ...]
    record_timing: bool = False

    @property
    def base(self) -> Scenario:
        return self.scenarios[0]


def _check_keys(obj, allowed, where):
    if not isinstance(obj, dict):
        raise ConfigError(f"{where} must be a JSON object")
    unknown = sorted(set(obj) - set(allowed))
    if unknown:
        raise ConfigError(f"unknown key(s) in {where}: {', '.join(unknown)}")


def parse_config(doc: dict) -> Config:
    _check_keys(doc, _SECTIONS, "config")
    if "schema_version" not in doc:
        raise ConfigError("schema_version is required")
    if doc["schema_version"] != SCHEMA_VERSION:
        raise ConfigError(f"unsupported schema_version {doc['schema_version']!r} (expected {SCHEMA_VERSION})")
    for name, keys in _SECTIONS.items():
        if keys is not None and doc.get(name) is not None:
            _check_keys(doc[name], keys, name)

    grid = doc.get("grid", {})
    svc = doc.get("services", {})
    num = doc.get("numerology", {})
    sol = doc.get("solver", {})
    mc = doc.get("monte_carlo", {})
    try:
        spec = GridSpec(**grid)
        q = tuple(svc.get("q_kbps", [64.0] * 5))
        tau = tuple(svc.get("tau_ms", [1.0] * len(q)))
        record_timing = mc.get("record_timing", False)
        if not isinstance(record_timing, bool):
            raise ConfigError("monte_carlo.record_timing must be true or false")
        base = Scenario(
            scenario_id=str(doc.get("scenario_id", "default")),
            grid=spec,
            numerology=num.get("mode", "flexible"),
            fixed_shape=num.get("fixed_shape"),
            q_kbps=q,
            tau_ms=tau,
            n_embb=int(svc.get("n_embb", 5)),
            embb_tau_ms=svc.get("embb_tau_ms"),
            snr_db=tuple(doc.get("snr_db", (5.0, 30.0))),
            efficiency=tuple(doc.get("efficiency", [DEFAULT_EFFICIENCY[s] for s in ShapeId])),
            n_trials=int(mc.get("n_trials", 10)),
            base_seed=int(mc.get("base_seed", 0)),
            roster=tuple(mc.get("roster", ("exact", "p1") + HEURISTICS)),
            params=SolverParams(**sol),
            exact_mode=mc.get("exact_mode", "full"),
            exact_trials=int(mc.get("exact_trials", 10)),
        )
        if len(base.snr_db) != 2 or not base.snr_db[0] < base.snr_db[1]:
            raise ConfigError("snr_db must be [low, high] with low < high")
        scenarios = [base]
        sweep = doc.get("sweep")
        if sweep is not None:
            scenarios = []
            n_u = len(base.q_kbps)
            for qv in sweep.get("q_kbps", [None]):
                for tv in sweep.get("tau_ms", [None]):
                    qs = base.q_kbps if qv is None else (float(qv),) * n_u
                    ts = base.tau_ms if tv is None else (float(tv),) * n_u
                    sid = base.scenario_id + (f"-q{qv:g}" if qv is not None else "") + \
                        (f"-tau{tv:g}" if tv is not None else "")
                    scenarios.append(replace(base, scenario_id=sid, q_kbps=qs, tau_ms=ts))
            if not scenarios:
                raise ConfigError("sweep produced no scenarios")
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    return Config(tuple(scenarios), record_timing)


def load_config(path) -> Config:
    """Read and validate a config file; ``None`` gives the defaults."""
    if path is None:
        return parse_config({"schema_version": SCHEMA_VERSION})
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON: {exc}") from exc
    return parse_config(doc)
