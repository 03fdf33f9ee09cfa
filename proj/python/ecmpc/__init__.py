"""Error-compensated convex MPC for a single-rigid-body quadruped.

Scenario helpers take a preset name, a path to a JSON file, or a dict of
overrides (a dict may name a "preset" to start from).
"""

import json

from ._ecmpc import (
    ArmavModel,
    Error,
    f_quantile,
    fit_armav,
    fit_error_log,
    scenario_names,
    select_order,
    solve_qp,
    whiteness_fraction,
)
from . import _ecmpc

__all__ = [
    "ArmavModel",
    "Error",
    "compare",
    "f_quantile",
    "fit_armav",
    "fit_error_log",
    "run",
    "scenario",
    "scenario_names",
    "select_order",
    "solve_qp",
    "whiteness_fraction",
]


def scenario(source="ground_truth", **overrides):
    """Scenario configuration as a dict.

    Top-level keyword overrides are applied on top, e.g.
    scenario("wrong_mass", duration=5.0, seed=3).
    """
    if isinstance(source, dict):
        cfg = json.loads(_ecmpc.scenario_json(source["preset"])) if "preset" in source else {}
        _merge(cfg, {k: v for k, v in source.items() if k != "preset"})
    else:
        cfg = json.loads(_ecmpc.scenario_json(str(source)))
    _merge(cfg, overrides)
    return cfg


def _merge(base, extra):
    for key, value in extra.items():
        if isinstance(value, dict) and isinstance(base.get(key), dict):
            _merge(base[key], value)
        else:
            base[key] = value


def run(source="ground_truth", compensation=False, **overrides):
    """Runs one closed loop; returns metrics, the telemetry array and flags."""
    cfg = scenario(source, **overrides)
    cfg["compensation"] = bool(compensation)
    return _ecmpc.run_scenario(json.dumps(cfg))


def compare(source="ground_truth", **overrides):
    """Paired baseline/compensated runs under the same seed."""
    return _ecmpc.paired_compare(json.dumps(scenario(source, **overrides)))
