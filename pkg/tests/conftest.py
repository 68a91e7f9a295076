import logging

import pytest

from teleopsim.simulation import SimConfig, run, run_grid, grid_conditions

logging.disable(logging.WARNING)

GRID_BASE = {
    "dt": 2.5e-4,
    "duration": 90.0,
    "controller": "fic",
    "scenario": {"kind": "button_press", "profile": "expert"},
}

PAIRED_BASE = {
    "dt": 1e-4,
    "duration": 4.0,
    "stop_on_done": False,
    "scenario": {"kind": "impulses", "count": 1, "peak": 20.0,
                 "duration": 0.010, "direction": [1.0, 0.0]},
}

IMPULSE14 = {
    "dt": 5e-4,
    "duration": 36.0,
    "scenario": {"kind": "impulses"},
    "seed": 0,
}


@pytest.fixture(scope="session")
def suite_runs():
    """Registry of every full simulation executed by the acceptance suite:
    name -> (SimConfig, ExperimentLog). The passivity and determinism
    criteria sweep everything registered here."""
    return {}


@pytest.fixture(scope="session")
def grid_logs(suite_runs):
    base = SimConfig.from_dict(GRID_BASE)
    logs = run_grid(base)
    out = []
    for (delay, rate), log in zip(grid_conditions(), logs):
        cfg = SimConfig.from_dict({**GRID_BASE,
                                   "channels": {"delay": delay,
                                                "rate": rate}})
        suite_runs[f"grid_d{delay:g}_r{rate:g}"] = (cfg, log)
        out.append((delay, rate, log))
    return out


@pytest.fixture(scope="session")
def paired_logs(suite_runs):
    out = {}
    for controller in ("fic", "ic"):
        cfg = SimConfig.from_dict({**PAIRED_BASE, "controller": controller})
        log = run(cfg)
        suite_runs[f"paired_{controller}"] = (cfg, log)
        out[controller] = log
    return out


@pytest.fixture(scope="session")
def impulse_log(suite_runs):
    cfg = SimConfig.from_dict(IMPULSE14)
    log = run(cfg)
    suite_runs["impulse14"] = (cfg, log)
    return log
