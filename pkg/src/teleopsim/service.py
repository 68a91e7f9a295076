"""Service layer shared by the CLI and the HTTP API.

Request/response schemas are pydantic models; the functions below are the
single implementation behind both the FastAPI routes and the command-line
subcommands, so a batch run triggered over HTTP and one triggered from the
shell are the same code path.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Optional, Union

import numpy as np
from pydantic import BaseModel, Field

from . import __version__
from .analysis import energy_audit, estimate_frf, task_metrics
from .logio import ExperimentLog, load_log
from .simulation import (
    ConfigError,
    SimConfig,
    SimulationAbort,
    grid_conditions,
    run,
    run_grid,
)


class AnalysisError(RuntimeError):
    """Analysis could not be performed on the given log."""


class ChannelModel(BaseModel):
    delay: float = 0.0
    rate: float = 0.0  # Hz; 0 means every tick


class SimConfigModel(BaseModel):
    """Wire form of a run configuration; mirrors SimConfig."""

    dt: float = 1e-4
    duration: float = 10.0
    seed: int = 0
    controller: str = "fic"
    model: Union[str, dict] = "planar2"
    scenario: dict = Field(default_factory=lambda: {"kind": "idle"})
    channels: dict = Field(default_factory=dict)
    gains: dict = Field(default_factory=dict)
    rate_gain: float = 1.0
    stop_on_done: bool = True
    tail: float = 1.0

    def to_core(self) -> SimConfig:
        return SimConfig.from_dict(self.model_dump())

    @staticmethod
    def from_file(path) -> "SimConfigModel":
        try:
            data = json.loads(Path(path).read_text())
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {path}")
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file is not valid JSON: {exc}")
        return SimConfigModel(**data)


class RunRequest(BaseModel):
    config: SimConfigModel
    out_dir: str = "runs"
    name: Optional[str] = None


class RunResult(BaseModel):
    log_path: str
    meta_path: str
    summary: dict


class GridRequest(BaseModel):
    config: SimConfigModel
    delays: list[float] = [0.0, 0.5, 1.0]
    rates: list[float] = [1000.0, 100.0, 10.0]
    out_dir: str = "runs"
    name_prefix: str = "grid"


class GridResult(BaseModel):
    runs: list[RunResult]


class AnalyzeRequest(BaseModel):
    log_path: str
    window_len: int = 2048
    reference_band: tuple[float, float] = (0.05, 0.8)


class AnalyzeResult(BaseModel):
    summary: dict
    outputs: dict


class ReplayRequest(BaseModel):
    log_path: str


class ReplayResult(BaseModel):
    identical: bool
    detail: str


def _save(log: ExperimentLog, out_dir: str, name: str) -> RunResult:
    csv_path, meta_path = log.save(Path(out_dir) / name)
    return RunResult(log_path=str(csv_path), meta_path=str(meta_path),
                     summary=log.summary)


def do_run(req: RunRequest) -> RunResult:
    cfg = req.config.to_core()
    log = run(cfg)
    name = req.name or _default_name(cfg)
    return _save(log, req.out_dir, name)


def _default_name(cfg: SimConfig) -> str:
    scen = cfg.scenario.get("kind", "idle")
    ch = cfg.channel_config("f_fb")
    rate = ch.sample_rate if ch.sample_rate else 1.0 / cfg.dt
    return f"{scen}_{cfg.controller}_d{ch.delay:g}_r{rate:g}_s{cfg.seed}"


def do_grid(req: GridRequest) -> GridResult:
    base = req.config.to_core()
    logs = run_grid(base, delays=tuple(req.delays), rates=tuple(req.rates))
    results = []
    for (delay, rate), log in zip(
            grid_conditions(tuple(req.delays), tuple(req.rates)), logs):
        name = f"{req.name_prefix}_{base.controller}_d{delay:g}_r{rate:g}"
        if log.summary.get("aborted"):
            results.append(RunResult(log_path="", meta_path="",
                                     summary=log.summary))
        else:
            results.append(_save(log, req.out_dir, name))
    return GridResult(runs=results)


def do_analyze(req: AnalyzeRequest) -> AnalyzeResult:
    path = Path(req.log_path)
    if not path.exists():
        raise AnalysisError(f"log not found: {path}")
    log = load_log(path)
    if not log.config:
        raise AnalysisError(f"missing meta file for {path}; cannot recover "
                            "the run configuration")
    dt = float(log.config["dt"])
    fs = 1.0 / dt
    base = path.with_suffix("")
    outputs: dict[str, str] = {}
    summary: dict[str, Any] = {"log": str(path), "metrics": task_metrics(log)}

    ledger = energy_audit(log)
    ledger_rows = np.column_stack([ledger.time, ledger.injected,
                                   ledger.extracted, ledger.stored])
    ledger_path = base.parent / (base.name + ".ledger.csv")
    header = "t,injected,extracted,stored"
    np.savetxt(ledger_path, ledger_rows, delimiter=",", header=header,
               comments="")
    outputs["ledger"] = str(ledger_path)
    summary["passivity"] = {
        "max_extracted_minus_injected": ledger.max_violation(),
        "passive": bool(ledger.max_violation() <= 1e-6),
    }

    if len(log) >= req.window_len:
        frf_cols = [None, None]
        table = None
        for i, axis in enumerate(("x", "y")):
            frf = estimate_frf(log.column(f"ffb_pre_{axis}"),
                               log.column(f"m_v{axis}"), fs,
                               window_len=req.window_len)
            if table is None:
                table = [frf.freqs]
            table += [frf.magnitude, frf.phase, frf.coherence]
            frf_cols[i] = frf
        frf_path = base.parent / (base.name + ".frf.csv")
        np.savetxt(frf_path, np.column_stack(table), delimiter=",",
                   header="freq,mag_x,phase_x,coh_x,mag_y,phase_y,coh_y",
                   comments="")
        outputs["frf"] = str(frf_path)
    else:
        summary["frf"] = f"skipped: log shorter than one window " \
                         f"({len(log)} < {req.window_len})"

    summary_path = base.parent / (base.name + ".analysis.json")
    summary_path.write_text(json.dumps(summary, indent=2, sort_keys=True,
                                       default=float))
    outputs["summary"] = str(summary_path)
    return AnalyzeResult(summary=summary, outputs=outputs)


def do_replay(req: ReplayRequest) -> ReplayResult:
    path = Path(req.log_path)
    if not path.exists():
        raise ConfigError(f"log not found: {path}")
    original = path.read_bytes()
    log = load_log(path)
    if not log.config:
        raise ConfigError(f"missing meta file for {path}")
    cfg = SimConfig.from_dict(log.config)
    fresh = run(cfg).to_csv_bytes()
    if fresh == original:
        return ReplayResult(identical=True,
                            detail=f"{len(original)} bytes identical")
    # locate the first difference for the report
    n = min(len(fresh), len(original))
    first = next((i for i in range(n) if fresh[i] != original[i]), n)
    return ReplayResult(identical=False,
                        detail=f"diverges at byte {first} "
                               f"(sizes {len(original)} vs {len(fresh)})")


def health() -> dict:
    return {"status": "ok", "version": __version__}
