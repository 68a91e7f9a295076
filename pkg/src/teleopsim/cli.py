"""Command-line client for the experiment service.

Subcommands run, grid, analyze and replay call the same service functions
the HTTP API exposes; serve starts the FastAPI application with the live
WebSocket session. Exit codes: 1 for invalid configuration or missing
files, 2 for a simulation abort, 3 for an analysis failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

from .service import (
    AnalysisError,
    AnalyzeRequest,
    GridRequest,
    ReplayRequest,
    RunRequest,
    SimConfigModel,
    do_analyze,
    do_grid,
    do_replay,
    do_run,
)
from .simulation import ConfigError, SimulationAbort

log = logging.getLogger("teleopsim")

EXIT_CONFIG = 1
EXIT_ABORT = 2
EXIT_ANALYSIS = 3

GRID_DEFAULT_CONFIG = {
    "dt": 2.5e-4,
    "duration": 90.0,
    "scenario": {"kind": "button_press"},
}


def _floats(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v != ""]


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="teleopsim",
                                description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="cmd", required=True)

    run_p = sub.add_parser("run", help="execute one configured run")
    run_p.add_argument("--config", required=True, help="run config JSON")
    run_p.add_argument("--out", default="runs", help="output directory")
    run_p.add_argument("--name", default=None, help="log base name")

    grid_p = sub.add_parser("grid", help="run the delay/bandwidth grid")
    grid_p.add_argument("--config", default=None,
                        help="base config JSON (default: button task)")
    grid_p.add_argument("--delays", type=_floats, default=[0.0, 0.5, 1.0])
    grid_p.add_argument("--rates", type=_floats,
                        default=[1000.0, 100.0, 10.0])
    grid_p.add_argument("--controller", default=None,
                        choices=["fic", "ic"])
    grid_p.add_argument("--out", default="runs")
    grid_p.add_argument("--prefix", default="grid")

    an_p = sub.add_parser("analyze", help="frequency response, energy "
                                          "ledger and task metrics of a log")
    an_p.add_argument("--log", required=True, help="ExperimentLog CSV path")
    an_p.add_argument("--window", type=int, default=2048,
                      help="Welch window length in samples")

    rp_p = sub.add_parser("replay", help="re-execute a logged config and "
                                         "verify byte-identical output")
    rp_p.add_argument("--log", required=True, help="ExperimentLog CSV path")

    sv_p = sub.add_parser("serve", help="start the live operator service")
    sv_p.add_argument("--config", default=None,
                      help="live session config JSON")
    sv_p.add_argument("--port", type=int, default=8000)
    sv_p.add_argument("--host", default="127.0.0.1")
    sv_p.add_argument("--rtf", type=float, default=1.0,
                      help="real-time factor of the live session")
    return p


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        if args.cmd == "run":
            cfg = SimConfigModel.from_file(args.config)
            res = do_run(RunRequest(config=cfg, out_dir=args.out,
                                    name=args.name))
            print(json.dumps(res.model_dump(), indent=2, default=float))
            return 0
        if args.cmd == "grid":
            if args.config:
                cfg = SimConfigModel.from_file(args.config)
            else:
                cfg = SimConfigModel(**GRID_DEFAULT_CONFIG)
            if args.controller:
                cfg = cfg.model_copy(update={"controller": args.controller})
            res = do_grid(GridRequest(config=cfg, delays=args.delays,
                                      rates=args.rates, out_dir=args.out,
                                      name_prefix=args.prefix))
            for r in res.runs:
                line = {"log": r.log_path,
                        "success": r.summary.get("success"),
                        "completion_time": r.summary.get("completion_time"),
                        "aborted": r.summary.get("aborted", False)}
                print(json.dumps(line, default=float))
            aborted = sum(1 for r in res.runs
                          if r.summary.get("aborted", False))
            return EXIT_ABORT if aborted else 0
        if args.cmd == "analyze":
            res = do_analyze(AnalyzeRequest(log_path=args.log,
                                            window_len=args.window))
            print(json.dumps(res.model_dump(), indent=2, default=float))
            return 0
        if args.cmd == "replay":
            res = do_replay(ReplayRequest(log_path=args.log))
            print(("identical" if res.identical else "DIVERGED")
                  + ": " + res.detail)
            return 0 if res.identical else EXIT_ABORT
        if args.cmd == "serve":
            from .server import serve
            live = None
            if args.config:
                live = SimConfigModel.from_file(args.config).model_dump()
            serve(port=args.port, host=args.host, live_config=live,
                  rtf=args.rtf)
            return 0
    except ConfigError as exc:
        log.error("invalid configuration: %s", exc)
        return EXIT_CONFIG
    except SimulationAbort as exc:
        log.error("simulation aborted: %s", exc)
        return EXIT_ABORT
    except AnalysisError as exc:
        log.error("analysis failed: %s", exc)
        return EXIT_ANALYSIS
    return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
