"""Experiment log container and its on-disk format.

A log is a fixed-cadence table of per-tick rows plus the full run
configuration. On disk it becomes two files: `<name>.csv` with an RFC 4180
header row and shortest-round-trip float formatting (so identical runs
produce identical bytes), and `<name>.meta.json` carrying the configuration
and a small summary, which is what `replay` uses to re-execute a run.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


@dataclass
class ExperimentLog:
    columns: list[str]
    rows: np.ndarray  # (n_ticks, n_columns) float64
    config: dict
    summary: dict = field(default_factory=dict)

    def column(self, name: str) -> np.ndarray:
        return self.rows[:, self.columns.index(name)]

    def __len__(self) -> int:
        return len(self.rows)

    def to_csv_bytes(self) -> bytes:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\r\n")
        w.writerow(self.columns)
        for row in self.rows:
            w.writerow([repr(float(v)) for v in row])
        return buf.getvalue().encode()

    def save(self, path) -> tuple[Path, Path]:
        """Write `<path>.csv` and `<path>.meta.json`; returns both paths.

        Names may contain dots (grid conditions like d0.5), so suffixes are
        appended textually rather than via with_suffix."""
        path = Path(path)
        name = path.name
        if name.endswith(".csv"):
            name = name[:-4]
        path.parent.mkdir(parents=True, exist_ok=True)
        csv_path = path.parent / (name + ".csv")
        meta_path = path.parent / (name + ".meta.json")
        csv_path.write_bytes(self.to_csv_bytes())
        meta_path.write_text(json.dumps(
            {"config": self.config, "summary": self.summary,
             "columns": self.columns, "n_rows": int(len(self.rows))},
            indent=2, sort_keys=True))
        return csv_path, meta_path


def load_log(csv_path) -> ExperimentLog:
    csv_path = Path(csv_path)
    meta_path = meta_path_for(csv_path)
    text = csv_path.read_text()
    reader = csv.reader(io.StringIO(text))
    columns = next(reader)
    rows = np.array([[float(v) for v in row] for row in reader], dtype=float)
    if rows.size == 0:
        rows = rows.reshape(0, len(columns))
    config, summary = {}, {}
    if meta_path.exists():
        meta = json.loads(meta_path.read_text())
        config = meta.get("config", {})
        summary = meta.get("summary", {})
    return ExperimentLog(columns=columns, rows=rows, config=config,
                         summary=summary)


def meta_path_for(csv_path) -> Path:
    p = Path(csv_path)
    name = p.name
    if name.endswith(".csv"):
        name = name[:-4]
    return p.parent / (name + ".meta.json")
