"""Run directories: config echo, manifest, trajectory CSV and optional fit report.

A run is written into a hidden scratch directory next to its final location and renamed
into place only when complete, so concurrent sweeps never see partial output.
"""
from __future__ import annotations

import csv
import json
import os
import platform
import shutil
import time
import uuid
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .. import __version__

SCHEMA_VERSION = 1
CONFIG_FILE = "config.txt"
MANIFEST_FILE = "manifest.json"
TRAJECTORY_FILE = "trajectory.csv"
FIT_FILE = "fit.json"
STATUSES = ("ok", "physics-abort")
OUTPUT_ENV = "FLUIDS_OUTPUT_DIR"

MANIFEST_FIELDS = {
    "schema_version": int,
    "run_id": str,
    "name": str,
    "model": str,
    "status": str,
    "config_digest": str,
    "package_version": str,
    "numpy_version": str,
    "python_version": str,
    "created_utc": str,
    "wall_time_s": float,
    "files": list,
    "columns": list,
    "n_rows": int,
    "summary": dict,
    "warnings": list,
}


class ManifestError(ValueError):
    pass


def output_root(configured: Optional[str] = None) -> Path:
    """FLUIDS_OUTPUT_DIR, else the configured directory, else ./runs."""
    return Path(os.environ.get(OUTPUT_ENV) or configured or "runs")


def _cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return str(v)


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple, np.ndarray)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (np.floating, float)):
        v = float(v)
        return v if np.isfinite(v) else str(v)
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, np.bool_):
        return bool(v)
    return v


class RunDirectory:
    """Context manager collecting one run; :meth:`finish` publishes it atomically."""

    def __init__(self, root, name: str, digest: str):
        self.root = Path(root)
        self.name = name
        self.digest = digest
        self.scratch: Optional[Path] = None
        self.path: Optional[Path] = None
        self.columns: list = []
        self.n_rows = 0
        self._csv = None
        self._writer = None
        self._fit = None
        self._start = time.time()

    def __enter__(self):
        self.root.mkdir(parents=True, exist_ok=True)
        self.scratch = self.root / f".{self.name}-{self.digest}.partial-{uuid.uuid4().hex[:8]}"
        self.scratch.mkdir()
        return self

    def __exit__(self, exc_type, exc, tb):
        if self._csv is not None:
            self._csv.close()
        if self.path is None and self.scratch is not None and self.scratch.exists():
            shutil.rmtree(self.scratch)
        return False

    def write_config(self, text: str) -> None:
        (self.scratch / CONFIG_FILE).write_text(text)

    def start_trajectory(self, columns: Sequence[str]) -> None:
        self.columns = list(columns)
        self._csv = open(self.scratch / TRAJECTORY_FILE, "w", newline="")
        self._writer = csv.writer(self._csv, lineterminator="\n")
        self._writer.writerow(self.columns)

    def write_row(self, row: Sequence) -> None:
        self._writer.writerow([_cell(v) for v in row])
        self.n_rows += 1

    def write_fit(self, report) -> None:
        self._fit = report
        (self.scratch / FIT_FILE).write_text(json.dumps(_jsonable(report.as_dict()), indent=2) + "\n")

    def finish(self, model: str, status: str = "ok", summary: Optional[dict] = None,
               warnings: Optional[list] = None) -> Path:
        if self._csv is not None:
            self._csv.close()
            self._csv = None
        files = sorted([CONFIG_FILE, MANIFEST_FILE, TRAJECTORY_FILE] + ([FIT_FILE] if self._fit else []))
        manifest = {
            "schema_version": SCHEMA_VERSION,
            "run_id": f"{self.name}-{self.digest}",
            "name": self.name,
            "model": model,
            "status": status,
            "config_digest": self.digest,
            "package_version": __version__,
            "numpy_version": np.__version__,
            "python_version": platform.python_version(),
            "created_utc": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
            "wall_time_s": round(time.time() - self._start, 3),
            "files": files,
            "columns": self.columns,
            "n_rows": self.n_rows,
            "summary": _jsonable(summary or {}),
            "warnings": list(warnings or []),
        }
        validate_manifest(manifest)
        (self.scratch / MANIFEST_FILE).write_text(json.dumps(manifest, indent=2) + "\n")
        target = self.root / manifest["run_id"]
        k = 1
        while True:
            try:
                os.rename(self.scratch, target)
                break
            except OSError:
                if not target.exists():
                    raise
                k += 1
                target = self.root / f"{manifest['run_id']}-{k}"
        self.path = target
        return target


def validate_manifest(m: dict) -> None:
    for key, kind in MANIFEST_FIELDS.items():
        if key not in m:
            raise ManifestError(f"manifest is missing {key!r}")
        if kind is float and isinstance(m[key], int):
            continue
        if not isinstance(m[key], kind):
            raise ManifestError(f"manifest field {key!r} should be {kind.__name__}")
    extra = set(m) - set(MANIFEST_FIELDS)
    if extra:
        raise ManifestError(f"unexpected manifest fields {sorted(extra)}")
    if m["schema_version"] != SCHEMA_VERSION:
        raise ManifestError(f"unsupported schema_version {m['schema_version']}")
    if m["status"] not in STATUSES:
        raise ManifestError(f"unknown status {m['status']!r}")


def validate_run_dir(path) -> dict:
    """Check the file set, the manifest schema and the CSV header; return the manifest."""
    path = Path(path)
    m = json.loads((path / MANIFEST_FILE).read_text())
    validate_manifest(m)
    present = sorted(p.name for p in path.iterdir())
    if present != sorted(m["files"]):
        raise ManifestError(f"run directory holds {present}, manifest lists {m['files']}")
    with open(path / TRAJECTORY_FILE, newline="") as fh:
        rows = list(csv.reader(fh))
    if rows[0] != m["columns"]:
        raise ManifestError("trajectory header does not match the manifest columns")
    if len(rows) - 1 != m["n_rows"]:
        raise ManifestError("trajectory row count does not match the manifest")
    if FIT_FILE in m["files"]:
        fit = json.loads((path / FIT_FILE).read_text())
        for key in ("kind", "exponent_or_rate", "window", "r_squared"):
            if key not in fit:
                raise ManifestError(f"fit report is missing {key!r}")
        if not 0.0 <= fit["r_squared"] <= 1.0:
            raise ManifestError("fit r_squared outside [0, 1]")
    return m


def read_trajectory(path) -> dict:
    """Columns of a trajectory CSV as float arrays (text columns stay strings)."""
    with open(Path(path) / TRAJECTORY_FILE, newline="") as fh:
        rows = list(csv.reader(fh))
    out = {}
    for j, name in enumerate(rows[0]):
        col = [r[j] for r in rows[1:]]
        try:
            out[name] = np.array([float(x) for x in col])
        except ValueError:
            out[name] = col
    return out
