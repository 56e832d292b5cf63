"""Run-directory output: CSV and JSON files plus a checksummed manifest.

CSV values are written with 17 significant digits and JSON with sorted
keys, so re-running a command with the same inputs (and the fixed-step
integrator) gives byte-identical files.
"""

from __future__ import annotations

import csv
import hashlib
import json
import os
import tempfile
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

MANIFEST = "manifest.json"


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.17g}"
    return str(x)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if np.isfinite(x) else str(x)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, Path):
        return str(obj)
    return obj


def csv_text(header, rows) -> str:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(x) for x in row))
    return "\n".join(lines) + "\n"


def json_text(data) -> str:
    return json.dumps(_jsonable(data), indent=2, sort_keys=True) + "\n"


def read_csv(path):
    """Header and float rows of a CSV written by :func:`csv_text`."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = np.array([[float(x) for x in row] for row in reader if row])
    return header, rows


def atomic_write(path, text: str) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise


def sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


class RunWriter:
    """Single writer for one run directory.

    Every file goes through it so the manifest can list it; call
    :meth:`finish` at the end to write the manifest atomically.
    """

    def __init__(self, directory, config: dict, command: str, version: str = "unknown"):
        self.dir = Path(directory)
        self.dir.mkdir(parents=True, exist_ok=True)
        self.config = config
        self.command = command
        self.version = version
        self.started = datetime.now(timezone.utc).isoformat()
        self.files: list[str] = []

    def path(self, name: str) -> Path:
        return self.dir / name

    def _register(self, name: str) -> Path:
        if name not in self.files:
            self.files.append(name)
        return self.path(name)

    def csv(self, name: str, header, rows) -> Path:
        p = self._register(name)
        atomic_write(p, csv_text(header, rows))
        return p

    def json(self, name: str, data) -> Path:
        p = self._register(name)
        atomic_write(p, json_text(data))
        return p

    def text(self, name: str, text: str) -> Path:
        p = self._register(name)
        atomic_write(p, text)
        return p

    def add_existing(self, name: str) -> Path:
        """Register a file written by someone else (a figure, say)."""
        return self._register(name)

    def finish(self) -> Path:
        manifest = {
            "command": self.command,
            "config": self.config,
            "artifact_version": self.version,
            "started": self.started,
            "finished": datetime.now(timezone.utc).isoformat(),
            "files": {name: sha256(self.path(name)) for name in sorted(self.files)},
        }
        p = self.path(MANIFEST)
        atomic_write(p, json_text(manifest))
        return p


def verify_manifest(directory) -> dict:
    """Map of file name to whether its checksum still matches."""
    directory = Path(directory)
    manifest = json.loads((directory / MANIFEST).read_text())
    return {
        name: (directory / name).exists() and sha256(directory / name) == digest
        for name, digest in manifest["files"].items()
    }
