"""Run directory plumbing: manifest, task journal, CSV artifacts.

A sweep directory holds
  manifest.json   run parameters (seed, grid, config snapshot, tool version)
  journal.jsonl   one line per completed task, appended as tasks finish
  *.csv           derived artifacts, regenerated from the journal

The journal is the source of truth for resumption: a task with a journal line
is never re-simulated, and interrupted runs leave at worst a truncated final
line, which is dropped on load. CSVs carry a comment header with the tool
version, master seed and config hash; with canonical sorting on, their bytes
are a pure function of (parameters, seed) regardless of worker count.
"""

from __future__ import annotations

import hashlib
import io
import json
import os
import threading
from dataclasses import dataclass

from . import __version__

SCHEMA = 1


def config_hash(payload: dict) -> str:
    blob = json.dumps(payload, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()[:12]


def fmt(x) -> str:
    """Stable scalar formatting for CSV cells."""
    if isinstance(x, float):
        return format(x, ".12g")
    return str(x)


def atomic_write(path: str, data: str) -> None:
    tmp = path + ".tmp"
    with open(tmp, "w") as f:
        f.write(data)
        f.flush()
        os.fsync(f.fileno())
    os.replace(tmp, path)


def write_csv(path: str, header_meta: dict, columns: list[str], rows: list[tuple]) -> None:
    buf = io.StringIO()
    buf.write(f"# sm-arena v{__version__} schema={SCHEMA}\n")
    meta = " ".join(f"{k}={v}" for k, v in header_meta.items())
    buf.write(f"# {meta}\n")
    buf.write(",".join(columns) + "\n")
    for row in rows:
        buf.write(",".join(fmt(c) for c in row) + "\n")
    atomic_write(path, buf.getvalue())


def read_csv(path: str) -> tuple[list[str], list[list[str]]]:
    columns: list[str] = []
    rows: list[list[str]] = []
    with open(path) as f:
        for line in f:
            line = line.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            if not columns:
                columns = line.split(",")
            else:
                rows.append(line.split(","))
    return columns, rows


@dataclass
class RunDir:
    path: str

    def __post_init__(self):
        os.makedirs(self.path, exist_ok=True)
        self._lock = threading.Lock()

    def file(self, name: str) -> str:
        return os.path.join(self.path, name)

    # -- manifest ----------------------------------------------------------
    def write_manifest(self, manifest: dict) -> None:
        manifest = dict(manifest, version=__version__, schema=SCHEMA)
        atomic_write(self.file("manifest.json"), json.dumps(manifest, indent=2, sort_keys=True))

    def read_manifest(self) -> dict:
        with open(self.file("manifest.json")) as f:
            return json.load(f)

    # -- journal -----------------------------------------------------------
    def load_journal(self) -> dict[str, dict]:
        """Completed tasks keyed by task id; tolerates a torn final line."""
        done: dict[str, dict] = {}
        path = self.file("journal.jsonl")
        if not os.path.exists(path):
            return done
        with open(path) as f:
            for line in f:
                line = line.strip()
                if not line:
                    continue
                try:
                    rec = json.loads(line)
                except json.JSONDecodeError:
                    continue  # torn tail from an interrupted run
                done[rec["task"]] = rec["data"]
        return done

    def append_journal(self, task: str, data: dict) -> None:
        line = json.dumps({"task": task, "data": data}, sort_keys=True)
        with self._lock:
            with open(self.file("journal.jsonl"), "a") as f:
                f.write(line + "\n")
                f.flush()
