"""Run registry: per-run JSON records plus an append-only index.

Desk-scale persistence with no database: every run writes
<root>/records/<run_id>.json and appends one line to <root>/index.jsonl.
All writes go through a temp-file-then-rename so a crash never leaves a
half-written record, and every artifact is content-addressed by sha256 so
registry integrity is checkable after the fact.
"""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
import time
from dataclasses import asdict, dataclass, field

from .errors import UnknownRun

TOOL_VERSION = "0.1.0"


@dataclass
class RunRecord:
    run_id: str
    scenario_hash: str
    task: str
    created: str
    artifacts: dict = field(default_factory=dict)  # name -> {path, sha256, kind}
    summary: dict = field(default_factory=dict)
    tool_version: str = TOOL_VERSION

    def artifact_paths(self, kind=None):
        return [a["path"] for a in self.artifacts.values()
                if kind is None or a.get("kind") == kind]

    def kinds(self):
        return sorted({a.get("kind") for a in self.artifacts.values()})


def file_digest(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


def atomic_write_text(path, text):
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


class Registry:
    def __init__(self, root):
        self.root = os.path.abspath(root)
        self.records_dir = os.path.join(self.root, "records")
        self.index_path = os.path.join(self.root, "index.jsonl")
        os.makedirs(self.records_dir, exist_ok=True)

    def new_run_id(self, scenario_hash):
        base = scenario_hash[:10]
        n = 0
        while True:
            rid = f"{base}-{n:03d}"
            if not os.path.exists(self._record_path(rid)):
                return rid
            n += 1

    def _record_path(self, run_id):
        return os.path.join(self.records_dir, f"{run_id}.json")

    def save(self, record: RunRecord):
        payload = json.dumps(asdict(record), sort_keys=True, indent=2)
        atomic_write_text(self._record_path(record.run_id), payload)
        line = json.dumps({"run_id": record.run_id, "task": record.task,
                           "scenario_hash": record.scenario_hash,
                           "created": record.created}, sort_keys=True)
        # index append is effectively atomic for one-line writes; the record
        # file is the source of truth either way
        with open(self.index_path, "a") as fh:
            fh.write(line + "\n")
        return record

    def load(self, run_id):
        path = self._record_path(run_id)
        if not os.path.exists(path):
            raise UnknownRun(f"no run {run_id!r} under {self.root}")
        with open(path) as fh:
            data = json.load(fh)
        return RunRecord(**data)

    def list_runs(self):
        if not os.path.exists(self.index_path):
            return []
        out = []
        with open(self.index_path) as fh:
            for line in fh:
                line = line.strip()
                if line:
                    out.append(json.loads(line))
        return out

    def verify(self, run_id):
        """Check every artifact exists and matches its recorded digest."""
        rec = self.load(run_id)
        problems = []
        for name, a in rec.artifacts.items():
            if not os.path.exists(a["path"]):
                problems.append(f"{name}: missing file {a['path']}")
            elif file_digest(a["path"]) != a["sha256"]:
                problems.append(f"{name}: digest mismatch for {a['path']}")
        return problems


def now_iso():
    return time.strftime("%Y-%m-%dT%H:%M:%S", time.gmtime())
