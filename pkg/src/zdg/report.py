"""Machine-readable run reports: ordered JSON plus RFC-4180 CSV sidecars.

A report is a flat list of check records, each carrying a status in
{pass, fail, info}; "info" marks measurements that are reported rather
than adjudicated.  Field order in the JSON is fixed so reports diff
cleanly across runs.  Large numeric tables never go inline; they are
written as CSV sidecars next to the JSON file.
"""

import csv
import hashlib
import json
import os
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone

STATUSES = ("pass", "fail", "info")


def build_identifier():
    """Short content hash of the installed package sources."""
    root = os.path.dirname(os.path.abspath(__file__))
    digest = hashlib.sha256()
    names = sorted(name for name in os.listdir(root)
                   if name.endswith(".py"))
    for name in names:
        digest.update(name.encode())
        with open(os.path.join(root, name), "rb") as fh:
            digest.update(fh.read())
    return digest.hexdigest()[:12]


def _coerce(value):
    """Make a value JSON-serializable with plain python scalars."""
    if value is None or isinstance(value, (bool, int, float, str)):
        return value
    if isinstance(value, dict):
        return {str(k): _coerce(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_coerce(v) for v in value]
    if hasattr(value, "item"):
        return value.item()
    return str(value)


@dataclass
class Report:
    """Accumulates check records for one command invocation."""

    command: str
    config: dict = field(default_factory=dict)
    records: list = field(default_factory=list)
    started: float = field(default_factory=time.perf_counter)
    created: str = field(default_factory=lambda: datetime.now(
        timezone.utc).isoformat(timespec="seconds"))
    build_id: str = field(default_factory=build_identifier)

    def add(self, name, status, value=None, tolerance=None, detail="",
            seconds=None):
        if status not in STATUSES:
            raise ValueError(f"record status must be one of {STATUSES}, "
                             f"got {status!r}")
        record = {
            "name": name,
            "status": status,
            "value": _coerce(value),
            "tolerance": _coerce(tolerance),
            "detail": detail,
        }
        if seconds is not None:
            record["seconds"] = round(float(seconds), 6)
        self.records.append(record)
        return record

    def add_check(self, name, value, tolerance, detail="", seconds=None,
                  larger_ok=False):
        """Pass/fail record from a value-vs-tolerance comparison."""
        good = value >= tolerance if larger_ok else value <= tolerance
        return self.add(name, "pass" if good else "fail", value=value,
                        tolerance=tolerance, detail=detail, seconds=seconds)

    def extend(self, other, prefix):
        """Absorb another report's records under a dotted prefix."""
        for record in other.records:
            merged = dict(record)
            merged["name"] = f"{prefix}.{record['name']}"
            self.records.append(merged)

    @property
    def all_pass(self):
        return not any(r["status"] == "fail" for r in self.records)

    def to_json_dict(self):
        counts = {status: sum(1 for r in self.records
                              if r["status"] == status)
                  for status in STATUSES}
        return {
            "command": self.command,
            "created": self.created,
            "build_id": self.build_id,
            "elapsed_seconds": round(time.perf_counter() - self.started, 3),
            "config": _coerce(self.config),
            "summary": {
                "records": len(self.records),
                "pass": counts["pass"],
                "fail": counts["fail"],
                "info": counts["info"],
                "all_pass": self.all_pass,
            },
            "records": self.records,
        }

    def write(self, out_dir, stem=None):
        """Write the JSON report; returns its path."""
        os.makedirs(out_dir, exist_ok=True)
        stem = stem or self.command.replace("-", "_")
        path = os.path.join(out_dir, f"{stem}.json")
        with open(path, "w") as fh:
            json.dump(self.to_json_dict(), fh, indent=2)
            fh.write("\n")
        return path


def _cell(value):
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if hasattr(value, "item"):
        return _cell(value.item())
    return str(value)


def write_table(out_dir, stem, header, rows):
    """Write one CSV sidecar (RFC-4180 quoting); returns its path.

    rows may be sequences or mappings keyed by the header names; floats
    are written with full repr precision so reruns diff exactly.
    """
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, f"{stem}.csv")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(list(header))
        for row in rows:
            if isinstance(row, dict):
                row = [row.get(name) for name in header]
            writer.writerow([_cell(v) for v in row])
    return path
