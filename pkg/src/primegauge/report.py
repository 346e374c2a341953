"""Report serialization: JSONL objects and unquoted CSV rows."""
from __future__ import annotations

import io
import json
import os
import sys
from typing import IO, Iterable, Sequence

from .scanner import ScanReport, ViolationRecord

VIOLATION_FIELDS = ("kind", "x", "y", "lhs", "rhs")
SUMMARY_FIELDS = ("kind", "bound", "pairs_checked", "violations")


def jsonl(obj: dict) -> str:
    return json.dumps(obj, separators=(",", ":"), ensure_ascii=False) + "\n"


def csv_line(values: Iterable) -> str:
    return ",".join(str(v) for v in values) + "\n"


def violation_line(rec: ViolationRecord, fmt: str) -> str:
    d = rec.as_dict()
    return jsonl(d) if fmt == "jsonl" else csv_line(d[k] for k in VIOLATION_FIELDS)


def scan_header(fmt: str) -> str:
    return csv_line(VIOLATION_FIELDS) if fmt == "csv" else ""


def summary_lines(summary: dict, fmt: str) -> str:
    if fmt == "jsonl":
        return jsonl(summary)
    return csv_line(SUMMARY_FIELDS) + csv_line(summary[k] for k in SUMMARY_FIELDS)


def render_scan(report: ScanReport, fmt: str) -> str:
    """Whole report text for an uninterrupted scan."""
    buf = io.StringIO()
    buf.write(scan_header(fmt))
    for rec in report.violations:
        buf.write(violation_line(rec, fmt))
    buf.write(summary_lines(report.summary(), fmt))
    return buf.getvalue()


class ScanWriter:
    """Streams a scan report; on resume, keeps exactly the lines a checkpoint vouches for.

    The header (CSV only) plus ``keep`` violation lines survive; anything
    written after the last checkpoint is truncated away before appending.
    """

    def __init__(self, path: str | None, fmt: str, keep: int | None = None):
        self.fmt = fmt
        self.path = path
        if path is None:
            if keep:
                raise ValueError("cannot resume a report written to standard output")
            self.fh: IO[str] = sys.stdout
            self._owned = False
            self.fh.write(scan_header(fmt))
            return
        self._owned = True
        if keep is None or not os.path.exists(path):
            if keep:
                raise ValueError(f"checkpoint records {keep} violations but report {path} is missing")
            self.fh = open(path, "w", encoding="utf-8", newline="")
            self.fh.write(scan_header(fmt))
            return
        n_lines = keep + (1 if fmt == "csv" else 0)
        with open(path, "rb") as fh:
            offset = 0
            for _ in range(n_lines):
                line = fh.readline()
                if not line.endswith(b"\n"):
                    raise ValueError(f"report {path} is shorter than its checkpoint claims")
                offset += len(line)
        self.fh = open(path, "r+", encoding="utf-8", newline="")
        self.fh.truncate(offset)
        self.fh.seek(offset)

    def violations(self, recs: Sequence[ViolationRecord]) -> None:
        for rec in recs:
            self.fh.write(violation_line(rec, self.fmt))

    def sync(self) -> None:
        self.fh.flush()
        if self._owned:
            os.fsync(self.fh.fileno())

    def summary(self, summary: dict) -> None:
        self.fh.write(summary_lines(summary, self.fmt))
        self.sync()

    def close(self) -> None:
        if self._owned:
            self.fh.close()
        else:
            self.fh.flush()
