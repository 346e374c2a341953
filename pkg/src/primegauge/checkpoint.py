"""Resumable scan checkpoints and config fingerprints."""
from __future__ import annotations

import hashlib
import json
import os
import tempfile
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Any, Mapping

FIELDS = ("scan_kind", "bound", "cursor", "violations_so_far", "config_fingerprint", "engine_limit")


class CheckpointError(Exception):
    """A checkpoint is unreadable or does not belong to the requested scan."""


def config_fingerprint(fields: Mapping[str, Any]) -> str:
    """sha256 over the canonical JSON form of the semantic config fields."""
    canon = json.dumps(dict(fields), sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class ScanCheckpoint:
    scan_kind: str
    bound: int
    cursor: int
    violations_so_far: int
    config_fingerprint: str
    engine_limit: int

    def __post_init__(self):
        if self.cursor > self.bound:
            raise CheckpointError(f"cursor {self.cursor} beyond bound {self.bound}")

    def to_json(self) -> str:
        return json.dumps(asdict(self), separators=(",", ":"))

    @classmethod
    def from_json(cls, text: str) -> "ScanCheckpoint":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise CheckpointError(f"checkpoint is not valid JSON: {exc}") from None
        if not isinstance(data, dict) or set(data) != set(FIELDS):
            raise CheckpointError(f"checkpoint must hold exactly the fields {FIELDS}")
        return cls(**data)


def write_checkpoint(path: str | os.PathLike, ckpt: ScanCheckpoint) -> None:
    """Write atomically: temp file in the same directory, fsync, rename."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(prefix=path.name + ".", suffix=".tmp", dir=path.parent or ".")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(ckpt.to_json() + "\n")
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except FileNotFoundError:
            pass
        raise


def read_checkpoint(path: str | os.PathLike) -> ScanCheckpoint:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise CheckpointError(f"cannot read checkpoint {path}: {exc}") from None
    return ScanCheckpoint.from_json(text)
