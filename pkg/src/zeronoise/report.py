"""Deterministic run artifacts: CSV tables, JSON summaries, manifest.

Every float is printed with 17 significant digits (round-trippable), rows
end with a bare newline, and JSON keys are sorted, so re-running a config
with the same seed reproduces artifacts byte for byte. The manifest is the
one file excluded from that guarantee: it records wall-clock timings. It is
written last, after every digest it references.
"""

from __future__ import annotations

import hashlib
import json
import time
from dataclasses import dataclass, field as dc_field
from pathlib import Path

import numpy as np

from .errors import ValidationError

VERSION = "0.1.0"


def fmt_float(x: float) -> str:
    return format(float(x), ".17g")


def csv_bytes(header: list[str], columns: list[np.ndarray]) -> bytes:
    """Render columns to CSV text with 17-significant-digit floats."""
    if len(header) != len(columns):
        raise ValidationError("header and column counts differ")
    cols = [np.asarray(c) for c in columns]
    n_rows = cols[0].shape[0]
    if any(c.shape != (n_rows,) for c in cols):
        raise ValidationError("CSV columns must share one length")
    lines = [",".join(header)]
    for i in range(n_rows):
        lines.append(",".join(fmt_float(c[i]) for c in cols))
    return ("\n".join(lines) + "\n").encode()


def json_bytes(obj) -> bytes:
    return (json.dumps(obj, indent=2, sort_keys=True) + "\n").encode()


def sha256_bytes(payload: bytes) -> str:
    return hashlib.sha256(payload).hexdigest()


@dataclass(frozen=True)
class Artifact:
    name: str
    payload: bytes

    @property
    def digest(self) -> str:
        return sha256_bytes(self.payload)


@dataclass
class StageTimer:
    """Accumulates wall-clock seconds per named stage."""

    timings: dict = dc_field(default_factory=dict)

    def time(self, stage: str):
        timer = self

        class _Ctx:
            def __enter__(self):
                self.t0 = time.perf_counter()
                return self

            def __exit__(self, *exc):
                timer.timings[stage] = timer.timings.get(stage, 0.0) + (
                    time.perf_counter() - self.t0
                )
                return False

        return _Ctx()


@dataclass(frozen=True)
class RunManifest:
    """Config echo, artifact digests, timings and version of one run."""

    subcommand: str
    config: dict
    artifacts: list[dict]
    timings: dict
    version: str
    checks: dict
    passed: bool


def write_run(
    out_dir: str | Path,
    subcommand: str,
    config: dict,
    artifacts: list[Artifact],
    timings: dict,
    checks: dict,
) -> RunManifest:
    """Write all artifacts, then the manifest; nothing before this call.

    Artifacts arrive fully rendered, so a failed computation leaves no
    partial output behind.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    entries = []
    for art in artifacts:
        path = out / art.name
        path.write_bytes(art.payload)
        entries.append({"name": art.name, "sha256": art.digest, "bytes": len(art.payload)})
    passed = all(bool(v) for v in checks.values())
    manifest = RunManifest(
        subcommand=subcommand,
        config=config,
        artifacts=entries,
        timings={k: float(v) for k, v in timings.items()},
        version=VERSION,
        checks=dict(checks),
        passed=passed,
    )
    payload = json_bytes(
        {
            "subcommand": manifest.subcommand,
            "config": manifest.config,
            "artifacts": manifest.artifacts,
            "timings": manifest.timings,
            "version": manifest.version,
            "checks": manifest.checks,
            "passed": manifest.passed,
        }
    )
    (out / "manifest.json").write_bytes(payload)
    return manifest
