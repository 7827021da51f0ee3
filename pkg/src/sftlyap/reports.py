"""Deterministic JSON/CSV report emission.

Every JSON report is ``{"meta": ..., "result": ...}`` with keys sorted and
floats written by ``repr`` (shortest round-trip form), so identical inputs give
identical bytes.  Non-finite floats become ``null``.  Schemas live in
``sftlyap/schemas/<kind>.schema.json``.

CSV layouts::

    scan.csv    energy,L_hat,stderr
    bands.csv   orbit,period,lo,hi
"""
from __future__ import annotations

import csv
import dataclasses
import io
import json
import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Any, Sequence

import numpy as np

SCHEMA_VERSION = 1
SCAN_HEADER = ("energy", "L_hat", "stderr")
BANDS_HEADER = ("orbit", "period", "lo", "hi")
SEED_RULE = "SeedSequence(seed, spawn_key=(energy_index, sample_index))"


class ReportIOError(OSError):
    pass


def tool_version() -> str:
    from . import __version__
    return __version__


def to_jsonable(obj: Any) -> Any:
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return to_jsonable(dataclasses.asdict(obj))
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else None
    if obj is None or isinstance(obj, str):
        return obj
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(payload: Any) -> str:
    return json.dumps(to_jsonable(payload), indent=2, sort_keys=True, allow_nan=False) + "\n"


def csv_text(header: Sequence[str], rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(float(x)) if isinstance(x, (float, np.floating)) else x for x in row])
    return buf.getvalue()


def metadata(kind: str, command: str, config_digest: str, seed: int | None, max_period: int | None,
             module: str, operation: str, parameters: dict) -> dict:
    return {
        "schema": f"sftlyap/{kind}/{SCHEMA_VERSION}",
        "tool": {"name": "sftlyap", "version": tool_version()},
        "command": command,
        "config_sha256": config_digest,
        "seed": seed,
        "seed_rule": SEED_RULE if seed is not None else None,
        "max_period": max_period,
        "provenance": {"module": module, "operation": operation, "parameters": parameters},
    }


@dataclass(frozen=True)
class Artifact:
    name: str
    text: str


def json_artifact(name: str, meta: dict, result: Any) -> Artifact:
    return Artifact(name, dumps({"meta": meta, "result": result}))


def emit_reports(artifacts: Sequence[Artifact], out_dir: str | Path,
                 formats: Sequence[str] = ("json", "csv")) -> list[Path]:
    """Write the artifacts whose extension is in ``formats``; returns written paths."""
    out_dir = Path(out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ReportIOError(f"cannot create output directory {out_dir}: {exc.strerror}") from None
    written = []
    for a in artifacts:
        if Path(a.name).suffix.lstrip(".") not in formats:
            continue
        path = out_dir / a.name
        try:
            path.write_bytes(a.text.encode("utf-8"))
        except OSError as exc:
            raise ReportIOError(f"cannot write {path}: {exc.strerror}") from None
        written.append(path)
    return written


def load_schema(kind: str) -> dict:
    text = resources.files("sftlyap").joinpath("schemas", f"{kind}.schema.json").read_text()
    return json.loads(text)


def scan_rows(estimates) -> list[tuple]:
    return [(e.energy, e.value, e.std_error) for e in estimates]


def band_rows(s_union, system) -> list[tuple]:
    """Closed spectral bands of every enumerated orbit, in orbit order."""
    return [(system.format_word(p.word), p.period, lo, hi)
            for p, bands in s_union.bands for lo, hi in bands]
