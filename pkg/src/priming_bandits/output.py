"""CSV and manifest writers with round-trippable number formatting."""

from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Iterable

import numpy as np

from .harness import DIAGNOSTIC_FIELDS

SCHEMAS = {
    "regret": ("policy", "benchmark", "t", "mean_cum_regret", "stderr", "runs"),
    "histogram": ("setting", "count", "frequency"),
    "diagnostics": DIAGNOSTIC_FIELDS,
}


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def _rows(results, schema: str):
    if schema == "regret":
        for curve in results:
            for t in range(1, len(curve.mean) + 1):
                yield (curve.policy, curve.benchmark, t, curve.mean[t - 1], curve.stderr[t - 1], curve.runs)
    elif schema == "histogram":
        for setting, hist in results:
            for count, freq in enumerate(hist.frequency):
                yield (setting, count, freq)
    elif schema == "diagnostics":
        yield from results
    else:
        raise ValueError(f"unknown schema {schema!r}")


def emit_csv(results: Iterable, schema: str, path: str | Path) -> Path:
    """Write ``results`` under ``schema``: header first, floats with 17 significant digits."""
    if schema not in SCHEMAS:
        raise ValueError(f"unknown schema {schema!r}")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(SCHEMAS[schema])
        for row in _rows(results, schema):
            writer.writerow([_fmt(v) for v in row])
    return path


def read_csv(path: str | Path) -> list[dict[str, str]]:
    with Path(path).open(newline="") as fh:
        return list(csv.DictReader(fh))


def write_manifest(path: str | Path, manifest: dict) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path
