"""Serialization: JSONL sample files, CSV reports, and run manifests.

Floats go through Python's repr (the json module's default), which is the
shortest round-tripping decimal form, so writing and re-reading a
configuration is bit-exact and a fixed seed reproduces byte-identical files.
Manifests are canonical JSON (sorted keys, fixed separators) hashed with
sha256; volatile data like wall-clock time lives in a separate record file
so the manifest hash is stable.
"""

from __future__ import annotations

import csv
import hashlib
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numpy as np

from .errors import ConfigError
from .marks import PathMark
from .points import Configuration, MarkedPoint

__all__ = [
    "config_to_record",
    "record_to_config",
    "write_configs_jsonl",
    "read_configs_jsonl",
    "ReportRow",
    "write_report_csv",
    "read_report_csv",
    "write_plot_csv",
    "canonical_json",
    "manifest_hash",
    "write_manifest",
    "write_record",
]


def _mark_payload(mark) -> dict:
    if isinstance(mark, PathMark):
        return {"kind": "path", "samples": [[float(a), float(b)] for a, b in mark.samples]}
    return {"kind": "scalar", "value": float(mark)}


def _mark_from_payload(payload: dict):
    kind = payload.get("kind")
    if kind == "scalar":
        return float(payload["value"])
    if kind == "path":
        return PathMark(np.array(payload["samples"], dtype=float))
    raise ConfigError(f"unknown mark payload kind {kind!r}")


def config_to_record(config: Configuration, meta: dict | None = None) -> dict:
    rec = {
        "dim": config.dimension,
        "points": [
            {"x": [float(c) for c in p.location], "mark": _mark_payload(p.mark)}
            for p in config.points
        ],
    }
    if meta:
        rec["meta"] = meta
    return rec


def record_to_config(record: dict) -> Configuration:
    pts = [
        MarkedPoint.make(tuple(entry["x"]), _mark_from_payload(entry["mark"]))
        for entry in record["points"]
    ]
    return Configuration(pts, dimension=int(record["dim"]))


def write_configs_jsonl(
    path, configs: Iterable[Configuration], meta: dict | None = None
) -> int:
    """One JSON object per configuration; returns the number written."""
    n = 0
    with open(path, "w") as fh:
        for config in configs:
            fh.write(json.dumps(config_to_record(config, meta), sort_keys=True))
            fh.write("\n")
            n += 1
    return n


def read_configs_jsonl(path) -> Iterator[Configuration]:
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if line:
                yield record_to_config(json.loads(line))


@dataclass(frozen=True)
class ReportRow:
    quantity: str
    estimate: float
    stderr: float
    n: int
    model_id: str
    seed: int


_REPORT_FIELDS = ("quantity", "estimate", "stderr", "n", "model_id", "seed")


def write_report_csv(path, rows: Sequence[ReportRow]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(_REPORT_FIELDS)
        for r in rows:
            writer.writerow(
                [
                    r.quantity,
                    repr(float(r.estimate)),
                    repr(float(r.stderr)),
                    int(r.n),
                    r.model_id,
                    int(r.seed),
                ]
            )


def read_report_csv(path) -> list[ReportRow]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        missing = [c for c in _REPORT_FIELDS if c not in (reader.fieldnames or ())]
        if missing:
            raise ConfigError(f"report {path} lacks columns {missing}")
        return [
            ReportRow(
                row["quantity"],
                float(row["estimate"]),
                float(row["stderr"]),
                int(row["n"]),
                row["model_id"],
                int(row["seed"]),
            )
            for row in reader
        ]


def write_plot_csv(path, series: Sequence[tuple[float, float, float]]) -> None:
    """(x, y, err) triples for external plotting; no plotting dependency."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["x", "y", "err"])
        for x, y, err in series:
            writer.writerow([repr(float(x)), repr(float(y)), repr(float(err))])


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def manifest_hash(manifest: dict) -> str:
    return hashlib.sha256(canonical_json(manifest).encode()).hexdigest()


def write_manifest(out_dir, config: dict, tool_version: str, seed: int) -> str:
    """Write manifest.json before any sampling output; returns its hash."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    manifest = {
        "config": config,
        "tool_version": tool_version,
        "numpy_version": np.__version__,
        "seed": seed,
    }
    digest = manifest_hash(manifest)
    manifest["hash"] = digest
    with open(out / "manifest.json", "w") as fh:
        json.dump(manifest, fh, sort_keys=True, indent=1)
        fh.write("\n")
    return digest


def write_record(out_dir, record: dict) -> None:
    """Completion record (wall clock, status, outputs); volatile by design."""
    with open(Path(out_dir) / "record.json", "w") as fh:
        json.dump(record, fh, sort_keys=True, indent=1)
        fh.write("\n")
