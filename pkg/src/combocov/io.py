"""File formats: schema documents, delimited data tables, fitted-artifact
documents, and report/metadata plumbing.

All formats are plain text, diff-able, and deterministic: JSON documents are
written with fixed key order, delimited files with ``\\n`` line endings, and
``#``-prefixed comment lines carry run metadata without disturbing ingestion.
"""

from __future__ import annotations

import csv
import hashlib
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator

import numpy as np

from . import __version__
from .derive import GridPartition, Projection2D, QuantileBinning
from .errors import IngestionError
from .schema import Dataset, FactorSchema, Record

SCHEMA_FORMAT_VERSION = 1
ARTIFACT_FORMAT_VERSION = 1


def file_digest(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


def run_metadata(command: str, flags: dict, inputs: dict[str, str | Path]) -> dict:
    """Metadata embedded in every output document: tool version, the full flag
    set, and a digest of each input file."""
    return {
        "tool": "combocov",
        "version": __version__,
        "command": command,
        "flags": {key: flags[key] for key in sorted(flags)},
        "inputs": {
            label: {"path": str(path), "sha256": file_digest(path)}
            for label, path in sorted(inputs.items())
        },
    }


def meta_comment_lines(meta: dict) -> list[str]:
    lines = [f"# tool: {meta['tool']} {meta['version']}", f"# command: {meta['command']}"]
    lines.append("# flags: " + json.dumps(meta["flags"], sort_keys=True))
    for label, entry in meta["inputs"].items():
        lines.append(f"# input {label}: sha256={entry['sha256']} path={entry['path']}")
    return lines


def write_json_doc(path: str | Path, doc: dict) -> None:
    Path(path).write_text(json.dumps(doc, indent=2, ensure_ascii=False) + "\n")


def read_json_doc(path: str | Path) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise IngestionError(f"{path}: not valid JSON ({exc})") from None


# ---------------------------------------------------------------------------
# schema documents
# ---------------------------------------------------------------------------


def schema_to_dict(schema: FactorSchema) -> dict:
    return {
        "version": SCHEMA_FORMAT_VERSION,
        "factors": [
            {"name": f.name, "values": list(f.values)} for f in schema.factors
        ],
        "constraints": [
            [
                [schema.factors[f_idx].name, schema.factors[f_idx].values[v_idx]]
                for f_idx, v_idx in combo
            ]
            for combo in schema.constraints
        ],
    }


def write_schema(path: str | Path, schema: FactorSchema) -> None:
    write_json_doc(path, schema_to_dict(schema))


def read_schema(path: str | Path) -> FactorSchema:
    doc = read_json_doc(path)
    try:
        factors = [(f["name"], f["values"]) for f in doc["factors"]]
        constraints = [
            [(fname, label) for fname, label in combo]
            for combo in doc.get("constraints", [])
        ]
    except (KeyError, TypeError, ValueError) as exc:
        raise IngestionError(f"{path}: malformed schema document ({exc})") from None
    return FactorSchema.build(factors, constraints)


# ---------------------------------------------------------------------------
# delimited tables
# ---------------------------------------------------------------------------


def _data_rows(path: str | Path) -> Iterator[tuple[int, list[str]]]:
    """CSV rows with original line numbers; comment and blank lines skipped."""
    with open(path, newline="") as fh:
        numbered = (
            (lineno, line)
            for lineno, line in enumerate(fh, start=1)
            if line.strip() and not line.lstrip().startswith("#")
        )
        linenos, lines = [], []
        for lineno, line in numbered:
            linenos.append(lineno)
            lines.append(line)
    for lineno, row in zip(linenos, csv.reader(lines)):
        yield lineno, row


def read_dataset(path: str | Path, schema: FactorSchema) -> Dataset:
    """Ingest a header-bearing delimited file as a dataset.

    The header must name an ``id`` column and every schema factor; extra
    columns are ignored. Value labels are matched against schema labels as
    exact strings, and missing or unknown values are rejected with their line
    number.
    """
    rows = _data_rows(path)
    try:
        _, header = next(rows)
    except StopIteration:
        raise IngestionError(f"{path}: empty file") from None
    positions: dict[str, int] = {}
    for col, name in enumerate(header):
        if name not in positions:
            positions[name] = col
    if "id" not in positions:
        raise IngestionError(f"{path}: missing required column 'id'")
    missing_cols = [f.name for f in schema.factors if f.name not in positions]
    if missing_cols:
        raise IngestionError(f"{path}: missing factor columns {missing_cols}")

    id_col = positions["id"]
    factor_cols = [positions[f.name] for f in schema.factors]
    value_maps = [
        {label: idx for idx, label in enumerate(f.values)} for f in schema.factors
    ]
    records = []
    seen: set[str] = set()
    for lineno, row in rows:
        if len(row) < len(header):
            raise IngestionError(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
        rec_id = row[id_col]
        if not rec_id:
            raise IngestionError(f"{path}:{lineno}: empty id")
        if rec_id in seen:
            raise IngestionError(f"{path}:{lineno}: duplicate id {rec_id!r}")
        seen.add(rec_id)
        assignments = []
        for f_idx, col in enumerate(factor_cols):
            label = row[col]
            v_idx = value_maps[f_idx].get(label)
            if v_idx is None:
                raise IngestionError(
                    f"{path}:{lineno}: unknown value {label!r} for factor "
                    f"{schema.factors[f_idx].name!r}"
                )
            assignments.append(v_idx)
        records.append(Record(rec_id, tuple(assignments)))
    return Dataset(schema, records)


@dataclass
class FeatureTable:
    """Raw per-sample features: an id column plus named string columns."""

    path: str
    ids: list[str]
    columns: dict[str, list[str]]
    line_numbers: list[int]

    def column(self, name: str) -> list[str]:
        if name not in self.columns:
            raise IngestionError(f"{self.path}: missing column {name!r}")
        return self.columns[name]

    def float_column(self, name: str) -> np.ndarray:
        raw = self.column(name)
        out = np.empty(len(raw), dtype=np.float64)
        for i, text in enumerate(raw):
            try:
                out[i] = float(text)
            except ValueError:
                raise IngestionError(
                    f"{self.path}:{self.line_numbers[i]}: column {name!r}: "
                    f"not a number: {text!r}"
                ) from None
        if not np.all(np.isfinite(out)):
            bad = int(np.flatnonzero(~np.isfinite(out))[0])
            raise IngestionError(
                f"{self.path}:{self.line_numbers[bad]}: column {name!r}: non-finite value"
            )
        return out

    def matrix(self, names: list[str]) -> np.ndarray:
        return np.column_stack([self.float_column(name) for name in names])


def read_feature_table(path: str | Path) -> FeatureTable:
    rows = _data_rows(path)
    try:
        _, header = next(rows)
    except StopIteration:
        raise IngestionError(f"{path}: empty file") from None
    if "id" not in header:
        raise IngestionError(f"{path}: missing required column 'id'")
    if len(set(header)) != len(header):
        raise IngestionError(f"{path}: duplicate column names in header")
    id_col = header.index("id")
    ids: list[str] = []
    line_numbers: list[int] = []
    columns: dict[str, list[str]] = {name: [] for name in header if name != "id"}
    seen: set[str] = set()
    for lineno, row in rows:
        if len(row) != len(header):
            raise IngestionError(
                f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}"
            )
        rec_id = row[id_col]
        if not rec_id:
            raise IngestionError(f"{path}:{lineno}: empty id")
        if rec_id in seen:
            raise IngestionError(f"{path}:{lineno}: duplicate id {rec_id!r}")
        seen.add(rec_id)
        ids.append(rec_id)
        line_numbers.append(lineno)
        for col, name in enumerate(header):
            if col != id_col:
                columns[name].append(row[col])
    return FeatureTable(str(path), ids, columns, line_numbers)


def write_delimited(
    path: str | Path,
    header: list[str],
    rows: Iterable[list[str]],
    meta: dict | None = None,
) -> None:
    with open(path, "w", newline="") as fh:
        if meta is not None:
            for line in meta_comment_lines(meta):
                fh.write(line + "\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


# ---------------------------------------------------------------------------
# fitted derivation artifacts
# ---------------------------------------------------------------------------


def quantile_to_dict(binning: QuantileBinning) -> dict:
    return {
        "kind": "quantile",
        "levels": list(binning.quantile_levels),
        "edges": list(binning.edges),
    }


def quantile_from_dict(entry: dict) -> QuantileBinning:
    return QuantileBinning(tuple(entry["levels"]), tuple(entry["edges"]))


def region_to_dict(proj: Projection2D, grid: GridPartition) -> dict:
    return {
        "kind": "grid_region",
        "cells_per_axis": grid.cells_per_axis,
        "mean": proj.mean.tolist(),
        "components": proj.components.tolist(),
        "explained_variance": list(proj.explained_variance),
        "x_range": list(proj.x_range),
        "y_range": list(proj.y_range),
    }


def region_from_dict(entry: dict) -> tuple[Projection2D, GridPartition]:
    proj = Projection2D(
        mean=np.asarray(entry["mean"], dtype=np.float64),
        components=np.asarray(entry["components"], dtype=np.float64),
        explained_variance=tuple(entry["explained_variance"]),
        x_range=tuple(entry["x_range"]),
        y_range=tuple(entry["y_range"]),
    )
    return proj, GridPartition(int(entry["cells_per_axis"]))


def write_artifact(path: str | Path, fitted: dict[str, dict], meta: dict | None = None) -> None:
    doc: dict = {"version": ARTIFACT_FORMAT_VERSION}
    if meta is not None:
        doc["meta"] = meta
    doc["fitted"] = {name: fitted[name] for name in sorted(fitted)}
    write_json_doc(path, doc)


def read_artifact(path: str | Path) -> dict[str, dict]:
    doc = read_json_doc(path)
    if doc.get("version") != ARTIFACT_FORMAT_VERSION:
        raise IngestionError(
            f"{path}: unsupported artifact version {doc.get('version')!r}"
        )
    fitted = doc.get("fitted")
    if not isinstance(fitted, dict):
        raise IngestionError(f"{path}: malformed artifact document")
    return fitted
