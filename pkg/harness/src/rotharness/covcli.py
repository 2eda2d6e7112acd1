"""Bridge to the coverage tool.

The harness talks to `combocov` exclusively through its command line and file
formats: feature tables in, factor tables / reports / partitions / selection
plans out. Nothing here imports the coverage package.
"""

from __future__ import annotations

import csv
import json
import shutil
import subprocess
from pathlib import Path

import numpy as np

from .models import LATENT_DIM

FEATURE_HEADER = ["id", "digit", "mean_pixel"] + [f"z{i}" for i in range(LATENT_DIM)]


class CoverageToolError(RuntimeError):
    pass


def require_tool() -> str:
    path = shutil.which("combocov")
    if path is None:
        raise CoverageToolError(
            "the `combocov` command is not on PATH; install the coverage "
            "package first (pip install -e .. --no-build-isolation)"
        )
    return path


def run(*args: str | Path) -> None:
    argv = ["combocov"] + [str(a) for a in args]
    proc = subprocess.run(argv, capture_output=True, text=True)
    if proc.returncode != 0:
        raise CoverageToolError(
            f"{' '.join(argv)} exited {proc.returncode}: {proc.stderr.strip()}"
        )


def write_derivation_config(path: str | Path, grid_cells: int) -> None:
    """The four derived factors: digit, circle, density, embedding-grid region."""
    config = {
        "version": 1,
        "factors": [
            {
                "name": "digit",
                "kind": "identity",
                "source": "digit",
                "values": [str(d) for d in range(10)],
            },
            {
                "name": "circle",
                "kind": "predicate",
                "source": "digit",
                "true_values": ["0", "6", "8", "9"],
                "source_values": [str(d) for d in range(10)],
            },
            {
                "name": "density",
                "kind": "quantile",
                "source": "mean_pixel",
                "levels": [0.25, 0.5, 0.75],
            },
            {
                "name": "region",
                "kind": "grid_region",
                "source_prefix": "z",
                "cells_per_axis": grid_cells,
            },
        ],
    }
    Path(path).write_text(json.dumps(config, indent=2) + "\n")


def write_features(
    path: str | Path,
    ids: list[str],
    digits: np.ndarray,
    images: np.ndarray,
    latents: np.ndarray,
) -> None:
    """Feature table consumed by `combocov derive`: per-image digit label,
    mean pixel value, and the latent vector."""
    if not (len(ids) == len(digits) == len(images) == len(latents)):
        raise ValueError("feature table inputs disagree on length")
    mean_pixel = images.reshape(len(images), -1).mean(axis=1)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(FEATURE_HEADER)
        for i, rec_id in enumerate(ids):
            writer.writerow(
                [rec_id, str(int(digits[i])), f"{mean_pixel[i]:.6f}"]
                + [f"{v:.6f}" for v in latents[i]]
            )


def write_predictions(
    path: str | Path, ids: list[str], true_labels: np.ndarray, predicted: np.ndarray
) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["id", "true", "predicted"])
        for rec_id, t, p in zip(ids, true_labels, predicted):
            writer.writerow([rec_id, str(int(t)), str(int(p))])


def read_predictions(path: str | Path) -> dict[str, tuple[int, int]]:
    out: dict[str, tuple[int, int]] = {}
    for row in _rows(path):
        out[row["id"]] = (int(row["true"]), int(row["predicted"]))
    return out


def _rows(path: str | Path):
    with open(path, newline="") as fh:
        lines = [line for line in fh if line.strip() and not line.startswith("#")]
    return csv.DictReader(lines)


def filter_table(src: str | Path, dst: str | Path, keep_ids: set[str]) -> int:
    """Copy a factor table keeping only the given ids; returns the row count."""
    kept = 0
    with open(src, newline="") as fin, open(dst, "w", newline="") as fout:
        reader = csv.reader(line for line in fin if not line.startswith("#"))
        writer = csv.writer(fout, lineterminator="\n")
        header = next(reader)
        writer.writerow(header)
        id_col = header.index("id")
        for row in reader:
            if row[id_col] in keep_ids:
                writer.writerow(row)
                kept += 1
    return kept


def concat_tables(sources: list[str | Path], dst: str | Path) -> None:
    """Concatenate factor tables that share a header (ids must stay unique)."""
    header: list[str] | None = None
    with open(dst, "w", newline="") as fout:
        writer = csv.writer(fout, lineterminator="\n")
        for src in sources:
            with open(src, newline="") as fin:
                reader = csv.reader(line for line in fin if not line.startswith("#"))
                this_header = next(reader)
                if header is None:
                    header = this_header
                    writer.writerow(header)
                elif this_header != header:
                    raise CoverageToolError(f"{src}: header differs from {sources[0]}")
                writer.writerows(reader)


def read_partition_flags(path: str | Path) -> dict[str, bool]:
    """id -> covered flag from a partition table."""
    out: dict[str, bool] = {}
    for row in _rows(path):
        out[row["id"]] = row["flag"] == "covered"
    return out


def read_selection_ids(path: str | Path) -> list[str]:
    return [row["id"] for row in _rows(path)]


def read_json(path: str | Path) -> dict:
    return json.loads(Path(path).read_text())
