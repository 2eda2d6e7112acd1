"""Deriving discrete factors from raw per-sample features.

Three derivation families:

* quantile bins over a scalar feature (edges fitted once on a caller-named
  reference set, then reused verbatim everywhere),
* boolean predicates over a discrete source column,
* grid regions over a min-max-scaled 2D principal-component projection of an
  embedding vector.

Fitting is explicit and its artifacts (edges, projection, axis ranges) are
plain data, so any later dataset is discretized with identical parameters.
"""

from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import (
    DegenerateProjectionError,
    FitError,
    IngestionError,
    ValidationError,
)

# Relative eigenvalue-gap threshold below which the 2D projection is treated
# as non-unique (tied or rank-deficient covariance).
EIGENGAP_RTOL = 1e-9


@dataclass(frozen=True)
class QuantileBinning:
    """Cut points for a binned scalar factor: |levels| edges, |levels|+1 bins."""

    quantile_levels: tuple[float, ...]
    edges: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.edges) != len(self.quantile_levels):
            raise FitError("one edge per quantile level required")
        if any(b < a for a, b in zip(self.edges, self.edges[1:])):
            raise FitError("edges must be non-decreasing")

    @property
    def bin_count(self) -> int:
        return len(self.edges) + 1


def fit_quantile_bins(
    values: Sequence[float] | np.ndarray, levels: Sequence[float]
) -> QuantileBinning:
    """Fit bin edges at the given quantile levels.

    Quantiles use linear interpolation at rank (n-1)*q over the sorted sample,
    so edges are deterministic functions of the data.
    """
    levels = tuple(float(q) for q in levels)
    if not levels:
        raise FitError("at least one quantile level required")
    if any(not 0.0 < q < 1.0 for q in levels):
        raise FitError("quantile levels must lie strictly inside (0, 1)")
    if any(b <= a for a, b in zip(levels, levels[1:])):
        raise FitError("quantile levels must be strictly ascending")
    arr = np.asarray(values, dtype=np.float64)
    if arr.size == 0:
        raise FitError("cannot fit quantile bins on an empty sample")
    if not np.all(np.isfinite(arr)):
        raise IngestionError("non-finite value in quantile fitting sample")
    edges = np.quantile(arr, levels)  # linear interpolation at rank (n-1)*q
    return QuantileBinning(levels, tuple(float(e) for e in edges))


def assign_bin(x: float, binning: QuantileBinning) -> int:
    """Bin index of x: bin i covers [edges[i-1], edges[i]); the first bin is
    open below and the last closed above."""
    if not np.isfinite(x):
        raise IngestionError(f"cannot bin non-finite value {x!r}")
    return bisect_right(binning.edges, x)


def assign_bins(values: Sequence[float] | np.ndarray, binning: QuantileBinning) -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise IngestionError("non-finite value in binning input")
    return np.searchsorted(np.asarray(binning.edges), arr, side="right")


@dataclass(frozen=True)
class PredicateFactor:
    """Boolean factor: True exactly for source values in ``true_values``.

    ``source_values``, when given, declares the legal source domain;
    labels outside it are rejected rather than silently mapped to False.
    """

    name: str
    source: str
    true_values: frozenset[str]
    source_values: frozenset[str] | None = None

    def __post_init__(self) -> None:
        if self.source_values is not None and not self.true_values <= self.source_values:
            raise ValidationError(
                f"predicate {self.name!r}: true-set contains labels outside the "
                "declared source domain"
            )


def apply_predicate(labels: Sequence[str], spec: PredicateFactor) -> list[bool]:
    if spec.source_values is not None:
        for label in labels:
            if label not in spec.source_values:
                raise ValidationError(
                    f"predicate {spec.name!r}: unknown source label {label!r}"
                )
    return [label in spec.true_values for label in labels]


@dataclass
class Projection2D:
    """Mean-centered top-2 principal axes plus the fitted axis ranges.

    Components are unit-norm, mutually orthogonal, ordered by explained
    variance, and sign-normalized so each component's largest-magnitude
    coordinate is positive (ties broken by lowest index).
    """

    mean: np.ndarray  # (d,)
    components: np.ndarray  # (2, d)
    explained_variance: tuple[float, float]
    x_range: tuple[float, float]
    y_range: tuple[float, float]

    @property
    def dim(self) -> int:
        return int(self.mean.shape[0])


def _sign_normalize(component: np.ndarray) -> np.ndarray:
    idx = int(np.argmax(np.abs(component)))  # argmax takes the lowest index on ties
    return -component if component[idx] < 0 else component


def fit_projection(embeddings: np.ndarray | Sequence[Sequence[float]]) -> Projection2D:
    """Fit the 2D projection on a reference embedding matrix.

    Raises :class:`DegenerateProjectionError` when the covariance has rank < 2
    or the leading eigenvalues tie, rather than picking an arbitrary basis.
    """
    x = np.asarray(embeddings, dtype=np.float64)
    if x.ndim != 2:
        raise ValidationError("embeddings must be a 2D matrix")
    n, d = x.shape
    if n < 3:
        raise FitError(f"need at least 3 samples to fit a projection, got {n}")
    if d < 2:
        raise ValidationError(f"need at least 2 embedding dimensions, got {d}")
    if not np.all(np.isfinite(x)):
        raise IngestionError("non-finite entry in embedding matrix")

    mean = x.mean(axis=0)
    centered = x - mean
    cov = (centered.T @ centered) / (n - 1)
    eigvals, eigvecs = np.linalg.eigh(cov)  # ascending
    lead = eigvals[-1]
    second = eigvals[-2]
    third = eigvals[-3] if d >= 3 else 0.0
    scale = max(lead, 0.0)
    if scale <= 0.0 or second <= EIGENGAP_RTOL * scale:
        raise DegenerateProjectionError(
            "covariance rank < 2; two principal axes are not defined"
        )
    if lead - second <= EIGENGAP_RTOL * scale or second - third <= EIGENGAP_RTOL * scale:
        raise DegenerateProjectionError(
            "tied leading eigenvalues; the projection basis is not unique"
        )
    first_axis = _sign_normalize(eigvecs[:, -1])
    second_axis = _sign_normalize(eigvecs[:, -2])
    components = np.vstack([first_axis, second_axis])

    projected = centered @ components.T
    return Projection2D(
        mean=mean,
        components=components,
        explained_variance=(float(lead), float(second)),
        x_range=(float(projected[:, 0].min()), float(projected[:, 0].max())),
        y_range=(float(projected[:, 1].min()), float(projected[:, 1].max())),
    )


def project_and_scale(
    embeddings: np.ndarray | Sequence[Sequence[float]], proj: Projection2D
) -> np.ndarray:
    """Project onto the fitted axes and min-max scale into [0, 1]^2.

    Points beyond the fitted range (new-domain data) clamp to the boundary; a
    degenerate axis (fitted min == max) maps to 0.5.
    """
    x = np.asarray(embeddings, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != proj.dim:
        raise ValidationError(
            f"embedding dimension mismatch: expected {proj.dim} columns"
        )
    if not np.all(np.isfinite(x)):
        raise IngestionError("non-finite entry in embedding matrix")
    projected = (x - proj.mean) @ proj.components.T
    out = np.empty_like(projected)
    for axis, (lo, hi) in enumerate((proj.x_range, proj.y_range)):
        if hi == lo:
            out[:, axis] = 0.5
        else:
            out[:, axis] = np.clip((projected[:, axis] - lo) / (hi - lo), 0.0, 1.0)
    return out


@dataclass(frozen=True)
class GridPartition:
    """n x n tiling of the unit square; region id = row * n + column."""

    cells_per_axis: int

    def __post_init__(self) -> None:
        if self.cells_per_axis < 1:
            raise ValidationError("grid needs at least one cell per axis")

    @property
    def region_count(self) -> int:
        return self.cells_per_axis**2


def region_of(point: tuple[float, float], grid: GridPartition) -> int:
    """Region id of an in-square point; coordinates equal to 1.0 fall in the
    last cell, all other boundaries belong to the higher cell."""
    x, y = point
    if not (0.0 <= x <= 1.0 and 0.0 <= y <= 1.0):
        raise ValidationError(f"point ({x}, {y}) outside the unit square")
    n = grid.cells_per_axis
    col = min(int(x * n), n - 1)
    row = min(int(y * n), n - 1)
    return row * n + col


def regions_of(points: np.ndarray, grid: GridPartition) -> np.ndarray:
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ValidationError("points must be an (n, 2) matrix")
    if pts.size and (pts.min() < 0.0 or pts.max() > 1.0):
        raise ValidationError("point outside the unit square")
    n = grid.cells_per_axis
    col = np.minimum((pts[:, 0] * n).astype(np.int64), n - 1)
    row = np.minimum((pts[:, 1] * n).astype(np.int64), n - 1)
    return row * n + col
