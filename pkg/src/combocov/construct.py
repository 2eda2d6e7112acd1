"""Coverage-driven set construction.

Three workflows on top of the coverage metrics:

* partition a target dataset into covered / not-covered records against a
  source (strict: one missing combination suffices; relaxed: membership in a
  grid region that owns a strictly not-covered record),
* a two-directional coverage gap report for training-set diagnostics,
* deterministic labeling-batch selection mixing a not-covered quota into a
  seeded random sample.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .coverage import (
    build_combination_set,
    record_missing_counts,
    sdcc,
)
from .errors import SelectionError, ValidationError
from .schema import Dataset

_MASK64 = (1 << 64) - 1


class SplitMix64:
    """SplitMix64: a tiny, portable, seedable 64-bit generator.

    Chosen over library RNGs so selection plans are reproducible across
    platforms, versions, and reimplementations from the written discipline.
    """

    __slots__ = ("_state",)

    def __init__(self, seed: int):
        self._state = seed & _MASK64

    def next_u64(self) -> int:
        self._state = (self._state + 0x9E3779B97F4A7C15) & _MASK64
        z = self._state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        return z ^ (z >> 31)

    def index_below(self, n: int) -> int:
        return self.next_u64() % n


def _draw(candidates: list[str], count: int, rng: SplitMix64) -> list[str]:
    """Uniform draw without replacement: partial Fisher-Yates over the list,
    one ``u64 % remaining`` index per element, selection = first ``count``."""
    arr = list(candidates)
    for i in range(count):
        j = i + rng.index_below(len(arr) - i)
        arr[i], arr[j] = arr[j], arr[i]
    return arr[:count]


@dataclass
class PartitionResult:
    """A two-way covered / not-covered split of a target dataset."""

    mode: str  # "strict" | "relaxed"
    covered: tuple[str, ...]
    not_covered: tuple[str, ...]
    missing_counts: dict[str, int]
    # relaxed mode only: the grid-region value of every record, and the region
    # values implicated by at least one strictly not-covered record
    record_regions: dict[str, str] = field(default_factory=dict)
    implicated_regions: tuple[str, ...] = ()


def partition_strict(target: Dataset, source: Dataset, t: int) -> PartitionResult:
    """A record is not covered iff at least one of its t-way combinations is
    absent from the source's combination set."""
    if target.schema != source.schema:
        raise ValidationError("datasets do not share a schema")
    source_set = build_combination_set(source, t)
    counts = record_missing_counts(target, source_set)
    covered, not_covered = [], []
    missing: dict[str, int] = {}
    for rec, count in zip(target.records, counts):
        missing[rec.id] = count
        (covered if count == 0 else not_covered).append(rec.id)
    return PartitionResult(
        mode="strict",
        covered=tuple(covered),
        not_covered=tuple(not_covered),
        missing_counts=missing,
    )


def partition_relaxed(
    target: Dataset, source: Dataset, t: int, region_factor: str
) -> PartitionResult:
    """Relax the strict rule to whole grid regions: every record whose region
    value owns at least one strictly not-covered record is not covered."""
    f_idx = target.schema.factor_index(region_factor)
    strict = partition_strict(target, source, t)
    values = target.schema.factors[f_idx].values
    regions = {rec.id: values[rec.assignments[f_idx]] for rec in target.records}
    implicated = sorted({regions[rec_id] for rec_id in strict.not_covered})
    implicated_set = set(implicated)
    covered, not_covered = [], []
    for rec in target.records:
        (not_covered if regions[rec.id] in implicated_set else covered).append(rec.id)
    return PartitionResult(
        mode="relaxed",
        covered=tuple(covered),
        not_covered=tuple(not_covered),
        missing_counts=strict.missing_counts,
        record_regions=regions,
        implicated_regions=tuple(implicated),
    )


@dataclass
class GapReport:
    """Two-directional coverage diagnostics of a target against a source."""

    t: int
    sdcc_forward: Fraction  # target combinations missing from the source
    sdcc_backward: Fraction  # source combinations missing from the target
    covered_count: int
    not_covered_count: int
    # per factor, the value labels participating in missing (forward)
    # combinations
    factor_missing_values: dict[str, tuple[str, ...]]


def coverage_gap_report(target: Dataset, source: Dataset, t: int) -> GapReport:
    forward = sdcc(target, source, t)
    backward = sdcc(source, target, t)
    strict = partition_strict(target, source, t)
    schema = target.schema
    per_factor: dict[str, set[str]] = {f.name: set() for f in schema.factors}
    for combo in forward.missing_combinations:
        for fname, label in combo.labels(schema):
            per_factor[fname].add(label)
    return GapReport(
        t=t,
        sdcc_forward=forward.sdcc,
        sdcc_backward=backward.sdcc,
        covered_count=len(strict.covered),
        not_covered_count=len(strict.not_covered),
        factor_missing_values={
            name: tuple(sorted(values)) for name, values in per_factor.items()
        },
    )


@dataclass
class SelectionPlan:
    """A deterministic labeling batch: a seeded random sample plus a quota of
    not-covered records, disjoint by construction."""

    seed: int
    mode: str
    requested_random: int
    requested_not_covered: int
    random_ids: tuple[str, ...]
    not_covered_ids: tuple[str, ...]
    not_covered_shortfall: int

    @property
    def batch(self) -> tuple[str, ...]:
        return self.not_covered_ids + self.random_ids


def select_labeling_batch(
    pool: Dataset,
    source: Dataset,
    t: int,
    n_random: int,
    n_not_covered: int,
    mode: str = "strict",
    region_factor: str | None = None,
    seed: int = 0,
) -> SelectionPlan:
    """Draw a labeling batch from the pool.

    Stream discipline (fixed so plans are reproducible from this text alone):
    candidate ids are sorted lexicographically; a single SplitMix64 stream
    seeded with ``seed`` first draws the not-covered quota from the
    not-covered stratum, then draws the random sample from the remaining pool.
    Drawing the stratum first guarantees the quota whenever the stratum is
    large enough; a smaller stratum is reported as a shortfall, not an error.
    """
    if mode not in ("strict", "relaxed"):
        raise ValidationError(f"unknown partition mode {mode!r}")
    if mode == "relaxed" and region_factor is None:
        raise ValidationError("relaxed mode requires a region factor")
    if n_random < 0 or n_not_covered < 0:
        raise SelectionError("requested counts must be non-negative")
    if n_random + n_not_covered > len(pool):
        raise SelectionError(
            f"pool of {len(pool)} records cannot supply {n_random} random + "
            f"{n_not_covered} not-covered; at most {len(pool)} total are achievable"
        )

    if mode == "strict":
        partition = partition_strict(pool, source, t)
    else:
        assert region_factor is not None
        partition = partition_relaxed(pool, source, t, region_factor)

    rng = SplitMix64(seed)
    stratum = sorted(partition.not_covered)
    quota = min(n_not_covered, len(stratum))
    not_covered_ids = _draw(stratum, quota, rng)

    taken = set(not_covered_ids)
    remainder = sorted(rec_id for rec_id in pool.ids if rec_id not in taken)
    random_ids = _draw(remainder, n_random, rng)

    return SelectionPlan(
        seed=seed,
        mode=mode,
        requested_random=n_random,
        requested_not_covered=n_not_covered,
        random_ids=tuple(random_ids),
        not_covered_ids=tuple(not_covered_ids),
        not_covered_shortfall=n_not_covered - quota,
    )
