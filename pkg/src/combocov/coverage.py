"""t-way combination sets and the two coverage metrics.

Combinatorial coverage of a dataset is the fraction of all valid t-way value
combinations that appear in it; set-difference combinatorial coverage (SDCC)
of a target against a source is the fraction of the target's combinations that
the source lacks. Both are exact ratios of integer cardinalities, kept as
:class:`fractions.Fraction` until rendered.

Combinations are encoded internally as packed integer keys (one global "cell"
number per (factor, value) pair, ``width`` bits per cell, ascending factor
order). Schemas whose keys fit in 63 bits run through the kernel backend;
anything larger takes an arbitrary-precision Python path with identical
semantics.
"""

from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from itertools import combinations, product
from math import comb
from typing import Iterator

import numpy as np

from ._backend import enumerate_keys, missing_per_record
from .errors import (
    DegenerateSchemaError,
    StrengthError,
    UndefinedRatioError,
    ValidationError,
)
from .schema import Dataset, FactorSchema, Record


@dataclass(frozen=True)
class ValueCombination:
    """A t-tuple of (factor index, value index) pairs, ascending by factor."""

    pairs: tuple[tuple[int, int], ...]

    def __post_init__(self) -> None:
        if not self.pairs:
            raise ValidationError("a value combination needs at least one pair")
        prev = -1
        for f_idx, _ in self.pairs:
            if f_idx <= prev:
                raise ValidationError("factor indices must strictly increase")
            prev = f_idx

    @property
    def t(self) -> int:
        return len(self.pairs)

    def labels(self, schema: FactorSchema) -> tuple[tuple[str, str], ...]:
        """Render as ((factor name, value label), ...)."""
        return tuple(
            (schema.factors[f].name, schema.factors[f].values[v]) for f, v in self.pairs
        )

    @classmethod
    def from_labels(
        cls, schema: FactorSchema, pairs: list[tuple[str, str]]
    ) -> ValueCombination:
        built = []
        for fname, label in pairs:
            f_idx = schema.factor_index(fname)
            built.append((f_idx, schema.value_index(f_idx, label)))
        built.sort()
        return cls(tuple(built))


@dataclass(frozen=True)
class _Codec:
    """Packed-key encoding derived from a schema's value domains."""

    cell_base: tuple[int, ...]  # per-factor offset into the global cell numbering
    width: int  # bits per cell
    total_cells: int

    def encode(self, pairs: tuple[tuple[int, int], ...]) -> int:
        key = 0
        for f_idx, v_idx in pairs:
            key = (key << self.width) | (self.cell_base[f_idx] + v_idx)
        return key

    def decode(self, key: int, t: int) -> tuple[tuple[int, int], ...]:
        mask = (1 << self.width) - 1
        cells = []
        for _ in range(t):
            cells.append(key & mask)
            key >>= self.width
        cells.reverse()
        pairs = []
        for cell in cells:
            f_idx = bisect_right(self.cell_base, cell) - 1
            pairs.append((f_idx, cell - self.cell_base[f_idx]))
        return tuple(pairs)

    def fits_int64(self, t: int) -> bool:
        return self.width * t <= 63

    def base_array(self) -> np.ndarray:
        return np.asarray(self.cell_base, dtype=np.int64)


@lru_cache(maxsize=None)
def _codec_for(schema: FactorSchema) -> _Codec:
    base = []
    acc = 0
    for size in schema.sizes:
        base.append(acc)
        acc += size
    width = max(1, (acc - 1).bit_length())
    return _Codec(tuple(base), width, acc)


def _check_strength(schema: FactorSchema, t: int) -> None:
    if not isinstance(t, int) or isinstance(t, bool):
        raise StrengthError(f"strength must be an integer, got {t!r}")
    if not 1 <= t <= schema.k:
        raise StrengthError(f"strength t={t} outside 1..{schema.k}")


def _check_same_schema(a: Dataset, b: Dataset) -> None:
    if a.schema != b.schema:
        raise ValidationError("datasets do not share a schema")


class CombinationSet:
    """A duplicate-free set of t-way value combinations over one schema.

    Membership, union, difference, and cardinality are exact set operations on
    the encoded keys; no approximation anywhere.
    """

    __slots__ = ("schema", "t", "_keys", "_sorted_arr")

    def __init__(self, schema: FactorSchema, t: int, keys: frozenset[int]):
        self.schema = schema
        self.t = t
        self._keys = keys
        self._sorted_arr: np.ndarray | None = None

    def __len__(self) -> int:
        return len(self._keys)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, CombinationSet):
            return NotImplemented
        return (
            self.schema == other.schema and self.t == other.t and self._keys == other._keys
        )

    def __contains__(self, combo: ValueCombination) -> bool:
        if combo.t != self.t:
            return False
        return _codec_for(self.schema).encode(combo.pairs) in self._keys

    def _compatible(self, other: CombinationSet) -> None:
        if self.schema != other.schema:
            raise ValidationError("combination sets do not share a schema")
        if self.t != other.t:
            raise ValidationError(f"combination strengths differ: {self.t} vs {other.t}")

    def union(self, other: CombinationSet) -> CombinationSet:
        self._compatible(other)
        return CombinationSet(self.schema, self.t, self._keys | other._keys)

    def difference(self, other: CombinationSet) -> CombinationSet:
        self._compatible(other)
        return CombinationSet(self.schema, self.t, self._keys - other._keys)

    def members(self) -> Iterator[ValueCombination]:
        """Iterate combinations in deterministic (key-sorted) order."""
        codec = _codec_for(self.schema)
        for key in sorted(self._keys):
            yield ValueCombination(codec.decode(key, self.t))

    def sorted_keys(self) -> np.ndarray:
        """Sorted int64 key array for the kernel backend (cached)."""
        if self._sorted_arr is None:
            self._sorted_arr = np.fromiter(
                sorted(self._keys), dtype=np.int64, count=len(self._keys)
            )
        return self._sorted_arr


@dataclass
class CoverageReport:
    """Result of a combinatorial-coverage computation."""

    t: int
    covered_count: int
    universe_count: int
    cc: Fraction


@dataclass
class SDCCReport:
    """Result of a set-difference coverage computation.

    ``per_record_flags`` marks a target record covered exactly when none of
    its combinations is missing from the source.
    """

    t: int
    target_count: int
    missing_count: int
    sdcc: Fraction
    missing_combinations: tuple[ValueCombination, ...]
    per_record_flags: dict[str, bool]


def _assignment_matrix(data: Dataset) -> np.ndarray:
    return np.array([r.assignments for r in data.records], dtype=np.int64).reshape(
        len(data.records), data.schema.k
    )


def _record_keys_python(
    record: Record, codec: _Codec, t: int
) -> Iterator[int]:
    cells = [codec.cell_base[f] + v for f, v in enumerate(record.assignments)]
    for subset in combinations(range(len(cells)), t):
        key = 0
        for f_idx in subset:
            key = (key << codec.width) | cells[f_idx]
        yield key


def dataset_keys(data: Dataset, t: int) -> frozenset[int]:
    """The distinct encoded t-way combination keys appearing in a dataset."""
    _check_strength(data.schema, t)
    codec = _codec_for(data.schema)
    if not data.records:
        return frozenset()
    if codec.fits_int64(t):
        keys = enumerate_keys(_assignment_matrix(data), codec.base_array(), t, codec.width)
        return frozenset(np.unique(keys).tolist())
    out: set[int] = set()
    for rec in data.records:
        out.update(_record_keys_python(rec, codec, t))
    return frozenset(out)


def combos_of_record(record: Record, schema: FactorSchema, t: int) -> CombinationSet:
    """All C(k, t) t-way combinations carried by one record."""
    _check_strength(schema, t)
    if len(record.assignments) != schema.k:
        raise ValidationError(
            f"record {record.id!r} has {len(record.assignments)} assignments, "
            f"expected {schema.k}"
        )
    for f_idx, v_idx in enumerate(record.assignments):
        if not 0 <= v_idx < schema.factors[f_idx].size:
            raise ValidationError(
                f"record {record.id!r}: value index {v_idx} out of range for "
                f"factor {schema.factors[f_idx].name!r}"
            )
    codec = _codec_for(schema)
    keys = frozenset(_record_keys_python(record, codec, t))
    assert len(keys) == comb(schema.k, t)
    return CombinationSet(schema, t, keys)


def build_combination_set(data: Dataset, t: int) -> CombinationSet:
    """Union of every record's combinations; empty data gives an empty set."""
    return CombinationSet(data.schema, t, dataset_keys(data, t))


def _combo_is_valid(pairs: tuple[tuple[int, int], ...], schema: FactorSchema) -> bool:
    """A combination is invalid iff it contains, or is contained by, a
    forbidden combination."""
    if not schema.constraints:
        return True
    as_map = dict(pairs)
    as_set = set(pairs)
    for forbidden in schema.constraints:
        if all(as_map.get(f) == v for f, v in forbidden):
            return False  # forbidden ⊆ combination
        if as_set <= set(forbidden):
            return False  # combination ⊆ forbidden
    return True


def universe_count(schema: FactorSchema, t: int) -> int:
    """|U^t|: number of valid t-way combinations under the schema.

    Without constraints this is the elementary symmetric polynomial e_t of the
    domain sizes; with constraints, combinations are enumerated and filtered.
    """
    _check_strength(schema, t)
    if not schema.constraints:
        # e_t(sizes) by the standard DP: e[j] after processing size s becomes
        # e[j] + s * e[j-1].
        e = [0] * (t + 1)
        e[0] = 1
        for size in schema.sizes:
            for j in range(min(t, schema.k), 0, -1):
                e[j] += size * e[j - 1]
        return e[t]
    count = 0
    for subset in combinations(range(schema.k), t):
        for values in product(*(range(schema.factors[f].size) for f in subset)):
            if _combo_is_valid(tuple(zip(subset, values)), schema):
                count += 1
    return count


def combinatorial_coverage(data: Dataset, t: int) -> CoverageReport:
    """CC^t(D): fraction of the valid combination universe appearing in D."""
    universe = universe_count(data.schema, t)
    if universe == 0:
        raise DegenerateSchemaError(
            f"no valid {t}-way combinations exist under this schema"
        )
    keys = dataset_keys(data, t)
    if data.schema.constraints:
        codec = _codec_for(data.schema)
        covered = sum(1 for key in keys if _combo_is_valid(codec.decode(key, t), data.schema))
    else:
        covered = len(keys)
    return CoverageReport(
        t=t, covered_count=covered, universe_count=universe, cc=Fraction(covered, universe)
    )


def record_missing_counts(target: Dataset, source_set: CombinationSet) -> list[int]:
    """Per target record, how many of its combinations the source set lacks.

    Record order follows the dataset; results are independent of it.
    """
    if target.schema != source_set.schema:
        raise ValidationError("dataset and combination set do not share a schema")
    t = source_set.t
    _check_strength(target.schema, t)
    codec = _codec_for(target.schema)
    if not target.records:
        return []
    if codec.fits_int64(t):
        counts = missing_per_record(
            _assignment_matrix(target),
            codec.base_array(),
            t,
            codec.width,
            source_set.sorted_keys(),
        )
        return [int(c) for c in counts]
    src = source_set._keys
    return [
        sum(1 for key in _record_keys_python(rec, codec, t) if key not in src)
        for rec in target.records
    ]


def sdcc(target: Dataset, source: Dataset, t: int) -> SDCCReport:
    """SDCC^t(target, source): fraction of the target's combinations missing
    from the source. 0 means every target combination is present; 1 means none
    are."""
    _check_same_schema(target, source)
    _check_strength(target.schema, t)
    if not target.records:
        raise UndefinedRatioError("SDCC is undefined for an empty target")
    target_set = build_combination_set(target, t)
    source_set = build_combination_set(source, t)
    missing = target_set.difference(source_set)
    counts = record_missing_counts(target, source_set)
    flags = {rec.id: counts[i] == 0 for i, rec in enumerate(target.records)}
    return SDCCReport(
        t=t,
        target_count=len(target_set),
        missing_count=len(missing),
        sdcc=Fraction(len(missing), len(target_set)),
        missing_combinations=tuple(missing.members()),
        per_record_flags=flags,
    )
