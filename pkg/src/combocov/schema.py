"""Factor schemas, records, and datasets.

A :class:`FactorSchema` fixes the discrete combination universe: an ordered
list of named factors, each with an ordered finite value domain, plus an
optional list of forbidden value combinations. Records assign one value index
per factor; a :class:`Dataset` is a schema plus a list of records with unique
ids.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .errors import SchemaError, ValidationError

# A constraint is a forbidden value combination of any arity: (factor index,
# value index) pairs with strictly increasing factor indices.
Constraint = tuple[tuple[int, int], ...]


@dataclass(frozen=True)
class Factor:
    """One dimension of the input/output space with a finite value domain."""

    name: str
    values: tuple[str, ...]

    def __post_init__(self) -> None:
        if not self.name:
            raise SchemaError("factor name must be non-empty")
        if len(self.values) < 2:
            raise SchemaError(f"factor {self.name!r} needs at least 2 values")
        if len(set(self.values)) != len(self.values):
            raise SchemaError(f"factor {self.name!r} has duplicate value labels")

    @property
    def size(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class FactorSchema:
    """Ordered factors plus optional forbidden combinations.

    Instances are immutable and hashable, so derived structures (combination
    codecs, universes) can be cached per schema.
    """

    factors: tuple[Factor, ...]
    constraints: tuple[Constraint, ...] = ()

    def __post_init__(self) -> None:
        if not self.factors:
            raise SchemaError("schema needs at least one factor")
        names = [f.name for f in self.factors]
        if len(set(names)) != len(names):
            raise SchemaError("factor names must be unique")
        for combo in self.constraints:
            if not combo:
                raise SchemaError("empty constraint")
            prev = -1
            for f_idx, v_idx in combo:
                if not 0 <= f_idx < len(self.factors):
                    raise SchemaError(f"constraint references factor index {f_idx}")
                if f_idx <= prev:
                    raise SchemaError("constraint factor indices must strictly increase")
                prev = f_idx
                if not 0 <= v_idx < self.factors[f_idx].size:
                    raise SchemaError(
                        f"constraint references value index {v_idx} of factor "
                        f"{self.factors[f_idx].name!r}"
                    )

    @classmethod
    def build(
        cls,
        factors: Sequence[tuple[str, Sequence[str]]],
        constraints: Sequence[Sequence[tuple[str, str]]] = (),
    ) -> FactorSchema:
        """Construct a schema from (name, values) pairs and label-level constraints."""
        factor_objs = tuple(Factor(name, tuple(values)) for name, values in factors)
        index = {f.name: i for i, f in enumerate(factor_objs)}
        built: list[Constraint] = []
        for combo in constraints:
            pairs = []
            for fname, label in combo:
                if fname not in index:
                    raise SchemaError(f"constraint references unknown factor {fname!r}")
                f_idx = index[fname]
                values = factor_objs[f_idx].values
                if label not in values:
                    raise SchemaError(
                        f"constraint references unknown value {label!r} of factor {fname!r}"
                    )
                pairs.append((f_idx, values.index(label)))
            pairs.sort()
            built.append(tuple(pairs))
        return cls(factor_objs, tuple(built))

    @property
    def k(self) -> int:
        """Number of factors."""
        return len(self.factors)

    @property
    def sizes(self) -> tuple[int, ...]:
        return tuple(f.size for f in self.factors)

    def factor_index(self, name: str) -> int:
        for i, f in enumerate(self.factors):
            if f.name == name:
                return i
        raise ValidationError(f"unknown factor {name!r}")

    def value_index(self, f_idx: int, label: str) -> int:
        """Exact-string lookup of a value label; no coercion."""
        values = self.factors[f_idx].values
        try:
            return values.index(label)
        except ValueError:
            raise ValidationError(
                f"unknown value {label!r} for factor {self.factors[f_idx].name!r}"
            ) from None

    def violated_constraint(self, assignments: Sequence[int]) -> Constraint | None:
        """Return the first forbidden combination contained in a full assignment."""
        for combo in self.constraints:
            if all(assignments[f_idx] == v_idx for f_idx, v_idx in combo):
                return combo
        return None


@dataclass(frozen=True)
class Record:
    """A fully assigned sample: one value index per factor, in schema order."""

    id: str
    assignments: tuple[int, ...]


class Dataset:
    """A schema plus records validated against it.

    Record ids are unique within a dataset; duplicate assignments across
    distinct ids are permitted (they contribute nothing extra to coverage but
    remain distinct rows for partitioning).
    """

    __slots__ = ("schema", "records", "_by_id")

    def __init__(self, schema: FactorSchema, records: Iterable[Record]):
        self.schema = schema
        self.records: tuple[Record, ...] = tuple(records)
        seen: dict[str, Record] = {}
        k = schema.k
        for rec in self.records:
            if len(rec.assignments) != k:
                raise ValidationError(
                    f"record {rec.id!r} has {len(rec.assignments)} assignments, expected {k}"
                )
            for f_idx, v_idx in enumerate(rec.assignments):
                if not 0 <= v_idx < schema.factors[f_idx].size:
                    raise ValidationError(
                        f"record {rec.id!r}: value index {v_idx} out of range for "
                        f"factor {schema.factors[f_idx].name!r}"
                    )
            violated = schema.violated_constraint(rec.assignments)
            if violated is not None:
                labels = ", ".join(
                    f"{schema.factors[f].name}={schema.factors[f].values[v]}"
                    for f, v in violated
                )
                raise ValidationError(
                    f"record {rec.id!r} contains forbidden combination ({labels})"
                )
            if rec.id in seen:
                raise ValidationError(f"duplicate record id {rec.id!r}")
            seen[rec.id] = rec
        self._by_id = seen

    @classmethod
    def from_labels(
        cls, schema: FactorSchema, rows: Iterable[tuple[str, Sequence[str]]]
    ) -> Dataset:
        """Build a dataset from (id, value labels) rows, matching labels exactly."""
        records = []
        for rec_id, labels in rows:
            if len(labels) != schema.k:
                raise ValidationError(
                    f"record {rec_id!r} has {len(labels)} values, expected {schema.k}"
                )
            assignments = tuple(
                schema.value_index(f_idx, label) for f_idx, label in enumerate(labels)
            )
            records.append(Record(rec_id, assignments))
        return cls(schema, records)

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def record(self, rec_id: str) -> Record:
        try:
            return self._by_id[rec_id]
        except KeyError:
            raise ValidationError(f"unknown record id {rec_id!r}") from None

    @property
    def ids(self) -> tuple[str, ...]:
        return tuple(r.id for r in self.records)

    def labels_of(self, rec: Record) -> tuple[str, ...]:
        return tuple(
            self.schema.factors[f_idx].values[v_idx]
            for f_idx, v_idx in enumerate(rec.assignments)
        )
