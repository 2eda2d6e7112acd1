"""Shared generators for randomized tests: small random schemas and datasets."""

from __future__ import annotations

import random

from combocov import Dataset, FactorSchema, Record


def random_schema(rng: random.Random, max_k: int = 6, max_domain: int = 4) -> FactorSchema:
    k = rng.randint(1, max_k)
    return FactorSchema.build(
        [
            (f"f{i}", [f"v{j}" for j in range(rng.randint(2, max_domain))])
            for i in range(k)
        ]
    )


def random_rows(rng: random.Random, schema: FactorSchema, n: int) -> list[tuple[int, ...]]:
    return [
        tuple(rng.randrange(f.size) for f in schema.factors) for _ in range(n)
    ]


def dataset_from_rows(schema: FactorSchema, rows, prefix: str = "r") -> Dataset:
    return Dataset(
        schema, [Record(f"{prefix}{i}", tuple(row)) for i, row in enumerate(rows)]
    )


def random_instance(rng: random.Random, max_records: int = 200):
    """A random (schema, target rows, source rows, t) quadruple."""
    schema = random_schema(rng)
    t = rng.randint(1, min(3, schema.k))
    target = random_rows(rng, schema, rng.randint(1, max_records))
    source = random_rows(rng, schema, rng.randint(0, max_records))
    return schema, target, source, t
