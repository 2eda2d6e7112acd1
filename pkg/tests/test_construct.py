"""Partitioning, gap reports, and deterministic labeling-batch selection."""

import random
from fractions import Fraction

import pytest

import bruteforce
from combocov import (
    Dataset,
    FactorSchema,
    SelectionError,
    ValidationError,
    coverage_gap_report,
    partition_relaxed,
    partition_strict,
    select_labeling_batch,
)
from combocov.construct import SplitMix64
from helpers import dataset_from_rows, random_instance


def three_binary():
    return FactorSchema.build([("a", ["0", "1"]), ("b", ["0", "1"]), ("c", ["0", "1"])])


def region_schema():
    return FactorSchema.build(
        [("x", ["0", "1", "2"]), ("region", [str(i) for i in range(10)])]
    )


class TestPartitionStrict:
    def test_spec_missing_pair_example(self):
        schema = three_binary()
        target = dataset_from_rows(schema, [(0, 1, 1)], prefix="t")
        source = dataset_from_rows(schema, [(0, 1, 0)], prefix="s")
        result = partition_strict(target, source, 2)
        assert result.not_covered == ("t0",)
        assert result.missing_counts["t0"] == 2

    def test_subset_target_all_covered(self):
        schema = three_binary()
        source = dataset_from_rows(schema, [(0, 1, 1), (1, 0, 0)], prefix="s")
        target = dataset_from_rows(schema, [(0, 1, 1)], prefix="t")
        result = partition_strict(target, source, 2)
        assert result.not_covered == ()
        assert result.covered == ("t0",)

    def test_two_way_split(self):
        rng = random.Random(77)
        schema, target_rows, source_rows, t = random_instance(rng, max_records=60)
        target = dataset_from_rows(schema, target_rows, prefix="t")
        source = dataset_from_rows(schema, source_rows, prefix="s")
        result = partition_strict(target, source, t)
        assert set(result.covered) | set(result.not_covered) == set(target.ids)
        assert set(result.covered) & set(result.not_covered) == set()

    def test_matches_bruteforce_scan(self):
        rng = random.Random(31)
        for _ in range(40):
            schema, target_rows, source_rows, t = random_instance(rng, max_records=50)
            target = dataset_from_rows(schema, target_rows, prefix="t")
            source = dataset_from_rows(schema, source_rows, prefix="s")
            result = partition_strict(target, source, t)
            expected = bruteforce.missing_per_row(target_rows, source_rows, t)
            for rec, want in zip(target.records, expected):
                assert result.missing_counts[rec.id] == want
                assert (rec.id in result.not_covered) == (want > 0)

    def test_schema_mismatch_rejected(self):
        target = dataset_from_rows(three_binary(), [(0, 0, 0)])
        other = dataset_from_rows(region_schema(), [(0, 0)])
        with pytest.raises(ValidationError):
            partition_strict(target, other, 2)


class TestPartitionRelaxed:
    def test_region_implication_spreads(self):
        schema = region_schema()
        # source lacks only the (x=2, region=7) pair
        source = dataset_from_rows(schema, [(0, 7), (1, 7), (0, 2)], prefix="s")
        target = Dataset.from_labels(
            schema,
            [
                ("A", ["2", "7"]),  # strictly not covered
                ("B", ["0", "7"]),
                ("C", ["0", "7"]),
                ("D", ["1", "7"]),
                ("E", ["0", "2"]),
            ],
        )
        strict = partition_strict(target, source, 2)
        assert strict.not_covered == ("A",)
        relaxed = partition_relaxed(target, source, 2, "region")
        assert set(relaxed.not_covered) == {"A", "B", "C", "D"}
        assert relaxed.covered == ("E",)
        assert relaxed.implicated_regions == ("7",)
        assert relaxed.record_regions["B"] == "7"

    def test_no_strict_misses_means_identical(self):
        schema = region_schema()
        data = dataset_from_rows(schema, [(0, 1), (1, 2)], prefix="d")
        relaxed = partition_relaxed(data, data, 2, "region")
        assert relaxed.not_covered == ()
        assert set(relaxed.covered) == set(data.ids)
        assert relaxed.implicated_regions == ()

    def test_relaxed_superset_of_strict(self):
        rng = random.Random(53)
        for _ in range(30):
            schema, target_rows, source_rows, t = random_instance(rng, max_records=40)
            target = dataset_from_rows(schema, target_rows, prefix="t")
            source = dataset_from_rows(schema, source_rows, prefix="s")
            region = schema.factors[-1].name
            strict = partition_strict(target, source, t)
            relaxed = partition_relaxed(target, source, t, region)
            assert set(relaxed.not_covered) >= set(strict.not_covered)

    def test_unknown_region_factor_rejected(self):
        schema = region_schema()
        data = dataset_from_rows(schema, [(0, 0)])
        with pytest.raises(ValidationError, match="unknown factor"):
            partition_relaxed(data, data, 2, "nope")


class TestGapReport:
    def test_identical_sets_report_zero(self):
        schema = three_binary()
        data = dataset_from_rows(schema, [(0, 1, 1), (1, 0, 0)])
        gap = coverage_gap_report(data, data, 2)
        assert gap.sdcc_forward == 0
        assert gap.sdcc_backward == 0
        assert gap.not_covered_count == 0

    def test_both_directions_and_factor_breakdown(self):
        schema = three_binary()
        target = dataset_from_rows(schema, [(0, 1, 1)], prefix="t")
        source = dataset_from_rows(schema, [(0, 1, 0)], prefix="s")
        gap = coverage_gap_report(target, source, 2)
        assert gap.sdcc_forward == Fraction(2, 3)
        assert gap.sdcc_backward == Fraction(2, 3)
        assert gap.not_covered_count == 1
        # missing combinations are {a0c1, b1c1}
        assert gap.factor_missing_values == {
            "a": ("0",),
            "b": ("1",),
            "c": ("1",),
        }

    def test_counts_match_partition(self):
        rng = random.Random(61)
        schema, target_rows, source_rows, t = random_instance(rng, max_records=50)
        if not source_rows:
            source_rows = [target_rows[0]]
        target = dataset_from_rows(schema, target_rows, prefix="t")
        source = dataset_from_rows(schema, source_rows, prefix="s")
        gap = coverage_gap_report(target, source, t)
        strict = partition_strict(target, source, t)
        assert gap.covered_count == len(strict.covered)
        assert gap.not_covered_count == len(strict.not_covered)


class TestSplitMix64:
    def test_known_stream(self):
        # reference values for seed 1234567 (mask-and-multiply recurrence)
        rng = SplitMix64(1234567)
        first = [rng.next_u64() for _ in range(3)]
        assert first == [
            6457827717110365317,
            3203168211198807973,
            9817491932198370423,
        ]

    def test_determinism(self):
        a = SplitMix64(42)
        b = SplitMix64(42)
        assert [a.next_u64() for _ in range(10)] == [b.next_u64() for _ in range(10)]


class TestSelection:
    def make_pool(self, n_covered: int, n_not_covered: int):
        schema = region_schema()
        rows = [("0", "1")] * n_covered + [("2", "7")] * n_not_covered
        pool = Dataset.from_labels(
            schema, [(f"p{i:03d}", list(row)) for i, row in enumerate(rows)]
        )
        source = Dataset.from_labels(schema, [("s0", ["0", "1"]), ("s1", ["1", "7"])])
        return schema, pool, source

    def test_deterministic_under_seed(self):
        _, pool, source = self.make_pool(30, 5)
        a = select_labeling_batch(pool, source, 2, 10, 3, seed=99)
        b = select_labeling_batch(pool, source, 2, 10, 3, seed=99)
        assert a == b

    def test_different_seed_changes_plan(self):
        _, pool, source = self.make_pool(30, 5)
        a = select_labeling_batch(pool, source, 2, 10, 3, seed=1)
        b = select_labeling_batch(pool, source, 2, 10, 3, seed=2)
        assert a.random_ids != b.random_ids

    def test_exhausted_stratum_selects_all(self):
        _, pool, source = self.make_pool(30, 3)
        for seed in (0, 7, 12345):
            plan = select_labeling_batch(pool, source, 2, 5, 3, seed=seed)
            assert sorted(plan.not_covered_ids) == ["p030", "p031", "p032"]

    def test_shortfall_reported(self):
        _, pool, source = self.make_pool(30, 2)
        plan = select_labeling_batch(pool, source, 2, 5, 10, seed=3)
        assert len(plan.not_covered_ids) == 2
        assert plan.not_covered_shortfall == 8
        assert len(plan.random_ids) == 5

    def test_zero_not_covered_is_pure_random(self):
        _, pool, source = self.make_pool(20, 4)
        plan = select_labeling_batch(pool, source, 2, 6, 0, seed=11)
        assert plan.not_covered_ids == ()
        assert len(plan.random_ids) == 6

    def test_strata_disjoint(self):
        _, pool, source = self.make_pool(25, 10)
        plan = select_labeling_batch(pool, source, 2, 20, 5, seed=4)
        assert not set(plan.random_ids) & set(plan.not_covered_ids)
        assert len(plan.batch) == 25

    def test_not_covered_quota_comes_from_stratum(self):
        _, pool, source = self.make_pool(25, 10)
        plan = select_labeling_batch(pool, source, 2, 5, 7, seed=21)
        stratum = {f"p{i:03d}" for i in range(25, 35)}
        assert set(plan.not_covered_ids) <= stratum
        assert len(plan.not_covered_ids) == 7

    def test_insufficient_pool_rejected(self):
        _, pool, source = self.make_pool(5, 2)
        with pytest.raises(SelectionError, match="achievable"):
            select_labeling_batch(pool, source, 2, 6, 2, seed=0)

    def test_relaxed_mode_requires_region_factor(self):
        _, pool, source = self.make_pool(5, 2)
        with pytest.raises(ValidationError, match="region factor"):
            select_labeling_batch(pool, source, 2, 2, 1, mode="relaxed")

    def test_relaxed_mode_uses_region_stratum(self):
        schema = region_schema()
        # q1 shares region 7 with the strictly missing q0, so relaxed mode
        # sweeps it into the stratum
        pool = Dataset.from_labels(
            schema,
            [("q0", ["2", "7"]), ("q1", ["0", "7"]), ("q2", ["0", "1"]), ("q3", ["1", "2"])],
        )
        source = Dataset.from_labels(
            schema, [("s0", ["0", "1"]), ("s1", ["1", "7"]), ("s2", ["0", "7"]), ("s3", ["1", "2"])]
        )
        plan = select_labeling_batch(
            pool, source, 2, 0, 2, mode="relaxed", region_factor="region", seed=5
        )
        assert sorted(plan.not_covered_ids) == ["q0", "q1"]

    def test_ingestion_order_does_not_matter(self):
        schema, pool, source = self.make_pool(12, 4)
        reversed_pool = Dataset(schema, list(pool.records)[::-1])
        a = select_labeling_batch(pool, source, 2, 6, 2, seed=8)
        b = select_labeling_batch(reversed_pool, source, 2, 6, 2, seed=8)
        assert a.random_ids == b.random_ids
        assert a.not_covered_ids == b.not_covered_ids
