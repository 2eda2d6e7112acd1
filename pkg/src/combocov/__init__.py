"""combocov: t-way combinatorial coverage and set-difference coverage for
discrete-factor datasets, with factor derivation and coverage-guided set
construction."""

__version__ = "0.1.0"

from ._backend import BACKEND
from .construct import (
    GapReport,
    PartitionResult,
    SelectionPlan,
    coverage_gap_report,
    partition_relaxed,
    partition_strict,
    select_labeling_batch,
)
from .coverage import (
    CombinationSet,
    CoverageReport,
    SDCCReport,
    ValueCombination,
    build_combination_set,
    combinatorial_coverage,
    combos_of_record,
    sdcc,
    universe_count,
)
from .derive import (
    GridPartition,
    PredicateFactor,
    Projection2D,
    QuantileBinning,
    apply_predicate,
    assign_bin,
    assign_bins,
    fit_projection,
    fit_quantile_bins,
    project_and_scale,
    region_of,
    regions_of,
)
from .errors import (
    CombocovError,
    DegenerateProjectionError,
    DegenerateSchemaError,
    FitError,
    IngestionError,
    SchemaError,
    SelectionError,
    StrengthError,
    UndefinedRatioError,
    ValidationError,
)
from .schema import Dataset, Factor, FactorSchema, Record

__all__ = [
    "BACKEND",
    "CombinationSet",
    "CombocovError",
    "CoverageReport",
    "Dataset",
    "DegenerateProjectionError",
    "DegenerateSchemaError",
    "Factor",
    "FactorSchema",
    "FitError",
    "GapReport",
    "GridPartition",
    "IngestionError",
    "PartitionResult",
    "PredicateFactor",
    "Projection2D",
    "QuantileBinning",
    "Record",
    "SchemaError",
    "SDCCReport",
    "SelectionError",
    "SelectionPlan",
    "StrengthError",
    "UndefinedRatioError",
    "ValidationError",
    "ValueCombination",
    "apply_predicate",
    "assign_bin",
    "assign_bins",
    "build_combination_set",
    "combinatorial_coverage",
    "combos_of_record",
    "coverage_gap_report",
    "fit_projection",
    "fit_quantile_bins",
    "partition_relaxed",
    "partition_strict",
    "project_and_scale",
    "region_of",
    "regions_of",
    "sdcc",
    "select_labeling_batch",
    "universe_count",
]
