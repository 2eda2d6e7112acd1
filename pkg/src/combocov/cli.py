"""Command-line surface.

Subcommands: derive, coverage, sdcc, partition, select, report. Every run is
fully determined by its flags and input files; reruns with identical inputs
produce byte-identical outputs. Output documents embed the tool version, a
digest of each input, and the full flag set.
"""

from __future__ import annotations

import argparse
import sys
from fractions import Fraction

from . import __version__, construct, coverage, derive, io
from .errors import CombocovError, IngestionError
from .schema import FactorSchema


def _ratio(fr: Fraction) -> dict:
    return {"exact": f"{fr.numerator}/{fr.denominator}", "value": float(fr)}


# ---------------------------------------------------------------------------
# derive
# ---------------------------------------------------------------------------

_DERIVE_KINDS = ("identity", "predicate", "quantile", "grid_region")


def _parse_derivation_config(doc: dict, path: str) -> list[dict]:
    factors = doc.get("factors")
    if not isinstance(factors, list) or not factors:
        raise IngestionError(f"{path}: derivation config needs a non-empty 'factors' list")
    names = set()
    parsed = []
    for entry in factors:
        name = entry.get("name")
        kind = entry.get("kind")
        if not name or kind not in _DERIVE_KINDS:
            raise IngestionError(
                f"{path}: each factor needs a name and a kind in {_DERIVE_KINDS}"
            )
        if name in names:
            raise IngestionError(f"{path}: duplicate derived factor {name!r}")
        names.add(name)
        if kind == "identity":
            if not entry.get("source") or not entry.get("values"):
                raise IngestionError(
                    f"{path}: identity factor {name!r} needs 'source' and 'values'"
                )
        elif kind == "predicate":
            if not entry.get("source") or "true_values" not in entry:
                raise IngestionError(
                    f"{path}: predicate factor {name!r} needs 'source' and 'true_values'"
                )
        elif kind == "quantile":
            if not entry.get("source") or not entry.get("levels"):
                raise IngestionError(
                    f"{path}: quantile factor {name!r} needs 'source' and 'levels'"
                )
        else:  # grid_region
            if not entry.get("sources") and not entry.get("source_prefix"):
                raise IngestionError(
                    f"{path}: grid_region factor {name!r} needs 'sources' or 'source_prefix'"
                )
            if not entry.get("cells_per_axis"):
                raise IngestionError(
                    f"{path}: grid_region factor {name!r} needs 'cells_per_axis'"
                )
        parsed.append(entry)
    return parsed


def _embedding_columns(entry: dict, table: io.FeatureTable, config_path: str) -> list[str]:
    if entry.get("sources"):
        return list(entry["sources"])
    prefix = entry["source_prefix"]
    found = []
    for name in table.columns:
        if name.startswith(prefix) and name[len(prefix):].isdigit():
            found.append((int(name[len(prefix):]), name))
    if not found:
        raise IngestionError(
            f"{table.path}: no columns match prefix {prefix!r} "
            f"(factor {entry['name']!r} in {config_path})"
        )
    return [name for _, name in sorted(found)]


def _bool_label(flag: bool) -> str:
    return "True" if flag else "False"


def cmd_derive(args: argparse.Namespace) -> int:
    config_doc = io.read_json_doc(args.spec)
    entries = _parse_derivation_config(config_doc, args.spec)
    table = io.read_feature_table(args.features)

    inputs = {"features": args.features, "spec": args.spec}
    if not args.fit:
        inputs["artifact"] = args.artifact
    flags = {
        "features": args.features,
        "spec": args.spec,
        "artifact": args.artifact,
        "fit": args.fit,
        "out": args.out,
        "schema_out": args.schema_out,
    }
    meta = io.run_metadata("derive", flags, inputs)

    fitted_docs: dict[str, dict] = {}
    if not args.fit:
        fitted_docs = io.read_artifact(args.artifact)

    columns: dict[str, list[str]] = {}
    domains: dict[str, list[str]] = {}
    for entry in entries:
        name, kind = entry["name"], entry["kind"]
        if kind == "identity":
            raw = table.column(entry["source"])
            declared = [str(v) for v in entry["values"]]
            allowed = set(declared)
            for i, label in enumerate(raw):
                if label not in allowed:
                    raise IngestionError(
                        f"{table.path}:{table.line_numbers[i]}: value {label!r} of "
                        f"column {entry['source']!r} not in declared domain of {name!r}"
                    )
            columns[name] = list(raw)
            domains[name] = declared
        elif kind == "predicate":
            spec = derive.PredicateFactor(
                name=name,
                source=entry["source"],
                true_values=frozenset(str(v) for v in entry["true_values"]),
                source_values=(
                    frozenset(str(v) for v in entry["source_values"])
                    if entry.get("source_values")
                    else None
                ),
            )
            flags_col = derive.apply_predicate(table.column(entry["source"]), spec)
            columns[name] = [_bool_label(f) for f in flags_col]
            domains[name] = ["False", "True"]
        elif kind == "quantile":
            values = table.float_column(entry["source"])
            if args.fit:
                binning = derive.fit_quantile_bins(values, entry["levels"])
                fitted_docs[name] = io.quantile_to_dict(binning)
            else:
                if name not in fitted_docs:
                    raise IngestionError(
                        f"{args.artifact}: no fitted entry for factor {name!r}; "
                        "run derive --fit on a reference set first"
                    )
                binning = io.quantile_from_dict(fitted_docs[name])
            bins = derive.assign_bins(values, binning)
            columns[name] = [str(int(b)) for b in bins]
            domains[name] = [str(i) for i in range(binning.bin_count)]
        else:  # grid_region
            cols = _embedding_columns(entry, table, args.spec)
            matrix = table.matrix(cols)
            if args.fit:
                proj = derive.fit_projection(matrix)
                grid = derive.GridPartition(int(entry["cells_per_axis"]))
                fitted_docs[name] = io.region_to_dict(proj, grid)
            else:
                if name not in fitted_docs:
                    raise IngestionError(
                        f"{args.artifact}: no fitted entry for factor {name!r}; "
                        "run derive --fit on a reference set first"
                    )
                proj, grid = io.region_from_dict(fitted_docs[name])
            points = derive.project_and_scale(matrix, proj)
            regions = derive.regions_of(points, grid)
            columns[name] = [str(int(r)) for r in regions]
            domains[name] = [str(i) for i in range(grid.region_count)]

    if args.fit:
        io.write_artifact(args.artifact, fitted_docs, meta=meta)

    order = [entry["name"] for entry in entries]
    rows = (
        [table.ids[i]] + [columns[name][i] for name in order]
        for i in range(len(table.ids))
    )
    io.write_delimited(args.out, ["id"] + order, rows, meta=meta)

    if args.schema_out:
        schema = FactorSchema.build(
            [(name, domains[name]) for name in order],
            _derived_constraints(entries, domains),
        )
        doc = io.schema_to_dict(schema)
        doc["meta"] = meta
        io.write_json_doc(args.schema_out, doc)
    return 0


def _derived_constraints(entries: list[dict], domains: dict[str, list[str]]):
    """Forbidden pairs implied by predicate factors whose source is also an
    identity factor: the predicate value is a function of the source value, so
    the opposite pairing can never occur."""
    by_source = {
        entry["source"]: entry["name"]
        for entry in entries
        if entry["kind"] == "identity"
    }
    constraints = []
    for entry in entries:
        if entry["kind"] != "predicate":
            continue
        identity_name = by_source.get(entry["source"])
        if identity_name is None:
            continue
        true_values = {str(v) for v in entry["true_values"]}
        for label in domains[identity_name]:
            impossible = "False" if label in true_values else "True"
            constraints.append([(identity_name, label), (entry["name"], impossible)])
    return constraints


# ---------------------------------------------------------------------------
# coverage / sdcc / report
# ---------------------------------------------------------------------------


def cmd_coverage(args: argparse.Namespace) -> int:
    schema = io.read_schema(args.schema)
    data = io.read_dataset(args.data, schema)
    report = coverage.combinatorial_coverage(data, args.t)
    flags = {"schema": args.schema, "data": args.data, "t": args.t, "out": args.out}
    doc = {
        "meta": io.run_metadata("coverage", flags, {"schema": args.schema, "data": args.data}),
        "t": report.t,
        "record_count": len(data),
        "covered_count": report.covered_count,
        "universe_count": report.universe_count,
        "cc": _ratio(report.cc),
    }
    io.write_json_doc(args.out, doc)
    return 0


def _sdcc_payload(report: coverage.SDCCReport, schema: FactorSchema) -> dict:
    not_covered = sorted(
        rec_id for rec_id, covered in report.per_record_flags.items() if not covered
    )
    return {
        "t": report.t,
        "target_combination_count": report.target_count,
        "missing_combination_count": report.missing_count,
        "sdcc": _ratio(report.sdcc),
        "missing_combinations": [
            [[fname, label] for fname, label in combo.labels(schema)]
            for combo in report.missing_combinations
        ],
        "record_count": len(report.per_record_flags),
        "not_covered_record_count": len(not_covered),
        "not_covered_ids": not_covered,
    }


def cmd_sdcc(args: argparse.Namespace) -> int:
    schema = io.read_schema(args.schema)
    target = io.read_dataset(args.target, schema)
    source = io.read_dataset(args.source, schema)
    report = coverage.sdcc(target, source, args.t)
    flags = {
        "schema": args.schema,
        "target": args.target,
        "source": args.source,
        "t": args.t,
        "out": args.out,
    }
    inputs = {"schema": args.schema, "target": args.target, "source": args.source}
    doc = {"meta": io.run_metadata("sdcc", flags, inputs)}
    doc.update(_sdcc_payload(report, schema))
    io.write_json_doc(args.out, doc)
    return 0


def cmd_report(args: argparse.Namespace) -> int:
    schema = io.read_schema(args.schema)
    target = io.read_dataset(args.target, schema)
    source = io.read_dataset(args.source, schema)
    gap = construct.coverage_gap_report(target, source, args.t)
    flags = {
        "schema": args.schema,
        "target": args.target,
        "source": args.source,
        "t": args.t,
        "out": args.out,
    }
    inputs = {"schema": args.schema, "target": args.target, "source": args.source}
    doc = {
        "meta": io.run_metadata("report", flags, inputs),
        "t": gap.t,
        "sdcc_forward": _ratio(gap.sdcc_forward),
        "sdcc_backward": _ratio(gap.sdcc_backward),
        "covered_record_count": gap.covered_count,
        "not_covered_record_count": gap.not_covered_count,
        "factor_missing_values": {
            name: list(values) for name, values in gap.factor_missing_values.items()
        },
    }
    io.write_json_doc(args.out, doc)
    return 0


# ---------------------------------------------------------------------------
# partition / select
# ---------------------------------------------------------------------------


def _summary_path(args: argparse.Namespace) -> str:
    return args.summary_out if args.summary_out else args.out + ".summary.json"


def cmd_partition(args: argparse.Namespace) -> int:
    schema = io.read_schema(args.schema)
    target = io.read_dataset(args.target, schema)
    source = io.read_dataset(args.source, schema)
    if args.mode == "strict":
        result = construct.partition_strict(target, source, args.t)
    else:
        if not args.region_factor:
            raise CombocovError("--mode relaxed requires --region-factor")
        result = construct.partition_relaxed(target, source, args.t, args.region_factor)
    flags = {
        "schema": args.schema,
        "target": args.target,
        "source": args.source,
        "t": args.t,
        "mode": args.mode,
        "region_factor": args.region_factor,
        "out": args.out,
        "summary_out": args.summary_out,
    }
    inputs = {"schema": args.schema, "target": args.target, "source": args.source}
    meta = io.run_metadata("partition", flags, inputs)

    not_covered = set(result.not_covered)
    if result.mode == "strict":
        header = ["id", "flag", "missing_count"]
        rows = [
            [rec.id, "not_covered" if rec.id in not_covered else "covered",
             str(result.missing_counts[rec.id])]
            for rec in target.records
        ]
    else:
        header = ["id", "flag", "region"]
        rows = [
            [rec.id, "not_covered" if rec.id in not_covered else "covered",
             result.record_regions[rec.id]]
            for rec in target.records
        ]
    io.write_delimited(args.out, header, rows, meta=meta)

    summary = {
        "meta": meta,
        "mode": result.mode,
        "t": args.t,
        "record_count": len(target),
        "covered_count": len(result.covered),
        "not_covered_count": len(result.not_covered),
    }
    if result.mode == "relaxed":
        summary["implicated_regions"] = list(result.implicated_regions)
    io.write_json_doc(_summary_path(args), summary)
    return 0


def cmd_select(args: argparse.Namespace) -> int:
    schema = io.read_schema(args.schema)
    pool = io.read_dataset(args.pool, schema)
    source = io.read_dataset(args.source, schema)
    plan = construct.select_labeling_batch(
        pool,
        source,
        args.t,
        n_random=args.n_random,
        n_not_covered=args.n_not_covered,
        mode=args.mode,
        region_factor=args.region_factor,
        seed=args.seed,
    )
    flags = {
        "schema": args.schema,
        "pool": args.pool,
        "source": args.source,
        "t": args.t,
        "n_random": args.n_random,
        "n_not_covered": args.n_not_covered,
        "mode": args.mode,
        "region_factor": args.region_factor,
        "seed": args.seed,
        "out": args.out,
        "summary_out": args.summary_out,
    }
    inputs = {"schema": args.schema, "pool": args.pool, "source": args.source}
    meta = io.run_metadata("select", flags, inputs)

    rows = [[rec_id, "not_covered"] for rec_id in plan.not_covered_ids]
    rows += [[rec_id, "random"] for rec_id in plan.random_ids]
    io.write_delimited(args.out, ["id", "stratum"], rows, meta=meta)

    summary = {
        "meta": meta,
        "mode": plan.mode,
        "seed": plan.seed,
        "requested_random": plan.requested_random,
        "requested_not_covered": plan.requested_not_covered,
        "selected_random": len(plan.random_ids),
        "selected_not_covered": len(plan.not_covered_ids),
        "not_covered_shortfall": plan.not_covered_shortfall,
        "batch_size": len(plan.batch),
    }
    io.write_json_doc(_summary_path(args), summary)
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="combocov",
        description="t-way combinatorial coverage and set-difference coverage "
        "over discrete-factor datasets",
    )
    parser.add_argument("--version", action="version", version=f"combocov {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("derive", help="derive discrete factors from raw features")
    p.add_argument("--features", required=True, help="raw feature table (CSV with id column)")
    p.add_argument("--spec", required=True, help="derivation config (JSON)")
    p.add_argument("--artifact", required=True,
                   help="fitted-artifact document (written with --fit, read otherwise)")
    p.add_argument("--fit", action="store_true",
                   help="fit bin edges / projection on this reference set")
    p.add_argument("--out", required=True, help="output factor table (CSV)")
    p.add_argument("--schema-out", default=None,
                   help="also write a schema document for the derived factors")
    p.set_defaults(func=cmd_derive)

    p = sub.add_parser("coverage", help="t-way combinatorial coverage of a dataset")
    p.add_argument("--schema", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("-t", "--strength", dest="t", type=int, default=2)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_coverage)

    p = sub.add_parser("sdcc", help="set-difference coverage of a target against a source")
    p.add_argument("--schema", required=True)
    p.add_argument("--target", required=True)
    p.add_argument("--source", required=True)
    p.add_argument("-t", "--strength", dest="t", type=int, default=2)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sdcc)

    p = sub.add_parser("partition", help="split a target into covered / not-covered records")
    p.add_argument("--schema", required=True)
    p.add_argument("--target", required=True)
    p.add_argument("--source", required=True)
    p.add_argument("-t", "--strength", dest="t", type=int, default=2)
    p.add_argument("--mode", choices=("strict", "relaxed"), default="strict")
    p.add_argument("--region-factor", default=None)
    p.add_argument("--out", required=True, help="partition table (CSV)")
    p.add_argument("--summary-out", default=None,
                   help="summary document (default: <out>.summary.json)")
    p.set_defaults(func=cmd_partition)

    p = sub.add_parser("select", help="draw a labeling batch from a pool")
    p.add_argument("--schema", required=True)
    p.add_argument("--pool", required=True)
    p.add_argument("--source", required=True)
    p.add_argument("-t", "--strength", dest="t", type=int, default=2)
    p.add_argument("--n-random", type=int, required=True)
    p.add_argument("--n-not-covered", type=int, required=True)
    p.add_argument("--mode", choices=("strict", "relaxed"), default="strict")
    p.add_argument("--region-factor", default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="selection table (CSV)")
    p.add_argument("--summary-out", default=None,
                   help="summary document (default: <out>.summary.json)")
    p.set_defaults(func=cmd_select)

    p = sub.add_parser("report", help="two-directional coverage gap diagnostics")
    p.add_argument("--schema", required=True)
    p.add_argument("--target", required=True)
    p.add_argument("--source", required=True)
    p.add_argument("-t", "--strength", dest="t", type=int, default=2)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_report)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CombocovError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
