"""File formats and the command-line surface, end to end."""

import json
from pathlib import Path

import pytest

from combocov import FactorSchema, IngestionError
from combocov import io as cio
from combocov.cli import main

DATA = Path(__file__).parent / "data"


def run_cli(*argv) -> int:
    return main([str(a) for a in argv])


def read_json(path) -> dict:
    return json.loads(Path(path).read_text())


class TestSchemaDocs:
    def test_round_trip(self, tmp_path):
        schema = FactorSchema.build(
            [("digit", [str(i) for i in range(10)]), ("circle", ["False", "True"])],
            [[("digit", "0"), ("circle", "False")]],
        )
        path = tmp_path / "schema.json"
        cio.write_schema(path, schema)
        assert cio.read_schema(path) == schema

    def test_malformed_rejected(self, tmp_path):
        path = tmp_path / "schema.json"
        path.write_text('{"factors": "nope"}')
        with pytest.raises(IngestionError):
            cio.read_schema(path)

    def test_invalid_json_rejected(self, tmp_path):
        path = tmp_path / "schema.json"
        path.write_text("{")
        with pytest.raises(IngestionError, match="JSON"):
            cio.read_schema(path)


class TestDatasetIngestion:
    def schema(self):
        return cio.read_schema(DATA / "schema_abc.json")

    def test_reads_and_matches_exact_strings(self):
        data = cio.read_dataset(DATA / "target_abc.csv", self.schema())
        assert data.records[0].assignments == (0, 1, 1)

    def test_comment_lines_skipped(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text("# tool: combocov\nid,a,b,c\nr0,0,0,0\n")
        assert len(cio.read_dataset(path, self.schema())) == 1

    def test_unknown_value_reports_line(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text("id,a,b,c\nr0,0,0,0\nr1,0,2,0\n")
        with pytest.raises(IngestionError, match=r"d\.csv:3.*unknown value '2'"):
            cio.read_dataset(path, self.schema())

    def test_duplicate_id_reports_line(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text("id,a,b,c\nr0,0,0,0\nr0,1,1,1\n")
        with pytest.raises(IngestionError, match=r"d\.csv:3.*duplicate id"):
            cio.read_dataset(path, self.schema())

    def test_missing_factor_column_rejected(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text("id,a,b\nr0,0,0\n")
        with pytest.raises(IngestionError, match="missing factor columns"):
            cio.read_dataset(path, self.schema())

    def test_missing_id_column_rejected(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text("a,b,c\n0,0,0\n")
        with pytest.raises(IngestionError, match="'id'"):
            cio.read_dataset(path, self.schema())

    def test_extra_columns_ignored(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text("id,a,b,c,note\nr0,0,0,0,hello\n")
        assert len(cio.read_dataset(path, self.schema())) == 1

    def test_short_row_rejected(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text("id,a,b,c\nr0,0,0\n")
        with pytest.raises(IngestionError, match="expected 4 fields"):
            cio.read_dataset(path, self.schema())


class TestFeatureTable:
    def test_float_column_error_has_line(self, tmp_path):
        path = tmp_path / "f.csv"
        path.write_text("id,x\nr0,1.5\nr1,oops\n")
        table = cio.read_feature_table(path)
        with pytest.raises(IngestionError, match=r"f\.csv:3.*not a number"):
            table.float_column("x")

    def test_non_finite_rejected(self, tmp_path):
        path = tmp_path / "f.csv"
        path.write_text("id,x\nr0,inf\n")
        with pytest.raises(IngestionError, match="non-finite"):
            cio.read_feature_table(path).float_column("x")


class TestDeriveCommand:
    def run_fit(self, tmp_path, schema_out=True):
        out = tmp_path / "factors.csv"
        artifact = tmp_path / "artifact.json"
        schema = tmp_path / "schema.json"
        argv = [
            "derive",
            "--features", DATA / "features.csv",
            "--spec", DATA / "derivation.json",
            "--artifact", artifact,
            "--fit",
            "--out", out,
        ]
        if schema_out:
            argv += ["--schema-out", schema]
        assert run_cli(*argv) == 0
        return out, artifact, schema

    def test_fit_writes_all_documents(self, tmp_path):
        out, artifact, schema_path = self.run_fit(tmp_path)
        assert out.exists() and artifact.exists() and schema_path.exists()
        fitted = cio.read_artifact(artifact)
        assert set(fitted) == {"density", "region"}
        assert len(fitted["density"]["edges"]) == 3
        assert fitted["region"]["cells_per_axis"] == 5

    def test_factor_table_ingests_with_emitted_schema(self, tmp_path):
        out, _, schema_path = self.run_fit(tmp_path)
        schema = cio.read_schema(schema_path)
        data = cio.read_dataset(out, schema)
        assert len(data) == 40
        names = [f.name for f in schema.factors]
        assert names == ["digit", "circle", "density", "region"]
        assert schema.factors[2].values == ("0", "1", "2", "3")
        assert len(schema.factors[3].values) == 25

    def test_emitted_schema_has_predicate_constraints(self, tmp_path):
        _, _, schema_path = self.run_fit(tmp_path)
        doc = read_json(schema_path)
        # digit=0 forces circle=True, so (digit=0, circle=False) is forbidden
        assert [["digit", "0"], ["circle", "False"]] in doc["constraints"]
        assert [["digit", "1"], ["circle", "True"]] in doc["constraints"]
        assert len(doc["constraints"]) == 10

    def test_circle_column_matches_predicate(self, tmp_path):
        out, _, schema_path = self.run_fit(tmp_path)
        data = cio.read_dataset(out, cio.read_schema(schema_path))
        for rec in data.records:
            digit, circle = data.labels_of(rec)[:2]
            assert circle == ("True" if digit in {"0", "6", "8", "9"} else "False")

    def test_apply_reuses_fitted_artifact(self, tmp_path):
        _, artifact, _ = self.run_fit(tmp_path, schema_out=False)
        out2 = tmp_path / "factors_shifted.csv"
        assert run_cli(
            "derive",
            "--features", DATA / "features_shifted.csv",
            "--spec", DATA / "derivation.json",
            "--artifact", artifact,
            "--out", out2,
        ) == 0
        # shifted domain still lands in the declared domains (clamping)
        text = out2.read_text()
        assert "new000" in text

    def test_missing_artifact_entry_reported(self, tmp_path):
        artifact = tmp_path / "artifact.json"
        artifact.write_text('{"version": 1, "fitted": {}}')
        code = run_cli(
            "derive",
            "--features", DATA / "features.csv",
            "--spec", DATA / "derivation.json",
            "--artifact", artifact,
            "--out", tmp_path / "f.csv",
        )
        assert code == 1

    def test_identity_value_outside_domain_fails(self, tmp_path):
        features = tmp_path / "f.csv"
        features.write_text("id,digit,mean_pixel,z0,z1,z2,z3\nr0,11,5.0,0,0,0,0\n")
        code = run_cli(
            "derive",
            "--features", features,
            "--spec", DATA / "derivation.json",
            "--artifact", tmp_path / "a.json",
            "--fit",
            "--out", tmp_path / "out.csv",
        )
        assert code == 1


class TestAnalysisCommands:
    def test_coverage_single_record(self, tmp_path):
        out = tmp_path / "cc.json"
        assert run_cli(
            "coverage",
            "--schema", DATA / "schema_abc.json",
            "--data", DATA / "single_abc.csv",
            "-t", "2",
            "--out", out,
        ) == 0
        doc = read_json(out)
        assert doc["covered_count"] == 3
        assert doc["universe_count"] == 12
        assert doc["cc"] == {"exact": "1/4", "value": 0.25}

    def test_coverage_full_factorial_is_one(self, tmp_path):
        out = tmp_path / "cc.json"
        run_cli(
            "coverage",
            "--schema", DATA / "schema_abc.json",
            "--data", DATA / "full_abc.csv",
            "--out", out,
        )
        assert read_json(out)["cc"]["value"] == 1.0

    def test_sdcc_fixture_two_thirds(self, tmp_path):
        out = tmp_path / "sdcc.json"
        assert run_cli(
            "sdcc",
            "--schema", DATA / "schema_abc.json",
            "--target", DATA / "target_abc.csv",
            "--source", DATA / "source_abc.csv",
            "--out", out,
        ) == 0
        doc = read_json(out)
        assert doc["missing_combination_count"] == 2
        assert doc["target_combination_count"] == 3
        assert doc["sdcc"]["exact"] == "2/3"
        assert doc["not_covered_ids"] == ["t0"]
        assert [["a", "0"], ["c", "1"]] in doc["missing_combinations"]

    def test_sdcc_identical_files_zero(self, tmp_path):
        out = tmp_path / "sdcc.json"
        run_cli(
            "sdcc",
            "--schema", DATA / "schema_abc.json",
            "--target", DATA / "target_abc.csv",
            "--source", DATA / "target_abc.csv",
            "--out", out,
        )
        assert read_json(out)["sdcc"]["value"] == 0.0

    def test_partition_strict_output(self, tmp_path):
        out = tmp_path / "part.csv"
        assert run_cli(
            "partition",
            "--schema", DATA / "schema_abc.json",
            "--target", DATA / "target_abc.csv",
            "--source", DATA / "source_abc.csv",
            "--out", out,
        ) == 0
        lines = [l for l in out.read_text().splitlines() if not l.startswith("#")]
        assert lines[0] == "id,flag,missing_count"
        assert lines[1] == "t0,not_covered,2"
        summary = read_json(tmp_path / "part.csv.summary.json")
        assert summary["not_covered_count"] == 1

    def test_partition_relaxed_needs_region_factor(self, tmp_path):
        code = run_cli(
            "partition",
            "--schema", DATA / "schema_abc.json",
            "--target", DATA / "target_abc.csv",
            "--source", DATA / "source_abc.csv",
            "--mode", "relaxed",
            "--out", tmp_path / "p.csv",
        )
        assert code == 1

    def test_report_directions(self, tmp_path):
        out = tmp_path / "gap.json"
        assert run_cli(
            "report",
            "--schema", DATA / "schema_abc.json",
            "--target", DATA / "target_abc.csv",
            "--source", DATA / "source_abc.csv",
            "--out", out,
        ) == 0
        doc = read_json(out)
        assert doc["sdcc_forward"]["exact"] == "2/3"
        assert doc["sdcc_backward"]["exact"] == "2/3"
        assert doc["factor_missing_values"]["c"] == ["1"]

    def test_select_writes_plan(self, tmp_path):
        out = tmp_path / "sel.csv"
        assert run_cli(
            "select",
            "--schema", DATA / "schema_abc.json",
            "--pool", DATA / "full_abc.csv",
            "--source", DATA / "source_abc.csv",
            "--n-random", "3",
            "--n-not-covered", "2",
            "--seed", "7",
            "--out", out,
        ) == 0
        lines = [l for l in out.read_text().splitlines() if not l.startswith("#")]
        assert lines[0] == "id,stratum"
        strata = [line.split(",")[1] for line in lines[1:]]
        assert strata.count("not_covered") == 2
        assert strata.count("random") == 3
        summary = read_json(tmp_path / "sel.csv.summary.json")
        assert summary["seed"] == 7
        assert summary["batch_size"] == 5

    def test_unknown_value_fails_with_code_one(self, tmp_path, capsys):
        bad = tmp_path / "bad.csv"
        bad.write_text("id,a,b,c\nr0,0,9,0\n")
        code = run_cli(
            "coverage",
            "--schema", DATA / "schema_abc.json",
            "--data", bad,
            "--out", tmp_path / "out.json",
        )
        assert code == 1
        err = capsys.readouterr().err
        assert "IngestionError" in err and "unknown value" in err


class TestReproducibility:
    def test_byte_identical_reruns(self, tmp_path):
        argv = [
            "derive",
            "--features", DATA / "features.csv",
            "--spec", DATA / "derivation.json",
            "--artifact", tmp_path / "artifact.json",
            "--fit",
            "--out", tmp_path / "factors.csv",
            "--schema-out", tmp_path / "schema.json",
        ]
        outputs = ("factors.csv", "artifact.json", "schema.json")
        run_cli(*argv)
        snapshot = {name: (tmp_path / name).read_bytes() for name in outputs}
        run_cli(*argv)
        for name in outputs:
            assert (tmp_path / name).read_bytes() == snapshot[name]

    def test_selection_deterministic_under_seed(self, tmp_path):
        outs = []
        for name in ("x.csv", "y.csv"):
            out = tmp_path / name
            run_cli(
                "select",
                "--schema", DATA / "schema_abc.json",
                "--pool", DATA / "full_abc.csv",
                "--source", DATA / "source_abc.csv",
                "--n-random", "4",
                "--n-not-covered", "2",
                "--seed", "123",
                "--out", out,
            )
            # drop the flag lines, which name the output path
            outs.append([l for l in out.read_text().splitlines() if not l.startswith("#")])
        assert outs[0] == outs[1]
