"""Export formats must round-trip through the coverage tool's ingestion."""

import subprocess

import numpy as np
import pytest

from rotharness import covcli
from rotharness.data import synthetic_digits
from rotharness.models import train_autoencoder, encode_images


@pytest.fixture(scope="module")
def feature_file(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("exports")
    images, labels = synthetic_digits(4, seed=0)
    ae, _ = train_autoencoder(images, epochs=1, batch_size=32, seed=0)
    latents = encode_images(ae, images)
    ids = [f"a00i{i:05d}" for i in range(len(images))]
    path = tmp / "features.csv"
    covcli.write_features(path, ids, labels, images, latents)
    covcli.write_derivation_config(tmp / "derivation.json", grid_cells=5)
    return tmp, path


def test_coverage_tool_on_path():
    assert covcli.require_tool()


def test_features_ingest_through_derive(feature_file):
    tmp, path = feature_file
    covcli.run(
        "derive",
        "--features", path,
        "--spec", tmp / "derivation.json",
        "--artifact", tmp / "artifact.json",
        "--fit",
        "--out", tmp / "factors.csv",
        "--schema-out", tmp / "schema.json",
    )
    rows = list(covcli._rows(tmp / "factors.csv"))
    assert len(rows) == 40
    assert set(rows[0]) == {"id", "digit", "circle", "density", "region"}


def test_factor_table_flows_into_sdcc_and_partition(feature_file):
    tmp, _ = feature_file
    covcli.run(
        "sdcc",
        "--schema", tmp / "schema.json",
        "--target", tmp / "factors.csv",
        "--source", tmp / "factors.csv",
        "--out", tmp / "self.json",
    )
    assert covcli.read_json(tmp / "self.json")["sdcc"]["value"] == 0.0
    covcli.run(
        "partition",
        "--schema", tmp / "schema.json",
        "--target", tmp / "factors.csv",
        "--source", tmp / "factors.csv",
        "--out", tmp / "part.csv",
    )
    flags = covcli.read_partition_flags(tmp / "part.csv")
    assert len(flags) == 40 and all(flags.values())


def test_failed_run_raises_with_stderr(feature_file):
    tmp, path = feature_file
    with pytest.raises(covcli.CoverageToolError, match="exited"):
        covcli.run("coverage", "--schema", tmp / "nope.json", "--data", path,
                   "--out", tmp / "x.json")


def test_predictions_round_trip(tmp_path):
    ids = ["x1", "x2", "x3"]
    covcli.write_predictions(
        tmp_path / "preds.csv",
        ids,
        np.array([1, 2, 3]),
        np.array([1, 0, 3]),
    )
    back = covcli.read_predictions(tmp_path / "preds.csv")
    assert back == {"x1": (1, 1), "x2": (2, 0), "x3": (3, 3)}


def test_filter_and_concat_tables(tmp_path):
    src = tmp_path / "t.csv"
    src.write_text("# meta\nid,f\nr1,0\nr2,1\nr3,0\n")
    kept = covcli.filter_table(src, tmp_path / "f.csv", {"r1", "r3"})
    assert kept == 2
    covcli.concat_tables([tmp_path / "f.csv", tmp_path / "f.csv"], tmp_path / "c.csv")
    lines = (tmp_path / "c.csv").read_text().splitlines()
    assert lines[0] == "id,f"
    assert len(lines) == 5

    other = tmp_path / "other.csv"
    other.write_text("id,g\nr1,0\n")
    with pytest.raises(covcli.CoverageToolError, match="header"):
        covcli.concat_tables([src, other], tmp_path / "bad.csv")


def test_subprocess_entry_point_exists():
    proc = subprocess.run(["rotharness", "--help"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert "run-all" in proc.stdout
