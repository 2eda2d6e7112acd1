"""Digit sources, rotation, and splits."""

import gzip
import struct

import numpy as np
import pytest

from rotharness.data import (
    MissingDataError,
    balanced_subset,
    load_mnist,
    rotate_images,
    stratified_split,
    synthetic_digits,
)


class TestSyntheticDigits:
    def test_shapes_and_range(self):
        images, labels = synthetic_digits(5, seed=3)
        assert images.shape == (50, 28, 28)
        assert labels.shape == (50,)
        assert images.min() >= 0.0 and images.max() <= 1.0

    def test_balanced_labels(self):
        _, labels = synthetic_digits(7, seed=1)
        assert [int((labels == d).sum()) for d in range(10)] == [7] * 10

    def test_deterministic_given_seed(self):
        a, _ = synthetic_digits(4, seed=9)
        b, _ = synthetic_digits(4, seed=9)
        assert np.array_equal(a, b)

    def test_different_seed_differs(self):
        a, _ = synthetic_digits(4, seed=1)
        b, _ = synthetic_digits(4, seed=2)
        assert not np.array_equal(a, b)


class TestRotation:
    def test_zero_angle_is_identity_copy(self):
        images, _ = synthetic_digits(2, seed=0)
        rotated = rotate_images(images, 0)
        assert np.array_equal(rotated, images)
        assert rotated is not images

    def test_shape_preserved(self):
        images, _ = synthetic_digits(2, seed=0)
        for angle in (15, 30, 45, 60, 75, 90):
            assert rotate_images(images, angle).shape == images.shape

    def test_ninety_degrees_is_counter_clockwise(self):
        # a bright top edge must move to the left edge
        images = np.zeros((1, 28, 28), dtype=np.float32)
        images[0, 0, :] = 1.0
        rotated = rotate_images(images, 90)
        assert rotated[0, :, 0].sum() > rotated[0, :, -1].sum()
        assert rotated[0, :, 0].sum() > rotated[0, 0, :].sum()

    def test_close_to_exact_quarter_turn(self):
        images, _ = synthetic_digits(3, seed=5)
        rotated = rotate_images(images, 90)
        exact = np.rot90(images, k=1, axes=(1, 2))
        assert np.abs(rotated - exact).max() < 1e-4

    def test_total_count_formula(self):
        # each nonzero angle adds one rotated copy per base image
        images, _ = synthetic_digits(3, seed=5)
        angles = (15, 30, 45, 60, 75, 90)
        total = sum(len(rotate_images(images, a)) for a in angles)
        assert total == len(images) * len(angles)


class TestSplits:
    def test_balanced_subset_counts(self):
        _, labels = synthetic_digits(10, seed=2)
        rng = np.random.default_rng(0)
        chosen = balanced_subset(labels, 6, rng)
        assert len(chosen) == 60
        assert [int((labels[chosen] == d).sum()) for d in range(10)] == [6] * 10

    def test_balanced_subset_insufficient(self):
        _, labels = synthetic_digits(3, seed=2)
        with pytest.raises(MissingDataError, match="need 5"):
            balanced_subset(labels, 5, np.random.default_rng(0))

    def test_stratified_split_disjoint_and_sized(self):
        _, labels = synthetic_digits(10, seed=4)
        rng = np.random.default_rng(1)
        train, evaluation = stratified_split(labels, eval_per_class=2, rng=rng)
        assert len(set(train) & set(evaluation)) == 0
        assert len(train) + len(evaluation) == len(labels)
        assert [int((labels[evaluation] == d).sum()) for d in range(10)] == [2] * 10


class TestMnistLoader:
    def test_missing_corpus_gives_instructions(self, tmp_path):
        with pytest.raises(MissingDataError, match="IDX"):
            load_mnist(tmp_path)

    def test_reads_idx_files(self, tmp_path):
        images = np.arange(2 * 28 * 28, dtype=np.uint8).reshape(2, 28, 28)
        labels = np.array([3, 7], dtype=np.uint8)
        with open(tmp_path / "train-images-idx3-ubyte", "wb") as fh:
            fh.write(struct.pack(">I", 0x00000803))
            fh.write(struct.pack(">3I", 2, 28, 28))
            fh.write(images.tobytes())
        with gzip.open(tmp_path / "train-labels-idx1-ubyte.gz", "wb") as fh:
            fh.write(struct.pack(">I", 0x00000801))
            fh.write(struct.pack(">I", 2))
            fh.write(labels.tobytes())
        got_images, got_labels = load_mnist(tmp_path)
        assert got_images.shape == (2, 28, 28)
        assert got_images.max() <= 1.0
        assert list(got_labels) == [3, 7]
