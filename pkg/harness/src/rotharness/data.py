"""Digit image sources and rotation.

Loads MNIST from a local directory of IDX files, or generates a deterministic
synthetic glyph set when no corpus is available offline. Rotation is
counter-clockwise (as displayed), bilinear, zero-filled, and never resizes.
"""

from __future__ import annotations

import gzip
import struct
from pathlib import Path

import numpy as np
from scipy import ndimage


class MissingDataError(RuntimeError):
    """Raised when the local digit corpus is absent; carries instructions."""


_IDX_CANDIDATES = (
    ("train-images-idx3-ubyte", "train-labels-idx1-ubyte"),
    ("train-images.idx3-ubyte", "train-labels.idx1-ubyte"),
)


def _read_idx(path: Path) -> np.ndarray:
    opener = gzip.open if path.suffix == ".gz" else open
    with opener(path, "rb") as fh:
        magic = struct.unpack(">I", fh.read(4))[0]
        ndim = magic & 0xFF
        shape = struct.unpack(f">{ndim}I", fh.read(4 * ndim))
        data = fh.read()
    return np.frombuffer(data, dtype=np.uint8).reshape(shape)


def _find(root: Path, names: tuple[str, ...]) -> Path | None:
    for name in names:
        for suffix in ("", ".gz"):
            path = root / (name + suffix)
            if path.exists():
                return path
    return None


def load_mnist(data_dir: str | Path) -> tuple[np.ndarray, np.ndarray]:
    """Images scaled to [0, 1] float32 plus integer labels, from IDX files."""
    root = Path(data_dir)
    images_path = _find(root, tuple(pair[0] for pair in _IDX_CANDIDATES))
    labels_path = _find(root, tuple(pair[1] for pair in _IDX_CANDIDATES))
    if images_path is not None and labels_path is not None:
        images = _read_idx(images_path).astype(np.float32) / 255.0
        labels = _read_idx(labels_path).astype(np.int64)
        return images, labels
    raise MissingDataError(
        f"no MNIST IDX files under {root}/ — place train-images-idx3-ubyte and "
        "train-labels-idx1-ubyte (optionally .gz) there, e.g. from "
        "https://ossci-datasets.s3.amazonaws.com/mnist/, or run with "
        "--synthetic to use the built-in glyph generator"
    )


def _font():
    from functools import lru_cache

    import matplotlib
    from PIL import ImageFont

    path = (
        Path(matplotlib.__file__).parent
        / "mpl-data" / "fonts" / "ttf" / "DejaVuSans-Bold.ttf"
    )

    @lru_cache(maxsize=None)
    def font_at(size: int):
        return ImageFont.truetype(str(path), size)

    return font_at


def synthetic_digits(per_class: int, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """A deterministic stand-in corpus: rendered digit glyphs with jittered
    position, size, slant, stroke intensity, and pixel noise."""
    from PIL import Image, ImageDraw

    font_at = _font()
    rng = np.random.default_rng(seed)
    images = np.zeros((per_class * 10, 28, 28), dtype=np.float32)
    labels = np.zeros(per_class * 10, dtype=np.int64)
    i = 0
    for digit in range(10):
        for _ in range(per_class):
            size = int(rng.integers(16, 23))
            canvas = Image.new("L", (28, 28), 0)
            draw = ImageDraw.Draw(canvas)
            left, top, right, bottom = draw.textbbox((0, 0), str(digit), font=font_at(size))
            x = (28 - (right - left)) / 2 - left + rng.uniform(-2.5, 2.5)
            y = (28 - (bottom - top)) / 2 - top + rng.uniform(-2.5, 2.5)
            draw.text((x, y), str(digit), fill=255, font=font_at(size))
            glyph = np.asarray(canvas, dtype=np.float32) / 255.0
            slant = rng.uniform(-8.0, 8.0)
            glyph = ndimage.rotate(glyph, slant, reshape=False, order=1, cval=0.0)
            glyph *= rng.uniform(0.75, 1.0)
            glyph += rng.normal(0.0, 0.02, glyph.shape)
            images[i] = np.clip(glyph, 0.0, 1.0)
            labels[i] = digit
            i += 1
    return images, labels


def rotate_images(images: np.ndarray, angle: int) -> np.ndarray:
    """Counter-clockwise rotation without resizing (bilinear, zero fill).

    angle 0 returns a copy, so every angle set is an independent array.
    """
    if angle == 0:
        return images.copy()
    out = ndimage.rotate(
        images, angle, axes=(2, 1), reshape=False, order=1, cval=0.0
    )
    return np.clip(out, 0.0, 1.0).astype(np.float32)


def balanced_subset(labels: np.ndarray, per_class: int, rng: np.random.Generator) -> np.ndarray:
    """Indices of a class-balanced subset, order shuffled deterministically."""
    picks = []
    for digit in range(10):
        candidates = np.flatnonzero(labels == digit)
        if len(candidates) < per_class:
            raise MissingDataError(
                f"need {per_class} images of digit {digit}, corpus has {len(candidates)}"
            )
        picks.append(rng.permutation(candidates)[:per_class])
    chosen = np.concatenate(picks)
    return rng.permutation(chosen)


def stratified_split(
    labels: np.ndarray, eval_per_class: int, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray]:
    """Per-digit train/eval split over positions 0..len(labels)-1."""
    train, evaluation = [], []
    for digit in range(10):
        positions = np.flatnonzero(labels == digit)
        positions = rng.permutation(positions)
        evaluation.append(positions[:eval_per_class])
        train.append(positions[eval_per_class:])
    return (
        np.sort(np.concatenate(train)),
        np.sort(np.concatenate(evaluation)),
    )
