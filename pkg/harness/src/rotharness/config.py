"""Experiment configuration, serialized beside every run's outputs."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

STUDY_ANGLES = (0, 15, 30, 45, 60, 75, 90)


@dataclass
class ExperimentConfig:
    """Knobs for one full experiment run.

    Defaults follow the reference protocol (1k images per digit, 20 epochs,
    AE batch 256, CNN batch 128, labeling batch 10, mix-ins 0/50/100); smaller
    desk-scale values are allowed everywhere.
    """

    angles: tuple[int, ...] = STUDY_ANGLES
    per_digit: int = 1000
    eval_fraction: float = 0.1
    epochs: int = 20
    ae_batch_size: int = 256
    cnn_batch_size: int = 128
    labeling_batch_size: int = 10
    labeling_angles: tuple[int, ...] = (60, 75, 90)
    labeling_mixins: tuple[int, ...] = (0, 50, 100)
    labeling_sample_sizes: tuple[int, ...] = (50, 100, 200, 400)
    finetune_epochs: int = 5
    grid_cells: int = 5
    strength: int = 2
    data_source: str = "mnist"  # "mnist" | "synthetic"
    mnist_dir: str = "mnist"
    seed: int = 0

    def __post_init__(self) -> None:
        bad = [a for a in self.angles if a not in STUDY_ANGLES]
        if bad:
            raise ValueError(f"angles {bad} are not in the studied set {STUDY_ANGLES}")
        if 0 not in self.angles:
            raise ValueError("angle 0 (the non-rotated source domain) is required")
        if self.data_source not in ("mnist", "synthetic"):
            raise ValueError(f"unknown data source {self.data_source!r}")
        bad = [a for a in self.labeling_angles if a not in self.angles]
        if bad:
            raise ValueError(f"labeling angles {bad} are not among the run's angles")

    @property
    def train_per_digit(self) -> int:
        return self.per_digit - self.eval_per_digit

    @property
    def eval_per_digit(self) -> int:
        return max(1, round(self.per_digit * self.eval_fraction))

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(asdict(self), indent=2) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "ExperimentConfig":
        raw = json.loads(Path(path).read_text())
        for key in ("angles", "labeling_angles", "labeling_mixins", "labeling_sample_sizes"):
            if key in raw:
                raw[key] = tuple(raw[key])
        return cls(**raw)
