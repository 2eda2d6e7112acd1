"""Table and figure documents.

Each builder reads only files on disk (predictions, coverage reports,
partitions, selection curves) plus the config, so documents can be
regenerated without retraining. Every document carries the reported
reference results of the full-scale protocol side by side with the observed
values, and a ``bands`` block with the qualitative checks this run is held
to (training is stochastic, so exact reference numbers are not targets).
"""

from __future__ import annotations

import json
from fractions import Fraction
from pathlib import Path

from . import covcli
from .config import ExperimentConfig

# Reported reference results at full scale (1k/digit, 20 epochs).
REFERENCE_TABLE1 = {
    0: {"accuracy": 0.99, "sdcc_0_theta": 0.00, "sdcc_theta_0": 0.00},
    15: {"accuracy": 0.95, "sdcc_0_theta": 0.04, "sdcc_theta_0": 0.07},
    30: {"accuracy": 0.75, "sdcc_0_theta": 0.06, "sdcc_theta_0": 0.05},
    45: {"accuracy": 0.44, "sdcc_0_theta": 0.09, "sdcc_theta_0": 0.10},
    60: {"accuracy": 0.27, "sdcc_0_theta": 0.15, "sdcc_theta_0": 0.07},
    75: {"accuracy": 0.20, "sdcc_0_theta": 0.25, "sdcc_theta_0": 0.07},
    90: {"accuracy": 0.17, "sdcc_0_theta": 0.28, "sdcc_theta_0": 0.09},
}
REFERENCE_TABLE2_STRICT = {
    15: {"covered": (9839, 0.96), "not_covered": (161, 0.81)},
    30: {"covered": (9625, 0.76), "not_covered": (375, 0.51)},
    45: {"covered": (8317, 0.49), "not_covered": (1683, 0.18)},
    60: {"covered": (7874, 0.31), "not_covered": (2126, 0.10)},
    75: {"covered": (7543, 0.24), "not_covered": (2547, 0.09)},
    90: {"covered": (6848, 0.21), "not_covered": (3152, 0.09)},
}
REFERENCE_TABLE3 = {
    "cnn15": {"covered": (28663, 0.75), "not_covered": (1337, 0.30)},
    "mix": {"covered": (29768, 0.85), "not_covered": (232, 0.23)},
}


def _missing(paths: list[Path]) -> list[str]:
    return [str(p) for p in paths if not p.exists()]


def _require(paths: list[Path]) -> None:
    missing = _missing(paths)
    if missing:
        raise FileNotFoundError(
            "missing inputs for table regeneration:\n  " + "\n  ".join(missing)
        )


def _fraction(report: dict) -> Fraction:
    num, den = report["sdcc"]["exact"].split("/")
    return Fraction(int(num), int(den))


def _prediction_accuracy(preds: dict[str, tuple[int, int]], ids=None) -> float:
    pairs = preds.values() if ids is None else [preds[i] for i in ids if i in preds]
    pairs = list(pairs)
    if not pairs:
        return float("nan")
    return sum(1 for t, p in pairs if t == p) / len(pairs)


def build_table1(run_dir: Path, cfg: ExperimentConfig) -> dict:
    """Accuracy of the source-domain classifier per angle, alongside both
    coverage differences."""
    analysis = run_dir / "analysis"
    models = run_dir / "models"
    needed = []
    for angle in cfg.angles:
        needed += [
            models / f"preds_cnn0_a{angle:02d}.csv",
            analysis / f"sdcc_0_{angle:02d}.json",
            analysis / f"sdcc_{angle:02d}_0.json",
        ]
    _require(needed)

    rows = []
    sdcc_fractions = []
    for angle in cfg.angles:
        preds = covcli.read_predictions(models / f"preds_cnn0_a{angle:02d}.csv")
        forward = covcli.read_json(analysis / f"sdcc_0_{angle:02d}.json")
        backward = covcli.read_json(analysis / f"sdcc_{angle:02d}_0.json")
        sdcc_fractions.append(_fraction(forward))
        rows.append({
            "angle": angle,
            "accuracy": round(_prediction_accuracy(preds), 4),
            "sdcc_0_theta": forward["sdcc"]["value"],
            "sdcc_0_theta_exact": forward["sdcc"]["exact"],
            "sdcc_theta_0": backward["sdcc"]["value"],
            "reference": REFERENCE_TABLE1.get(angle),
        })

    accs = [r["accuracy"] for r in rows]
    slack = 0.005  # float ties on small eval sets
    bands = {
        "source_accuracy_at_least_0.97": accs[0] >= 0.97,
        "accuracy_non_increasing_in_angle": all(
            a + slack >= b for a, b in zip(accs, accs[1:])
        ),
        "sdcc_forward_non_decreasing": all(
            a <= b for a, b in zip(sdcc_fractions, sdcc_fractions[1:])
        ),
        "sdcc_identity_is_zero": sdcc_fractions[0] == 0,
    }
    if 90 in cfg.angles:
        bands["accuracy_at_90_at_most_0.30"] = rows[-1]["accuracy"] <= 0.30
    return {"rows": rows, "bands": bands, "all_bands_hold": all(bands.values())}


def _stratum_stats(
    flags: dict[str, bool], preds: dict[str, tuple[int, int]]
) -> dict[str, dict]:
    covered_ids = [i for i, covered in flags.items() if covered]
    not_covered_ids = [i for i, covered in flags.items() if not covered]
    return {
        "covered": {
            "count": len(covered_ids),
            "accuracy": round(_prediction_accuracy(preds, covered_ids), 4),
        },
        "not_covered": {
            "count": len(not_covered_ids),
            "accuracy": round(_prediction_accuracy(preds, not_covered_ids), 4),
        },
    }


def build_table2(run_dir: Path, cfg: ExperimentConfig) -> dict:
    """Classifier accuracy on covered vs not-covered strata, strict and
    relaxed, per rotation angle."""
    analysis = run_dir / "analysis"
    models = run_dir / "models"
    angles = [a for a in cfg.angles if a != 0]
    needed = [models / f"preds_cnn0_a{a:02d}.csv" for a in angles]
    needed += [
        analysis / f"partition_{mode}_a{a:02d}.csv"
        for a in angles
        for mode in ("strict", "relaxed")
    ]
    _require(needed)

    rows = []
    strict_gaps, relaxed_gaps = [], []
    gap_band = True
    for angle in angles:
        preds = covcli.read_predictions(models / f"preds_cnn0_a{angle:02d}.csv")
        entry = {"angle": angle}
        for mode in ("strict", "relaxed"):
            flags = covcli.read_partition_flags(
                analysis / f"partition_{mode}_a{angle:02d}.csv"
            )
            stats = _stratum_stats(flags, preds)
            entry[mode] = stats
            cov, not_cov = stats["covered"]["accuracy"], stats["not_covered"]["accuracy"]
            gap = None
            if stats["not_covered"]["count"] and stats["covered"]["count"] and cov > 0:
                gap = (cov - not_cov) / cov
            entry[f"{mode}_relative_gap"] = round(gap, 4) if gap is not None else None
            if angle >= 30 and gap is not None:
                (strict_gaps if mode == "strict" else relaxed_gaps).append(gap)
                if mode == "strict" and gap < 0.20:
                    gap_band = False
        entry["reference_strict"] = REFERENCE_TABLE2_STRICT.get(angle)
        rows.append(entry)

    bands = {
        "strict_gap_at_least_20pct_for_angles_30_plus": gap_band and bool(strict_gaps),
        "relaxed_gap_smaller_than_strict": (
            bool(strict_gaps)
            and bool(relaxed_gaps)
            and (sum(relaxed_gaps) / len(relaxed_gaps))
            < (sum(strict_gaps) / len(strict_gaps))
        ),
    }
    return {"rows": rows, "bands": bands, "all_bands_hold": all(bands.values())}


def build_table3(run_dir: Path, cfg: ExperimentConfig) -> dict:
    """Single-angle vs mixed-angle training sets evaluated on harder angles."""
    analysis = run_dir / "analysis"
    models = run_dir / "models"
    needed = [
        models / "preds_cnn15_test.csv",
        models / "preds_mix_test.csv",
        models / "preds_cnn15_a15eval.csv",
        models / "preds_mix_a15eval.csv",
        analysis / "partition_cnn15_test.csv",
        analysis / "partition_mix_test.csv",
    ]
    _require(needed)

    rows = {}
    for name in ("cnn15", "mix"):
        preds = covcli.read_predictions(models / f"preds_{name}_test.csv")
        flags = covcli.read_partition_flags(analysis / f"partition_{name}_test.csv")
        stats = _stratum_stats(flags, preds)
        eval15 = covcli.read_predictions(models / f"preds_{name}_a15eval.csv")
        rows[name] = {
            **stats,
            "holdout_accuracy_at_15": round(_prediction_accuracy(eval15), 4),
            "reference": REFERENCE_TABLE3[name],
        }

    nc15 = rows["cnn15"]["not_covered"]["count"]
    nc_mix = rows["mix"]["not_covered"]["count"]
    acc15 = rows["cnn15"]["covered"]["accuracy"]
    acc_mix = rows["mix"]["covered"]["accuracy"]
    fold = (nc15 / nc_mix) if nc_mix else None
    advantage = acc_mix - acc15
    ref_fold = REFERENCE_TABLE3["cnn15"]["not_covered"][0] / REFERENCE_TABLE3["mix"]["not_covered"][0]
    ref_adv = REFERENCE_TABLE3["mix"]["covered"][1] - REFERENCE_TABLE3["cnn15"]["covered"][1]
    bands = {
        "mixed_training_has_fewer_not_covered": nc_mix < nc15,
        "mixed_training_has_higher_covered_accuracy": acc_mix > acc15,
        "not_covered_fold_within_50pct_of_reference": (
            fold is not None and 0.5 * ref_fold <= fold <= 1.5 * ref_fold
        ),
        "covered_advantage_within_50pct_of_reference": (
            0.5 * ref_adv <= advantage <= 1.5 * ref_adv
        ),
    }
    directions = (
        bands["mixed_training_has_fewer_not_covered"]
        and bands["mixed_training_has_higher_covered_accuracy"]
    )
    return {
        "rows": rows,
        "not_covered_fold_ratio": round(fold, 3) if fold is not None else None,
        "covered_accuracy_advantage": round(advantage, 4),
        "bands": bands,
        "directions_hold": directions,
        "all_bands_hold": all(bands.values()),
    }


def build_labeling_doc(run_dir: Path, cfg: ExperimentConfig) -> dict:
    """Fine-tuning curves: random baseline vs strict / relaxed mix-ins."""
    raw_path = run_dir / "analysis" / "labeling_curves_raw.json"
    _require([raw_path])
    raw = json.loads(raw_path.read_text())
    points = [p for p in raw["points"] if "accuracy" in p]

    def curve(angle, mode, mixin):
        return {
            p["size"]: p["accuracy"]
            for p in points
            if p["angle"] == angle and p["mode"] == mode and p["mixin"] == mixin
        }

    angles = sorted({p["angle"] for p in points})
    mixins = [m for m in cfg.labeling_mixins if m > 0]
    strict_ok, relaxed_initial_wins, comparisons = True, 0, 0
    per_angle = []
    for angle in angles:
        baseline = curve(angle, "baseline", 0)
        entry = {"angle": angle, "baseline": baseline, "strict": {}, "relaxed": {}}
        for mixin in mixins:
            entry["strict"][str(mixin)] = curve(angle, "strict", mixin)
            entry["relaxed"][str(mixin)] = curve(angle, "relaxed", mixin)
        per_angle.append(entry)
        # strict mix-ins should never beat the baseline materially
        for mixin in mixins:
            for size, acc in entry["strict"][str(mixin)].items():
                if size in baseline and acc > baseline[size] + 0.02:
                    strict_ok = False
        # relaxed mix-ins should win at the smallest sample size
        if baseline:
            smallest = min(baseline)
            best_relaxed = max(
                (entry["relaxed"][str(m)].get(smallest, float("-inf")) for m in mixins),
                default=float("-inf"),
            )
            comparisons += 1
            if best_relaxed > baseline[smallest]:
                relaxed_initial_wins += 1

    bands = {
        "strict_mixins_do_not_beat_baseline": strict_ok,
        "relaxed_mixins_win_at_smallest_size": (
            comparisons > 0 and relaxed_initial_wins * 2 >= comparisons
        ),
    }
    return {
        "seed": raw["seed"],
        "per_angle": per_angle,
        "bands": bands,
        "all_bands_hold": all(bands.values()),
    }


def aggregate_verdicts(out_dir: Path, seeds: list[int]) -> dict:
    """Across-seed verdicts: a band is accepted when it holds on at least two
    of three seeds (all seeds when fewer than three were run)."""
    threshold = 2 if len(seeds) >= 3 else len(seeds)
    tables = ("table1", "table2", "table3", "labeling")
    verdicts: dict[str, dict] = {}
    for table in tables:
        band_hits: dict[str, int] = {}
        evaluated = 0
        for seed in seeds:
            path = out_dir / f"seed{seed}" / "tables" / f"{table}.json"
            if not path.exists():
                continue
            doc = json.loads(path.read_text())
            if "bands" not in doc:
                continue
            evaluated += 1
            for band, ok in doc["bands"].items():
                band_hits[band] = band_hits.get(band, 0) + (1 if ok else 0)
        verdicts[table] = {
            "seeds_evaluated": evaluated,
            "bands": {
                band: {"holds_on": hits, "accepted": hits >= min(threshold, evaluated)}
                for band, hits in sorted(band_hits.items())
            },
        }
        verdicts[table]["accepted"] = evaluated > 0 and all(
            entry["accepted"] for entry in verdicts[table]["bands"].values()
        )
    return verdicts
