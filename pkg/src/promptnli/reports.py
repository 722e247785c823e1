"""CSV emission for evaluation reports and training logs."""

from __future__ import annotations

import csv
from pathlib import Path

from .training import EvalReport, TrainingLog


def _fmt(value: float) -> str:
    return f"{value:.6f}"


def write_report(
    results: dict[str, tuple[EvalReport, list[EvalReport]]], path: str | Path
) -> Path:
    """One row per configuration with language columns plus AVG; per-seed
    details go to a sibling ``*_seeds.csv`` file."""
    if not results:
        raise ValueError("need at least one report")
    path = Path(path)
    first_mean = next(iter(results.values()))[0]
    langs = list(first_mean.per_language)
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["config", *langs, "AVG"])
        for name, (mean, _) in results.items():
            writer.writerow(
                [name, *(_fmt(mean.per_language[l]) for l in langs), _fmt(mean.average)]
            )
    detail_path = path.with_name(path.stem + "_seeds" + path.suffix)
    with detail_path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["config", "seed", *langs, "AVG"])
        for name, (_, reports) in results.items():
            for rep in reports:
                writer.writerow(
                    [
                        name,
                        rep.seed,
                        *(_fmt(rep.per_language[l]) for l in langs),
                        _fmt(rep.average),
                    ]
                )
    return detail_path


def write_training_log(log: TrainingLog, path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["step", "L_O", "L_A", "L_KLD", "total"])
        for rec in log.steps:
            writer.writerow(
                [rec.step, _fmt(rec.loss_orig), _fmt(rec.loss_aug),
                 _fmt(rec.loss_kld), _fmt(rec.total)]
            )
        fh.write("\n")
        writer.writerow(["epoch", "dev_accuracy"])
        for epoch, acc in enumerate(log.dev_accuracy):
            writer.writerow([epoch, _fmt(acc)])
        writer.writerow(["selected_epoch", log.selected_epoch])
