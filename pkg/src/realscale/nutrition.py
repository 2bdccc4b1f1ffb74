"""Volume-to-energy conversion through per-category kcal/mL factors.

A density table folds food density and energy density into one kcal-per-mL
number per category. The bundled sample table covers a handful of common
foods and is illustrative only -- swap in your own table for real analyses.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .corpus import Manifest
from .evaluation import (
    MetricsReport,
    Prediction,
    cosine,
    mae,
    mape,
    pearson,
    r_squared,
)

FALLBACK_KEY = "_fallback"


@dataclass
class DensityTable:
    entries: dict[str, float]
    fallback_kcal_per_ml: float | None = None

    def __post_init__(self):
        for category, factor in self.entries.items():
            if not (factor > 0):
                raise ValueError(
                    f"density factor for {category!r} must be positive, got {factor}"
                )
        if self.fallback_kcal_per_ml is not None and not (
            self.fallback_kcal_per_ml > 0
        ):
            raise ValueError("fallback factor must be positive")

    def factor_for(self, category: str) -> float:
        known = self.entries.get(category)
        if known is not None:
            return known
        if self.fallback_kcal_per_ml is not None:
            warnings.warn(
                f"no density factor for {category!r}; using fallback "
                f"{self.fallback_kcal_per_ml}",
                stacklevel=2,
            )
            return self.fallback_kcal_per_ml
        raise KeyError(f"no density factor for category {category!r}")


def load_density_table(path: str | Path) -> DensityTable:
    def reject_duplicates(pairs):
        seen = {}
        for key, value in pairs:
            if key in seen:
                raise ValueError(f"duplicate key {key!r} in density table")
            seen[key] = value
        return seen

    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh, object_pairs_hook=reject_duplicates)
    if not isinstance(doc, dict):
        raise ValueError("density table must be a JSON object")
    fallback = doc.pop(FALLBACK_KEY, None)
    entries = {str(k): float(v) for k, v in doc.items()}
    return DensityTable(entries, None if fallback is None else float(fallback))


def save_density_table(table: DensityTable, path: str | Path) -> None:
    doc: dict[str, float] = dict(table.entries)
    if table.fallback_kcal_per_ml is not None:
        doc[FALLBACK_KEY] = table.fallback_kcal_per_ml
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def sample_density_table() -> DensityTable:
    """The illustrative table bundled with the package."""
    text = resources.files("realscale").joinpath("data/sample_density.json").read_text()
    doc = json.loads(text)
    fallback = doc.pop(FALLBACK_KEY, None)
    return DensityTable(
        {str(k): float(v) for k, v in doc.items()},
        None if fallback is None else float(fallback),
    )


def energy(volume_ml: float, category: str, table: DensityTable) -> float:
    """Food energy in kcal for a volume of the given category."""
    if volume_ml < 0:
        raise ValueError(f"volume must be non-negative, got {volume_ml}")
    return volume_ml * table.factor_for(category)


def energy_report(
    predictions: list[Prediction],
    manifest: Manifest,
    table: DensityTable,
    gt_energy_kcal: dict[str, float] | None = None,
    method: str = "realscale",
) -> MetricsReport:
    """Energy-error metrics over a prediction set.

    Ground-truth energies may be supplied per item; otherwise they are
    derived as gt_volume * factor with the same table, in which case the
    per-item factors cancel and energy MAPE equals volume MAPE exactly.
    """
    if not predictions:
        raise ValueError("no predictions to evaluate")
    est_kcal = []
    gt_kcal = []
    for p in predictions:
        item = manifest.item(p.item_id)
        est_kcal.append(energy(max(p.est_volume_ml, 0.0), item.category, table))
        if gt_energy_kcal is not None:
            if p.item_id not in gt_energy_kcal:
                raise ValueError(f"missing ground-truth energy for {p.item_id!r}")
            gt_kcal.append(float(gt_energy_kcal[p.item_id]))
        else:
            gt_kcal.append(energy(item.gt_volume_ml, item.category, table))
    est = np.asarray(est_kcal)
    gt = np.asarray(gt_kcal)
    return MetricsReport(
        method=f"{method}-energy",
        dataset=manifest.dataset_name,
        n=len(predictions),
        mae_ml=mae(est, gt),
        mape_pct=mape(est, gt),
        pearson_r=pearson(est, gt),
        r2=r_squared(est, gt),
        cosine=cosine(est, gt),
    )
