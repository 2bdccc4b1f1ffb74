"""Volume recovery, regression metrics, mean baselines, and report export.

Metric conventions: MAPE is reported in percent; Pearson r falls back to 0
when either side has zero variance (so a constant predictor scores r = 0);
R-squared is 1 - SSres/SStot with SStot taken over the ground truth, 1.0 for
an exact predictor even on constant truth.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, asdict
from pathlib import Path

import numpy as np

from .corpus import ItemRecord, Manifest
from .scalereg import MIN_RECON_VOLUME_ML


@dataclass
class Prediction:
    item_id: str
    v_scale_hat: float
    est_volume_ml: float
    m_views_used: int

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class MetricsReport:
    method: str
    dataset: str
    n: int
    mae_ml: float
    mape_pct: float
    pearson_r: float
    r2: float
    cosine: float

    def to_dict(self) -> dict:
        return asdict(self)


def volume_from_scale(v_scale_hat: float, recon_volume_ml: float) -> float:
    """Estimated real volume: predicted scale times |reconstruction volume|."""
    if abs(recon_volume_ml) < MIN_RECON_VOLUME_ML:
        raise ValueError(
            f"reconstruction volume {recon_volume_ml} is degenerate"
        )
    return v_scale_hat * abs(recon_volume_ml)


def _check_pair(est, gt) -> tuple[np.ndarray, np.ndarray]:
    est = np.asarray(est, dtype=np.float64)
    gt = np.asarray(gt, dtype=np.float64)
    if est.shape != gt.shape or est.ndim != 1 or len(est) < 1:
        raise ValueError(
            f"est and gt must be equal-length 1-D vectors, got {est.shape} vs {gt.shape}"
        )
    return est, gt


def mae(est, gt) -> float:
    est, gt = _check_pair(est, gt)
    return float(np.mean(np.abs(est - gt)))


def mape(est, gt) -> float:
    """Mean absolute percentage error, in percent; gt must be positive."""
    est, gt = _check_pair(est, gt)
    if (gt <= 0).any():
        raise ValueError("MAPE requires strictly positive ground truth")
    return float(100.0 * np.mean(np.abs(est - gt) / gt))


def pearson(est, gt) -> float:
    est, gt = _check_pair(est, gt)
    de = est - est.mean()
    dg = gt - gt.mean()
    denom = np.sqrt((de * de).sum() * (dg * dg).sum())
    if denom == 0:
        return 0.0
    return float((de * dg).sum() / denom)


def r_squared(est, gt) -> float:
    est, gt = _check_pair(est, gt)
    ss_res = float(((gt - est) ** 2).sum())
    ss_tot = float(((gt - gt.mean()) ** 2).sum())
    if ss_res == 0.0:
        return 1.0
    if ss_tot == 0.0:
        return 0.0
    return 1.0 - ss_res / ss_tot


def cosine(est, gt) -> float:
    est, gt = _check_pair(est, gt)
    ne = float(np.linalg.norm(est))
    ng = float(np.linalg.norm(gt))
    if ne == 0 or ng == 0:
        raise ValueError("cosine similarity requires nonzero vectors")
    return float(est @ gt / (ne * ng))


# ---------------------------------------------------------------------------
# baselines
# ---------------------------------------------------------------------------


class DatasetMeanPredictor:
    """Predicts the training set's mean volume for every item."""

    method = "dataset-mean"

    def __init__(self, train_volumes_ml):
        volumes = np.asarray(list(train_volumes_ml), dtype=np.float64)
        if len(volumes) == 0:
            raise ValueError("baseline needs a non-empty training set")
        self.mean_ml = float(volumes.mean())

    def volume_for(self, item: ItemRecord) -> float:
        return self.mean_ml


class CategoryMeanPredictor:
    """Predicts each category's mean training volume; unseen categories fall
    back to the dataset mean (with a warning)."""

    method = "category-mean"

    def __init__(self, train_items: list[ItemRecord]):
        if not train_items:
            raise ValueError("baseline needs a non-empty training set")
        by_cat: dict[str, list[float]] = {}
        for item in train_items:
            by_cat.setdefault(item.category, []).append(item.gt_volume_ml)
        self.category_means = {c: float(np.mean(v)) for c, v in by_cat.items()}
        self.dataset_mean = float(
            np.mean([it.gt_volume_ml for it in train_items])
        )

    def volume_for(self, item: ItemRecord) -> float:
        known = self.category_means.get(item.category)
        if known is None:
            warnings.warn(
                f"category {item.category!r} unseen in training; "
                "falling back to the dataset mean",
                stacklevel=2,
            )
            return self.dataset_mean
        return known


def baseline_mean(train_volumes_ml) -> DatasetMeanPredictor:
    return DatasetMeanPredictor(train_volumes_ml)


def baseline_category_mean(train_items: list[ItemRecord]) -> CategoryMeanPredictor:
    return CategoryMeanPredictor(train_items)


def baseline_predictions(
    manifest: Manifest, test_ids: list[str], predictor
) -> list[Prediction]:
    """Materialize a baseline as Prediction records over the test ids."""
    out = []
    for item_id in test_ids:
        item = manifest.item(item_id)
        est = predictor.volume_for(item)
        out.append(
            Prediction(
                item_id=item_id,
                v_scale_hat=est / abs(item.recon_volume_ml),
                est_volume_ml=est,
                m_views_used=0,
            )
        )
    return out


# ---------------------------------------------------------------------------
# reports
# ---------------------------------------------------------------------------


def evaluate(
    predictions: list[Prediction],
    manifest: Manifest,
    test_ids: list[str],
    method: str = "realscale",
) -> MetricsReport:
    by_id = {p.item_id: p for p in predictions}
    missing = [i for i in test_ids if i not in by_id]
    if missing:
        raise ValueError(f"missing predictions for ids: {missing}")
    if not test_ids:
        raise ValueError("no test ids to evaluate")
    est = np.array([by_id[i].est_volume_ml for i in test_ids])
    gt = np.array([manifest.item(i).gt_volume_ml for i in test_ids])
    return MetricsReport(
        method=method,
        dataset=manifest.dataset_name,
        n=len(test_ids),
        mae_ml=mae(est, gt),
        mape_pct=mape(est, gt),
        pearson_r=pearson(est, gt),
        r2=r_squared(est, gt),
        cosine=cosine(est, gt),
    )


def save_report(report: MetricsReport, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(report.to_dict(), fh, indent=2)
        fh.write("\n")


def save_predictions(predictions: list[Prediction], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump([p.to_dict() for p in predictions], fh, indent=2)
        fh.write("\n")


def load_predictions(path: str | Path) -> list[Prediction]:
    with open(path, "r", encoding="utf-8") as fh:
        records = json.load(fh)
    return [
        Prediction(
            item_id=str(r["item_id"]),
            v_scale_hat=float(r["v_scale_hat"]),
            est_volume_ml=float(r["est_volume_ml"]),
            m_views_used=int(r["m_views_used"]),
        )
        for r in records
    ]


def fit_line(gt, est) -> tuple[float, float]:
    """Least-squares slope/intercept of est against gt (slope 0 on flat gt)."""
    est, gt = _check_pair(est, gt)
    dg = gt - gt.mean()
    var = float((dg * dg).sum())
    if var == 0.0:
        return 0.0, float(est.mean())
    slope = float((dg * (est - est.mean())).sum() / var)
    return slope, float(est.mean() - slope * gt.mean())


def export_scatter(
    predictions: list[Prediction], manifest: Manifest, path: str | Path
) -> None:
    """CSV of (item, ground truth, estimate) plus the fit line as a footer."""
    if not predictions:
        raise ValueError("no predictions to export")
    gt = np.array([manifest.item(p.item_id).gt_volume_ml for p in predictions])
    est = np.array([p.est_volume_ml for p in predictions])
    slope, intercept = fit_line(gt, est)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("item_id,gt_ml,est_ml\n")
        for p, g, e in zip(predictions, gt, est):
            fh.write(f"{p.item_id},{g!r},{e!r}\n")
        fh.write(f"# fit: slope={slope!r} intercept={intercept!r}\n")
