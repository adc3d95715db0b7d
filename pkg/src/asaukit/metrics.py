"""Classification and segmentation metrics over confusion counts and masks.

Conventions, fixed once for the whole toolkit:
  - per-class precision/recall with an empty denominator (0/0) count as 0,
  - both-empty mask pairs score 1.0 for dice, IoU, precision, and recall,
  - the multiclass Matthews coefficient uses the covariance form and returns
    0 when either variance factor vanishes.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np


@dataclass
class ConfusionMatrix:
    """counts[i][j] = samples of true class i predicted as class j."""

    counts: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.counts, dtype=np.int64)
        if c.ndim != 2 or c.shape[0] != c.shape[1]:
            raise ValueError(f"counts must be square, got shape {c.shape}")
        if (c < 0).any():
            raise ValueError("counts must be nonnegative")
        if c.sum() == 0:
            raise ValueError("confusion matrix must contain at least one sample")
        self.counts = c

    @property
    def k(self) -> int:
        return self.counts.shape[0]

    @property
    def total(self) -> int:
        return int(self.counts.sum())


def confusion_from_predictions(true_labels, predicted_labels, k: int) -> ConfusionMatrix:
    t = np.asarray(true_labels, dtype=np.int64)
    p = np.asarray(predicted_labels, dtype=np.int64)
    if t.shape != p.shape or t.ndim != 1:
        raise ValueError("label lists must be 1-D and of equal length")
    if t.size == 0:
        raise ValueError("label lists must be nonempty")
    for name, arr in (("true", t), ("predicted", p)):
        if arr.min() < 0 or arr.max() >= k:
            raise ValueError(f"{name} labels must lie in [0, {k})")
    counts = np.zeros((k, k), dtype=np.int64)
    np.add.at(counts, (t, p), 1)
    return ConfusionMatrix(counts)


def _per_class(cm: ConfusionMatrix):
    c = cm.counts
    tp = np.diag(c).astype(np.float64)
    fp = c.sum(axis=0) - tp
    fn = c.sum(axis=1) - tp
    return tp, fp, fn


def _safe_div(num, den):
    num = np.asarray(num, dtype=np.float64)
    den = np.asarray(den, dtype=np.float64)
    return np.where(den > 0, num / np.where(den > 0, den, 1.0), 0.0)


def macro_prf(cm: ConfusionMatrix) -> tuple[float, float, float]:
    """Unweighted mean of per-class precision/recall/F1 (0/0 counts as 0)."""
    tp, fp, fn = _per_class(cm)
    prec = _safe_div(tp, tp + fp)
    rec = _safe_div(tp, tp + fn)
    f1 = _safe_div(2.0 * prec * rec, prec + rec)
    return float(prec.mean()), float(rec.mean()), float(f1.mean())


def micro_prf(cm: ConfusionMatrix) -> tuple[float, float, float]:
    """Pooled TP/FP/FN; equals accuracy for single-label multiclass data."""
    tp, fp, fn = _per_class(cm)
    prec = float(_safe_div(tp.sum(), tp.sum() + fp.sum()))
    rec = float(_safe_div(tp.sum(), tp.sum() + fn.sum()))
    # pooled FP and FN totals coincide on a square matrix, so keep the
    # identity micro P = R = F1 exact instead of routing through 2pr/(p+r)
    f1 = prec if prec == rec else float(_safe_div(2.0 * prec * rec, prec + rec))
    return prec, rec, f1


def accuracy(cm: ConfusionMatrix) -> float:
    return float(np.trace(cm.counts)) / cm.total


def mcc_multiclass(cm: ConfusionMatrix) -> float:
    """Matthews coefficient, covariance form.

    (c*s - sum_k p_k t_k) / sqrt((s^2 - sum p_k^2)(s^2 - sum t_k^2)) with
    c = trace, s = total, p_k = column sums, t_k = row sums.  Integer
    arithmetic, so no overflow for any realistic count matrix.
    """
    counts = cm.counts
    t_k = [int(v) for v in counts.sum(axis=1)]
    if sum(1 for v in t_k if v > 0) < 2:
        warnings.warn("MCC of a single-class ground truth is defined as 0", stacklevel=2)
        return 0.0
    p_k = [int(v) for v in counts.sum(axis=0)]
    c = int(np.trace(counts))
    s = cm.total
    num = c * s - sum(p * t for p, t in zip(p_k, t_k))
    var_p = s * s - sum(p * p for p in p_k)
    var_t = s * s - sum(t * t for t in t_k)
    if var_p == 0 or var_t == 0:
        return 0.0
    # one sqrt of the exact integer product: a perfect predictor, where
    # num == var_p == var_t, then scores exactly 1.0
    return num / math.sqrt(var_p * var_t)


# ---------------------------------------------------------------------------
# binary segmentation
# ---------------------------------------------------------------------------


def _mask_pair(pred_mask, true_mask):
    p = np.asarray(pred_mask)
    g = np.asarray(true_mask)
    if p.shape != g.shape:
        raise ValueError(f"mask shape mismatch: {p.shape} vs {g.shape}")
    return p.astype(bool), g.astype(bool)


def dice_binary(pred_mask, true_mask) -> float:
    p, g = _mask_pair(pred_mask, true_mask)
    denom = int(p.sum()) + int(g.sum())
    if denom == 0:
        return 1.0
    return 2.0 * int((p & g).sum()) / denom


def iou_binary(pred_mask, true_mask) -> float:
    p, g = _mask_pair(pred_mask, true_mask)
    union = int((p | g).sum())
    if union == 0:
        return 1.0
    return int((p & g).sum()) / union


def seg_precision_recall(pred_mask, true_mask) -> tuple[float, float]:
    p, g = _mask_pair(pred_mask, true_mask)
    inter = int((p & g).sum())
    np_, ng = int(p.sum()), int(g.sum())
    if np_ == 0 and ng == 0:
        return 1.0, 1.0
    precision = inter / np_ if np_ > 0 else 0.0
    recall = inter / ng if ng > 0 else 0.0
    return precision, recall


def mean_over_cases(values) -> float:
    values = list(values)
    if not values:
        raise ValueError("mean over an empty case list is undefined")
    return float(sum(values) / len(values))


# ---------------------------------------------------------------------------
# flat reports (keys follow the comparison-table column names)
# ---------------------------------------------------------------------------


def classification_report(cm: ConfusionMatrix) -> dict[str, float]:
    map_, mar, maf = macro_prf(cm)
    mip, mir, mif = micro_prf(cm)
    return {
        "precision_macro": map_, "recall_macro": mar, "f1_macro": maf,
        "precision_micro": mip, "recall_micro": mir, "f1_micro": mif,
        "accuracy": accuracy(cm), "mcc": mcc_multiclass(cm),
    }


def segmentation_report(dice_list, iou_list, recall_list, precision_list) -> dict[str, float]:
    return {
        "mdsc": mean_over_cases(dice_list),
        "miou": mean_over_cases(iou_list),
        "recall": mean_over_cases(recall_list),
        "precision": mean_over_cases(precision_list),
    }
