"""Evaluation: permutation-matched accuracy, calibration, selection quality.

Predicted cluster indices carry no inherent class meaning, so accuracy is
measured after finding the bijection between predicted and ground-truth
classes that maximizes agreement (solved as an assignment problem on the
contingency table). Calibration error buckets samples by confidence into
equal-width bins and averages |accuracy - confidence| weighted by bucket
occupancy.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from ruc.errors import EvaluationError, InputShapeError
from ruc.network import ClassifierNet, forward_batch
from ruc.selection import Partition
from ruc.synthdata import PseudoLabeledDataset

__all__ = [
    "AssignmentResult",
    "CalibrationReport",
    "SelectionQuality",
    "confusion_matrix",
    "ece",
    "evaluate_classifier",
    "hungarian_accuracy",
    "selection_quality",
]


@dataclass
class AssignmentResult:
    """Best bijection predicted class -> gt class and its accuracy."""

    mapping: np.ndarray  # (C,) int, mapping[pred] = gt class
    matched: int
    n: int

    @property
    def accuracy(self) -> float:
        return self.matched / self.n


def _check_classes(pred, gt, n_classes):
    pred = np.asarray(pred, dtype=np.int64)
    gt = np.asarray(gt, dtype=np.int64)
    if pred.ndim != 1 or pred.shape != gt.shape:
        raise InputShapeError("pred and gt must be equal-length 1-d arrays")
    if n_classes < 1:
        raise EvaluationError(f"n_classes must be >= 1, got {n_classes}")
    if pred.size and (
        pred.min() < 0 or pred.max() >= n_classes or gt.min() < 0 or gt.max() >= n_classes
    ):
        raise EvaluationError("class indices out of range")
    return pred, gt


def hungarian_accuracy(pred, gt, n_classes: int) -> AssignmentResult:
    """Accuracy under the agreement-maximizing class bijection."""
    pred, gt = _check_classes(pred, gt, n_classes)
    if pred.size == 0:
        raise EvaluationError("accuracy undefined for zero samples")
    table = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(table, (pred, gt), 1)
    rows, cols = linear_sum_assignment(table, maximize=True)
    mapping = np.empty(n_classes, dtype=np.int64)
    mapping[rows] = cols
    return AssignmentResult(
        mapping=mapping, matched=int(table[rows, cols].sum()), n=int(pred.size)
    )


@dataclass
class CalibrationReport:
    n_bins: int
    counts: np.ndarray  # (n_bins,) int
    mean_confidence: np.ndarray  # (n_bins,) 0 where empty
    accuracy: np.ndarray  # (n_bins,) 0 where empty
    ece: float


def ece(confidences, correct, n_bins: int = 15) -> CalibrationReport:
    """Expected calibration error over equal-width confidence buckets.

    Bucket m covers ((m-1)/M, m/M]; a confidence of exactly 0 lands in the
    first bucket. Empty buckets contribute nothing.
    """
    conf = np.asarray(confidences, dtype=np.float64)
    corr = np.asarray(correct, dtype=bool)
    if conf.ndim != 1 or conf.shape != corr.shape:
        raise InputShapeError("confidences and correct must be equal-length 1-d")
    if conf.size == 0:
        raise EvaluationError("calibration undefined for zero samples")
    if n_bins < 1:
        raise EvaluationError(f"n_bins must be >= 1, got {n_bins}")
    if conf.min() < 0 or conf.max() > 1:
        raise EvaluationError("confidences must lie in [0, 1]")
    edges = np.arange(1, n_bins) / n_bins
    idx = np.digitize(conf, edges, right=True)
    counts = np.bincount(idx, minlength=n_bins)
    mean_conf = np.zeros(n_bins)
    acc = np.zeros(n_bins)
    filled = counts > 0
    sums_conf = np.bincount(idx, weights=conf, minlength=n_bins)
    sums_corr = np.bincount(idx, weights=corr.astype(np.float64), minlength=n_bins)
    mean_conf[filled] = sums_conf[filled] / counts[filled]
    acc[filled] = sums_corr[filled] / counts[filled]
    value = float((counts / conf.size * np.abs(acc - mean_conf)).sum())
    return CalibrationReport(
        n_bins=n_bins, counts=counts, mean_confidence=mean_conf, accuracy=acc, ece=value
    )


@dataclass
class SelectionQuality:
    """Precision/recall/F1 of a clean-sample partition against gt.

    A true positive is a clean sample whose kept label argmax equals gt.
    Recall divides by the number of correctly pseudo-labeled samples in the
    whole dataset, i.e. the best any selector could keep. ``degenerate``
    flags zero denominators (the corresponding scores are reported as 0).
    """

    precision: float
    recall: float
    f1: float
    degenerate: bool


def selection_quality(
    partition: Partition, dataset: PseudoLabeledDataset
) -> SelectionQuality:
    if dataset.pseudo is None:
        raise EvaluationError("dataset has no pseudo-labels")
    degenerate = False
    clean_rows = dataset.rows_of(partition.clean_ids)
    if partition.clean_ids.size:
        kept = np.argmax(partition.clean_labels, axis=1)
        tp = int((kept == dataset.gt[clean_rows]).sum())
        precision = tp / partition.clean_ids.size
    else:
        tp, precision, degenerate = 0, 0.0, True
    n_correct = int((np.argmax(dataset.pseudo, axis=1) == dataset.gt).sum())
    if n_correct:
        recall = tp / n_correct
    else:
        recall, degenerate = 0.0, True
    if precision + recall > 0:
        f1 = 2 * precision * recall / (precision + recall)
    else:
        f1, degenerate = 0.0, True
    return SelectionQuality(precision, recall, f1, degenerate)


def confusion_matrix(pred, gt, n_classes: int, mapping=None) -> np.ndarray:
    """Counts with predicted class as row, gt class as column. ``mapping``
    (as produced by :func:`hungarian_accuracy`) relabels predictions first."""
    pred, gt = _check_classes(pred, gt, n_classes)
    if mapping is not None:
        pred = np.asarray(mapping, dtype=np.int64)[pred]
    table = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(table, (pred, gt), 1)
    return table


def evaluate_classifier(
    net: ClassifierNet, dataset: PseudoLabeledDataset, n_bins: int = 15
) -> tuple[AssignmentResult, CalibrationReport, np.ndarray]:
    """Assignment-matched accuracy, calibration and aligned confusion table."""
    probs = forward_batch(net, dataset.x)
    pred = np.argmax(probs, axis=1)
    assignment = hungarian_accuracy(pred, dataset.gt, dataset.n_classes)
    correct = assignment.mapping[pred] == dataset.gt
    calibration = ece(probs.max(axis=1), correct, n_bins)
    table = confusion_matrix(pred, dataset.gt, dataset.n_classes, assignment.mapping)
    return assignment, calibration, table
