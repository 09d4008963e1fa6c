"""
Multi-label evaluation.

Conventions (fixed so numbers are reproducible):
  - one-error: top label is the lowest index among tied maxima
  - coverage: ranks are 1-based by descending score, a true label tied with
    others takes the worst rank; reported raw and divided by c
  - ranking loss: a (true, false) pair with equal scores counts 1/2
  - samples for which a ranking metric is undefined are skipped and counted
"""
import logging
import math
from typing import Any, ClassVar, Dict, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from sklearn.metrics import hamming_loss as sk_hamming_loss
from sklearn.metrics import multilabel_confusion_matrix

from core.errors import DimensionMismatch, NoEvaluableSamples

logger = logging.getLogger(__name__)


class LabelConfusion(BaseModel):
    model_config = ConfigDict(frozen=True)

    label: str
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def sensitivity(self) -> Optional[float]:
        return self.tp / (self.tp + self.fn) if self.tp + self.fn else None

    @property
    def specificity(self) -> Optional[float]:
        return self.tn / (self.tn + self.fp) if self.tn + self.fp else None

    @property
    def accuracy(self) -> Optional[float]:
        total = self.tp + self.fp + self.tn + self.fn
        return (self.tp + self.tn) / total if total else None


class EvalReport(BaseModel):
    """All metrics for one evaluation block; undefined values are None."""

    model_config = ConfigDict(frozen=True)

    hamming_loss: float
    one_error: Optional[float] = None
    coverage_raw: Optional[float] = None
    coverage_normalized: Optional[float] = None
    ranking_loss: Optional[float] = None
    mean_sensitivity: Optional[float] = None
    mean_specificity: Optional[float] = None
    mean_accuracy: Optional[float] = None
    per_label_confusion: List[LabelConfusion] = Field(default_factory=list)
    n_samples: int = 0
    skipped_one_error: int = 0
    skipped_ranking_loss: int = 0

    SCALAR_FIELDS: ClassVar[Tuple[str, ...]] = (
        "hamming_loss",
        "one_error",
        "coverage_normalized",
        "coverage_raw",
        "ranking_loss",
        "mean_sensitivity",
        "mean_specificity",
        "mean_accuracy",
    )

    def to_flat(self) -> Dict[str, Any]:
        """Scalar metrics only, for tables and CSV summaries."""
        return {name: getattr(self, name) for name in self.SCALAR_FIELDS}


# -------------------------------------------------------------------
# Helpers
# -------------------------------------------------------------------

def _pair(a: np.ndarray, b: np.ndarray, names: Tuple[str, str]) -> Tuple[np.ndarray, np.ndarray]:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.ndim == 1:
        a = a.reshape(1, -1)
    if b.ndim == 1:
        b = b.reshape(1, -1)
    if a.shape != b.shape or a.ndim != 2:
        raise DimensionMismatch(names[0], detail=f"shape {a.shape} does not match {names[1]} shape {b.shape}")
    return a, b


def _rows_with_truth(truth: np.ndarray) -> np.ndarray:
    return truth.sum(axis=1) > 0


# -------------------------------------------------------------------
# Metrics
# -------------------------------------------------------------------

def hamming_loss(pred: np.ndarray, truth: np.ndarray) -> float:
    pred, truth = _pair(pred, truth, ("pred", "truth"))
    if pred.size == 0:
        raise NoEvaluableSamples("hamming loss needs at least one sample and one label")
    return float(sk_hamming_loss(truth.astype(int), pred.astype(int)))


def one_error(scores: np.ndarray, truth: np.ndarray) -> float:
    scores, truth = _pair(scores, truth, ("scores", "truth"))
    rows = _rows_with_truth(truth)
    if not rows.any():
        raise NoEvaluableSamples("one-error: no sample has a nonempty true label set")
    top = np.argmax(scores[rows], axis=1)
    hits = truth[rows][np.arange(top.size), top]
    return float(np.mean(hits == 0))


def coverage(scores: np.ndarray, truth: np.ndarray) -> Tuple[float, float]:
    """(raw, raw / c): mean pessimistic rank of the worst true label, minus one."""
    scores, truth = _pair(scores, truth, ("scores", "truth"))
    rows = _rows_with_truth(truth)
    if not rows.any():
        raise NoEvaluableSamples("coverage: no sample has a nonempty true label set")
    S, T = scores[rows], truth[rows] > 0
    worst = np.where(T, S, np.inf).min(axis=1)
    ranks = np.sum(S >= worst[:, None], axis=1)
    raw = float(np.mean(ranks - 1))
    return raw, raw / scores.shape[1]


def ranking_loss(scores: np.ndarray, truth: np.ndarray) -> float:
    scores, truth = _pair(scores, truth, ("scores", "truth"))
    losses = []
    for s_row, t_row in zip(scores, truth > 0):
        pos, neg = s_row[t_row], s_row[~t_row]
        if pos.size == 0 or neg.size == 0:
            continue
        diff = pos[:, None] - neg[None, :]
        bad = np.sum(diff < 0) + 0.5 * np.sum(diff == 0)
        losses.append(bad / (pos.size * neg.size))
    if not losses:
        raise NoEvaluableSamples("ranking loss: no sample has both a true and a false label")
    return float(np.mean(losses))


def label_confusion(
    pred: np.ndarray, truth: np.ndarray, label_names: Optional[Sequence[str]] = None
) -> Tuple[List[LabelConfusion], Optional[float], Optional[float], Optional[float]]:
    """Per-label counts and (mean sensitivity, mean specificity, mean accuracy) over defined labels."""
    pred, truth = _pair(pred, truth, ("pred", "truth"))
    c = truth.shape[1]
    names = list(label_names) if label_names else [f"label_{j}" for j in range(c)]
    if c == 1:
        # a single column is read as binary targets, not an indicator matrix
        mcm = multilabel_confusion_matrix(truth.ravel().astype(int), pred.ravel().astype(int), labels=[1])
    else:
        mcm = multilabel_confusion_matrix(truth.astype(int), pred.astype(int))
    confusion = [
        LabelConfusion(label=names[j], tn=int(m[0, 0]), fp=int(m[0, 1]), fn=int(m[1, 0]), tp=int(m[1, 1]))
        for j, m in enumerate(mcm)
    ]

    def mean_of(values: List[Optional[float]]) -> Optional[float]:
        defined = [v for v in values if v is not None]
        return float(np.mean(defined)) if defined else None

    return (
        confusion,
        mean_of([lc.sensitivity for lc in confusion]),
        mean_of([lc.specificity for lc in confusion]),
        mean_of([lc.accuracy for lc in confusion]),
    )


def evaluate(
    scores: np.ndarray,
    pred: np.ndarray,
    truth: np.ndarray,
    label_names: Optional[Sequence[str]] = None,
) -> EvalReport:
    """Every metric on one block; ranking metrics that are undefined come back as None."""
    scores, truth = _pair(scores, truth, ("scores", "truth"))
    pred, _ = _pair(pred, truth, ("pred", "truth"))
    n = truth.shape[0]
    positives = truth.sum(axis=1)
    c = truth.shape[1]

    def optional(metric, *args):
        try:
            return metric(*args)
        except NoEvaluableSamples as e:
            logger.debug(f"⚠️ {e.detail}")
            return None

    cov = optional(coverage, scores, truth)
    confusion, sens, spec, acc = label_confusion(pred, truth, label_names)
    return EvalReport(
        hamming_loss=hamming_loss(pred, truth),
        one_error=optional(one_error, scores, truth),
        coverage_raw=cov[0] if cov else None,
        coverage_normalized=cov[1] if cov else None,
        ranking_loss=optional(ranking_loss, scores, truth),
        mean_sensitivity=sens,
        mean_specificity=spec,
        mean_accuracy=acc,
        per_label_confusion=confusion,
        n_samples=n,
        skipped_one_error=int(np.sum(positives == 0)),
        skipped_ranking_loss=int(np.sum((positives == 0) | (positives == c))),
    )


def nan_if_none(value: Optional[float]) -> float:
    return math.nan if value is None else float(value)
