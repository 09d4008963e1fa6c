"""
Experimental protocol: k-fold splits, holdout grid search, repeated
cross-validation, the binary-relevance comparison and parameter sweeps.

Every fit sees its fold's labels masked: rows are ordered
[training fold, test fold, unlabeled rows] and only the training prefix
carries labels.
"""
import itertools
import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Dict, List, Literal, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, NonNegativeFloat, PositiveInt, field_validator
from scipy import stats

from core.errors import InvalidConfig, InvalidFoldCount, LatentLabelError
from core.models import LabelMatrix, ModalityKind, MultiModalView
from core.settings import worker_count
from app import baseline
from app.metrics import EvalReport, LabelConfusion, evaluate, hamming_loss, nan_if_none
from app.optim import SolverConfig
from app.solver import fit, predict_many, predict_transductive

logger = logging.getLogger(__name__)

PAPER_REG_VALUES = [1.0, 0.5, 0.3, 0.1, 0.05, 0.01, 0.005, 0.001, 5e-4, 1e-4, 5e-5, 1e-5, 1e-6, 1e-8, 1e-10]
PAPER_K_VALUES = list(range(10, 101, 10))

ModelName = Literal["latent", "binary_relevance"]
FitHook = Callable[[MultiModalView, LabelMatrix], None]
Seed = Union[int, Sequence[int]]


# ============================
# TYPES
# ============================
class Hyperparameters(BaseModel):
    model_config = ConfigDict(frozen=True, json_schema_extra={"example": {"alpha": 0.3, "beta": 0.1, "k": 50}})

    alpha: NonNegativeFloat = 0.3
    beta: NonNegativeFloat = 0.1
    k: PositiveInt = 50


class GridSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    alpha_values: List[NonNegativeFloat] = Field(default_factory=lambda: list(PAPER_REG_VALUES))
    beta_values: List[NonNegativeFloat] = Field(default_factory=lambda: list(PAPER_REG_VALUES))
    k_values: List[PositiveInt] = Field(default_factory=lambda: list(PAPER_K_VALUES))

    @field_validator("alpha_values", "beta_values", "k_values")
    @classmethod
    def check_nonempty(cls, value: list) -> list:
        if not value:
            raise ValueError("grid axes must be nonempty")
        return value

    def cells(self) -> List[Hyperparameters]:
        """Alpha-major, then beta, then k."""
        return [
            Hyperparameters(alpha=a, beta=b, k=k)
            for a, b, k in itertools.product(self.alpha_values, self.beta_values, self.k_values)
        ]


class GridCell(BaseModel):
    index: int
    alpha: float
    beta: float
    k: int
    hamming_loss: Optional[float] = None
    error: Optional[str] = None


class GridResult(BaseModel):
    best: Hyperparameters
    cells: List[GridCell]
    seed: int
    holdout_fraction: float
    holdout_ids: List[str]
    # the holdout is drawn independently of any later CV split
    holdout_may_overlap_cv_folds: bool = True


class FoldJob(BaseModel):
    repeat: int
    fold: int
    train_ids: List[int]
    test_ids: List[int]


class FoldResult(BaseModel):
    repeat: int
    fold: int
    n_test: int
    report: EvalReport


class MetricSummary(BaseModel):
    mean: Optional[float] = None
    sd: Optional[float] = None
    n: int = 0


class CVReport(BaseModel):
    model: str
    transductive: bool
    hyper: Hyperparameters
    repeats: int
    folds: int
    seed: int
    fold_results: List[FoldResult]
    summary: Dict[str, MetricSummary]
    confusion_totals: List[LabelConfusion] = Field(default_factory=list)

    def metric_values(self, metric: str) -> Dict[Tuple[int, int], float]:
        out = {}
        for r in self.fold_results:
            out[(r.repeat, r.fold)] = nan_if_none(r.report.to_flat()[metric])
        return out


class TTestResult(BaseModel):
    metric: str
    statistic: Optional[float]
    pvalue: Optional[float]
    n_pairs: int
    mean_difference: Optional[float]


class KSensitivityRow(BaseModel):
    k: int
    alpha: float
    beta: float
    summary: Dict[str, MetricSummary]


class SweepPoint(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    beta: float
    n_positive: int
    labels: np.ndarray


# ============================
# SPLITS
# ============================
def kfold_splits(n: int, folds: int, seed: Seed = 0) -> List[Tuple[np.ndarray, np.ndarray]]:
    """Seeded permutation cut into contiguous folds of at most ceil(n/folds) rows.

    Each fold takes min(ceil(n/folds), remaining - folds_left), so 136 rows in
    10 folds give nine folds of 14 and a last fold of 10.
    """
    if not isinstance(folds, (int, np.integer)) or folds < 2 or folds > n:
        raise InvalidFoldCount(f"folds must be an integer in [2, {n}], got {folds!r}")
    perm = np.random.default_rng(seed).permutation(n)
    cap = -(-n // folds)
    splits = []
    start = 0
    for f in range(folds):
        size = min(cap, n - start - (folds - f - 1))
        test = np.sort(perm[start:start + size])
        start += size
        splits.append((np.setdiff1d(np.arange(n), test), test))
    return splits


def cv_jobs(n: int, folds: int, repeats: int, seed: int = 0) -> List[FoldJob]:
    if repeats < 1:
        raise InvalidConfig(f"repeats must be at least 1, got {repeats!r}")
    jobs = []
    for r in range(repeats):
        for f, (train, test) in enumerate(kfold_splits(n, folds, [seed, r])):
            jobs.append(FoldJob(repeat=r, fold=f, train_ids=train.tolist(), test_ids=test.tolist()))
    return jobs


def holdout_split(n: int, fraction: float = 0.1, seed: int = 0) -> Tuple[np.ndarray, np.ndarray]:
    """(train, holdout) over n labeled rows; the holdout has max(1, round(fraction * n)) rows."""
    if n < 2:
        raise InvalidFoldCount(f"a holdout split needs at least 2 labeled rows, got {n}")
    if not 0.0 < fraction < 1.0:
        raise InvalidConfig(f"holdout fraction must be in (0, 1), got {fraction!r}")
    perm = np.random.default_rng(seed).permutation(n)
    n_hold = min(n - 1, max(1, int(round(fraction * n))))
    return np.sort(perm[n_hold:]), np.sort(perm[:n_hold])


# ============================
# ONE FIT ON ONE SPLIT
# ============================
def _check_inductive(view: MultiModalView) -> None:
    for i, m in enumerate(view.modalities):
        if m.kind == ModalityKind.KERNEL and m.dim != view.n_rows:
            raise InvalidConfig(f"X[{i}]: inductive CV needs kernel columns anchored on the samples")


def fit_and_score(
    view: MultiModalView,
    labels: LabelMatrix,
    train: Sequence[int],
    test: Sequence[int],
    hyper: Hyperparameters,
    config: Optional[SolverConfig] = None,
    transductive: bool = True,
    model: ModelName = "latent",
    on_fit: Optional[FitHook] = None,
    seed: int = 0,
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Fit on the labeled ``train`` rows and return (scores, predicted, truth) for ``test``."""
    train = np.asarray(train, dtype=int)
    test = np.asarray(test, dtype=int)
    truth = labels.values[test]
    names = list(labels.label_names)

    if model == "binary_relevance":
        Y_train = labels.values[train]
        if on_fit is not None:
            on_fit(view.take_rows(train), LabelMatrix(values=Y_train, n_train=len(train), label_names=names))
        X = baseline.raw_features(view)
        fitted = baseline.binary_relevance_fit(X[train], Y_train, seed=seed)
        scores, predicted = baseline.binary_relevance_predict(fitted, X[test])
        return scores, predicted, truth

    if transductive:
        unlabeled = np.arange(labels.n_train, labels.n_rows)
        order = np.concatenate([train, test, unlabeled])
        fit_view = view.take_rows(order)
        fit_labels = LabelMatrix(
            values=labels.values[order], n_train=len(train), n_test=len(order) - len(train), label_names=names
        ).masked()
        if on_fit is not None:
            on_fit(fit_view, fit_labels)
        state, _ = fit(fit_view, fit_labels, hyper.alpha, hyper.beta, hyper.k, config)
        scores, predicted = predict_transductive(state, fit_view)
        rows = slice(len(train), len(train) + len(test))
        return scores[rows], predicted[rows], truth

    _check_inductive(view)
    fit_view = view.select(train, train)
    fit_labels = LabelMatrix(values=labels.values[train], n_train=len(train), label_names=names)
    if on_fit is not None:
        on_fit(fit_view, fit_labels)
    state, _ = fit(fit_view, fit_labels, hyper.alpha, hyper.beta, hyper.k, config)
    test_view = view.select(test, train)
    scores, predicted = predict_many(state, [m.values for m in test_view.modalities])
    return scores, predicted, truth


# ============================
# GRID SEARCH
# ============================
def evaluate_grid_cell(
    view: MultiModalView,
    labels: LabelMatrix,
    index: int,
    hyper: Hyperparameters,
    train: Sequence[int],
    holdout: Sequence[int],
    config: Optional[SolverConfig] = None,
    transductive: bool = True,
) -> GridCell:
    cell = GridCell(index=index, alpha=hyper.alpha, beta=hyper.beta, k=hyper.k)
    try:
        _, predicted, truth = fit_and_score(view, labels, train, holdout, hyper, config, transductive)
        cell.hamming_loss = hamming_loss(predicted, truth)
    except LatentLabelError as e:
        logger.warning(f"⚠️ Grid cell {index} (alpha={hyper.alpha:g}, beta={hyper.beta:g}, k={hyper.k}) failed: {e.detail}")
        cell.error = e.detail
    return cell


def select_best(cells: Sequence[GridCell]) -> Hyperparameters:
    """Lowest holdout Hamming loss; ties go to the earliest cell in grid order."""
    scored = [c for c in cells if c.hamming_loss is not None]
    if not scored:
        first = next((c.error for c in cells if c.error), "no cells")
        raise InvalidConfig(f"every grid cell failed (first error: {first})")
    best = min(scored, key=lambda c: (c.hamming_loss, c.index))
    return Hyperparameters(alpha=best.alpha, beta=best.beta, k=best.k)


def _run_parallel(fn: Callable, items: Sequence, workers: Optional[int]) -> list:
    n_workers = worker_count(workers)
    if n_workers == 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=n_workers) as executor:
        return list(executor.map(fn, items))


def grid_search(
    view: MultiModalView,
    labels: LabelMatrix,
    grid: Optional[GridSpec] = None,
    holdout_fraction: float = 0.1,
    seed: int = 0,
    config: Optional[SolverConfig] = None,
    transductive: bool = True,
    workers: Optional[int] = None,
) -> GridResult:
    """Fit every cell on the 90% split and keep the lowest Hamming loss on the 10% holdout."""
    grid = grid or GridSpec()
    train, holdout = holdout_split(labels.n_train, holdout_fraction, seed)
    cells = list(enumerate(grid.cells()))
    logger.info(f"🔁 Grid search over {len(cells)} cells ({len(train)} train / {len(holdout)} holdout rows)")

    results = _run_parallel(
        lambda item: evaluate_grid_cell(view, labels, item[0], item[1], train, holdout, config, transductive),
        cells,
        workers,
    )
    best = select_best(results)
    logger.info(f"✅ Selected alpha={best.alpha:g}, beta={best.beta:g}, k={best.k}")
    ids = view.ids()
    return GridResult(
        best=best,
        cells=results,
        seed=seed,
        holdout_fraction=holdout_fraction,
        holdout_ids=[ids[i] for i in holdout],
    )


# ============================
# REPEATED CV
# ============================
def run_cv_fold(
    view: MultiModalView,
    labels: LabelMatrix,
    job: FoldJob,
    hyper: Hyperparameters,
    config: Optional[SolverConfig] = None,
    transductive: bool = True,
    model: ModelName = "latent",
    on_fit: Optional[FitHook] = None,
    seed: int = 0,
) -> FoldResult:
    scores, predicted, truth = fit_and_score(
        view, labels, job.train_ids, job.test_ids, hyper, config, transductive, model, on_fit, seed
    )
    report = evaluate(scores, predicted, truth, labels.names())
    return FoldResult(repeat=job.repeat, fold=job.fold, n_test=len(job.test_ids), report=report)


def summarize(fold_results: Sequence[FoldResult]) -> Dict[str, MetricSummary]:
    """Mean and sample sd per metric over all folds; undefined values are skipped."""
    frame = pd.DataFrame([r.report.to_flat() for r in fold_results], columns=list(EvalReport.SCALAR_FIELDS), dtype=float)
    summary = {}
    for name in EvalReport.SCALAR_FIELDS:
        column = frame[name].dropna()
        if column.empty:
            summary[name] = MetricSummary()
            continue
        sd = float(column.std(ddof=1)) if len(column) > 1 else 0.0
        summary[name] = MetricSummary(mean=float(column.mean()), sd=sd, n=int(len(column)))
    return summary


def total_confusion(fold_results: Sequence[FoldResult]) -> List[LabelConfusion]:
    """Per-label counts summed over folds."""
    if not fold_results:
        return []
    totals = []
    for j, first in enumerate(fold_results[0].report.per_label_confusion):
        entries = [r.report.per_label_confusion[j] for r in fold_results]
        totals.append(LabelConfusion(
            label=first.label,
            tp=sum(e.tp for e in entries),
            fp=sum(e.fp for e in entries),
            tn=sum(e.tn for e in entries),
            fn=sum(e.fn for e in entries),
        ))
    return totals


def aggregate_cv(
    fold_results: Sequence[FoldResult],
    hyper: Hyperparameters,
    repeats: int,
    folds: int,
    seed: int,
    transductive: bool = True,
    model: ModelName = "latent",
) -> CVReport:
    ordered = sorted(fold_results, key=lambda r: (r.repeat, r.fold))
    return CVReport(
        model=model,
        transductive=transductive,
        hyper=hyper,
        repeats=repeats,
        folds=folds,
        seed=seed,
        fold_results=ordered,
        summary=summarize(ordered),
        confusion_totals=total_confusion(ordered),
    )


def repeated_cv(
    view: MultiModalView,
    labels: LabelMatrix,
    hyper: Hyperparameters,
    repeats: int = 1,
    folds: int = 10,
    seed: int = 0,
    config: Optional[SolverConfig] = None,
    transductive: bool = True,
    model: ModelName = "latent",
    on_fit: Optional[FitHook] = None,
    workers: Optional[int] = None,
) -> CVReport:
    """Refit with each fold's labels masked and evaluate on that fold, for every repeat."""
    jobs = cv_jobs(labels.n_train, folds, repeats, seed)
    logger.info(f"🔁 {model} CV: {repeats} x {folds}-fold ({len(jobs)} fits, transductive={transductive})")
    results = _run_parallel(
        lambda job: run_cv_fold(view, labels, job, hyper, config, transductive, model, on_fit, seed),
        jobs,
        workers,
    )
    report = aggregate_cv(results, hyper, repeats, folds, seed, transductive, model)
    hl = report.summary["hamming_loss"]
    if hl.mean is not None:
        logger.info(f"✅ {model} CV Hamming loss {hl.mean:.4f} ± {hl.sd:.4f}")
    return report


def paired_t_test(report_a: CVReport, report_b: CVReport, metric: str = "hamming_loss") -> TTestResult:
    """Paired t-test over folds present (and defined) in both reports."""
    a, b = report_a.metric_values(metric), report_b.metric_values(metric)
    keys = sorted(k for k in a.keys() & b.keys() if np.isfinite(a[k]) and np.isfinite(b[k]))
    if len(keys) < 2:
        return TTestResult(metric=metric, statistic=None, pvalue=None, n_pairs=len(keys), mean_difference=None)
    xa = np.array([a[k] for k in keys])
    xb = np.array([b[k] for k in keys])
    result = stats.ttest_rel(xa, xb)
    statistic, pvalue = float(result.statistic), float(result.pvalue)
    return TTestResult(
        metric=metric,
        statistic=statistic if np.isfinite(statistic) else None,
        pvalue=pvalue if np.isfinite(pvalue) else None,
        n_pairs=len(keys),
        mean_difference=float(np.mean(xa - xb)),
    )


# ============================
# SWEEPS
# ============================
def k_sensitivity(
    view: MultiModalView,
    labels: LabelMatrix,
    grid: Optional[GridSpec] = None,
    repeats: int = 1,
    folds: int = 10,
    seed: int = 0,
    config: Optional[SolverConfig] = None,
    workers: Optional[int] = None,
) -> List[KSensitivityRow]:
    """For every k: re-select (alpha, beta) on the holdout, then cross-validate."""
    grid = grid or GridSpec()
    rows = []
    for k in grid.k_values:
        sub = GridSpec(alpha_values=grid.alpha_values, beta_values=grid.beta_values, k_values=[k])
        best = grid_search(view, labels, sub, seed=seed, config=config, workers=workers).best
        report = repeated_cv(view, labels, best, repeats, folds, seed, config, workers=workers)
        rows.append(KSensitivityRow(k=k, alpha=best.alpha, beta=best.beta, summary=report.summary))
    return rows


def beta_sparsity_sweep(
    view: MultiModalView,
    labels: LabelMatrix,
    alpha: float,
    k: int,
    betas: Sequence[float],
    config: Optional[SolverConfig] = None,
) -> List[SweepPoint]:
    """One transductive fit per beta; predicted label matrices for every row."""
    points = []
    for beta in betas:
        state, _ = fit(view, labels, alpha, float(beta), k, config)
        _, predicted = predict_transductive(state, view)
        points.append(SweepPoint(beta=float(beta), n_positive=int(predicted.sum()), labels=predicted))
        logger.info(f"✅ beta={beta:g}: {int(predicted.sum())} predicted positives")
    return points
