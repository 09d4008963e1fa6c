"""
Grid cells and CV folds as Celery tasks.

Payloads are JSON: the run config document plus the job coordinates. Each
worker rebuilds the (deterministic) view from the config's data paths and
keeps the last few in memory.
"""
import json
import logging
from functools import lru_cache
from typing import Dict, List, Tuple

from celery import group

from core.models import LabelMatrix, MultiModalView
from app.harness import FoldJob, FoldResult, GridCell, Hyperparameters, evaluate_grid_cell, holdout_split, run_cv_fold
from celery_app.celery_app import celery_app
from cli.config import RunConfig

logger = logging.getLogger(__name__)


@lru_cache(maxsize=4)
def _view_for(config_json: str) -> Tuple[MultiModalView, LabelMatrix]:
    return RunConfig.model_validate_json(config_json).load_view()


def _config_json(config_doc: Dict) -> str:
    return json.dumps(config_doc, sort_keys=True)


@celery_app.task(name="grid_cell_task", queue="grid")
def grid_cell_task(config_doc: Dict, index: int) -> Dict:
    """Fit one grid cell on the 90% split; returns the GridCell document."""
    config = RunConfig.model_validate(config_doc)
    view, labels = _view_for(_config_json(config_doc))
    hyper = config.grid.cells()[index]
    train, holdout = holdout_split(labels.n_train, config.holdout_fraction, config.seed)
    cell = evaluate_grid_cell(view, labels, index, hyper, train, holdout, config.solver, config.transductive)
    return cell.model_dump(mode="json")


@celery_app.task(name="cv_fold_task", queue="cv")
def cv_fold_task(config_doc: Dict, job_doc: Dict, hyper_doc: Dict, model: str = "latent") -> Dict:
    """Fit and evaluate one repeat/fold; returns the FoldResult document."""
    config = RunConfig.model_validate(config_doc)
    view, labels = _view_for(_config_json(config_doc))
    result = run_cv_fold(
        view,
        labels,
        FoldJob.model_validate(job_doc),
        Hyperparameters.model_validate(hyper_doc),
        config.solver,
        config.transductive,
        model,
        seed=config.seed,
    )
    return result.model_dump(mode="json")


def run_grid_cells(config: RunConfig) -> List[GridCell]:
    doc = config.model_dump(mode="json")
    n_cells = len(config.grid.cells())
    results = group(grid_cell_task.s(doc, i) for i in range(n_cells)).apply_async().get()
    return sorted((GridCell.model_validate(r) for r in results), key=lambda c: c.index)


def run_cv_folds(config: RunConfig, jobs: List[FoldJob], hyper: Hyperparameters, model: str = "latent") -> List[FoldResult]:
    doc = config.model_dump(mode="json")
    hyper_doc = hyper.model_dump(mode="json")
    results = group(cv_fold_task.s(doc, job.model_dump(mode="json"), hyper_doc, model) for job in jobs).apply_async().get()
    logger.info(f"✅ {len(results)} CV fold tasks finished")
    return [FoldResult.model_validate(r) for r in results]
