"""
Command implementations. Each command takes a RunConfig, writes its outputs
under ``out_dir`` and returns the process exit code; errors propagate as
LatentLabelError and are mapped to exit codes by ``main``.
"""
import logging
from pathlib import Path
from typing import Callable, Dict

from core.errors import DimensionMismatch, InvalidConfig
from app import harness
from app.harness import CVReport, Hyperparameters
from app.solver import fit, predict_many
from app.synthetic import generate_synthetic
from app.views import ViewRecipe, map_samples
from cli.config import RunConfig
from services.csv_io import read_numeric_csv, write_matrix_csv, write_predictions
from services.model_store import save_model, save_trace, load_model, write_json
from services.report_writer import (
    format_table,
    write_cv_outputs,
    write_grid_outputs,
    write_k_sensitivity,
    write_sweep_outputs,
)

logger = logging.getLogger(__name__)

COMPARED_METRICS = ("hamming_loss", "one_error", "coverage_normalized", "ranking_loss")


# ============================
# TRAIN / PREDICT
# ============================
def cmd_train(config: RunConfig) -> int:
    view, labels = config.load_view()
    hyper = config.hyper
    state, trace = fit(view, labels, hyper.alpha, hyper.beta, hyper.k, config.solver)
    out_dir = Path(config.out_dir)
    save_model(config.model_file, state)
    save_trace(out_dir / "trace.json", trace)
    print(
        f"✅ Trained alpha={hyper.alpha:g} beta={hyper.beta:g} k={hyper.k}: "
        f"{len(trace.objective_per_outer_iter)} iterations, objective {trace.objective_per_outer_iter[-1]:.6g}"
    )
    return 0


def cmd_predict(config: RunConfig) -> int:
    model = load_model(config.model_file)
    if model.recipe is None:
        raise InvalidConfig(f"{config.model_file}: model has no view recipe, cannot map new samples")
    recipe = ViewRecipe.from_document(model.recipe)
    if recipe.dims != model.modality_dims:
        raise DimensionMismatch("model", detail=f"view recipe dims {recipe.dims} but U dims {model.modality_dims}")

    motor_path, nonmotor_path = config.require_features()
    motor, nonmotor = read_numeric_csv(motor_path), read_numeric_csv(nonmotor_path)
    for table, expected, path in ((motor, recipe.feature_names[0], motor_path), (nonmotor, recipe.feature_names[1], nonmotor_path)):
        if table.columns != expected:
            raise DimensionMismatch("z", detail=f"{path}: columns do not match the model's {len(expected)} training features")
    if motor.ids != nonmotor.ids:
        raise DimensionMismatch("nonmotor", detail=f"{nonmotor_path}: sample ids differ from {motor_path}")

    rows = map_samples(recipe, motor.values, nonmotor.values)
    scores, predicted = predict_many(model, rows)
    names = model.label_names or [f"label_{j}" for j in range(model.n_labels)]
    scores_path, labels_path = write_predictions(Path(config.out_dir), motor.ids, names, scores, predicted)
    print(f"✅ Predicted {len(motor.ids)} samples -> {scores_path}, {labels_path}")
    return 0


# ============================
# HARNESS
# ============================
def _cv_report(config: RunConfig, view, labels, hyper: Hyperparameters, model: str) -> CVReport:
    if config.backend == "celery":
        from celery_app.tasks import run_cv_folds

        jobs = harness.cv_jobs(labels.n_train, config.folds, config.repeats, config.seed)
        results = run_cv_folds(config, jobs, hyper, model)
        return harness.aggregate_cv(results, hyper, config.repeats, config.folds, config.seed, config.transductive, model)
    return harness.repeated_cv(
        view, labels, hyper, config.repeats, config.folds, config.seed, config.solver,
        transductive=config.transductive, model=model, workers=config.workers,
    )


def cmd_cv(config: RunConfig) -> int:
    view, labels = config.load_view()
    report = _cv_report(config, view, labels, config.hyper, "latent")
    baseline = None
    comparison = None
    if config.compare_baseline:
        baseline = _cv_report(config, view, labels, config.hyper, "binary_relevance")
        comparison = [harness.paired_t_test(report, baseline, metric) for metric in COMPARED_METRICS]
    write_cv_outputs(Path(config.out_dir), report, baseline, comparison)

    print(format_table(report.summary, f"Latent model {config.repeats} x {config.folds}-fold CV (seed {config.seed})"))
    if baseline is not None:
        print(format_table(baseline.summary, "Binary relevance (ridge)"))
        for t in comparison:
            p = f"{t.pvalue:.3g}" if t.pvalue is not None else "n/a"
            print(f"  paired t-test {t.metric}: p={p} over {t.n_pairs} folds")
    return 0


def cmd_grid(config: RunConfig) -> int:
    view, labels = config.load_view()
    if config.backend == "celery":
        from celery_app.tasks import run_grid_cells

        cells = run_grid_cells(config)
        _, holdout = harness.holdout_split(labels.n_train, config.holdout_fraction, config.seed)
        ids = view.ids()
        result = harness.GridResult(
            best=harness.select_best(cells),
            cells=cells,
            seed=config.seed,
            holdout_fraction=config.holdout_fraction,
            holdout_ids=[ids[i] for i in holdout],
        )
    else:
        result = harness.grid_search(
            view, labels, config.grid, config.holdout_fraction, config.seed, config.solver,
            config.transductive, config.workers,
        )
    write_grid_outputs(Path(config.out_dir), result)
    best = result.best
    failed = sum(1 for c in result.cells if c.error)
    print(f"✅ Best alpha={best.alpha:g} beta={best.beta:g} k={best.k} over {len(result.cells)} cells ({failed} failed)")
    return 0


def cmd_sweep(config: RunConfig) -> int:
    view, labels = config.load_view()
    out_dir = Path(config.out_dir)
    if config.sweep == "k":
        rows = harness.k_sensitivity(
            view, labels, config.grid, config.repeats, config.folds, config.seed, config.solver, config.workers
        )
        path = write_k_sensitivity(out_dir, rows, config.seed)
        print(f"✅ k-sensitivity over {len(rows)} values of k -> {path}")
        return 0

    points = harness.beta_sparsity_sweep(view, labels, config.hyper.alpha, config.hyper.k, config.sweep_betas, config.solver)
    write_sweep_outputs(out_dir, points, view.ids(), labels.names(), config.seed)
    for point in points:
        print(f"  beta={point.beta:g}: {point.n_positive} predicted positives")
    return 0


def cmd_synth(config: RunConfig) -> int:
    spec = config.synthetic
    if "seed" not in spec.model_fields_set:
        spec = spec.model_copy(update={"seed": config.seed})
    view, labels, planted = generate_synthetic(spec)
    out_dir = Path(config.out_dir)
    ids = view.ids()
    for modality in view.modalities:
        columns = [f"{modality.name}_{j}" for j in range(modality.dim)]
        write_matrix_csv(out_dir / f"{modality.name}.csv", ids, columns, modality.values)
    write_matrix_csv(out_dir / "labels.csv", ids, labels.names(), labels.values.astype(int))
    write_json(out_dir / "planted_model.json", {"spec": spec.model_dump(mode="json"), "model": planted.to_document()})
    print(f"✅ Synthetic data ({spec.n_samples} samples, dims {spec.modality_dims}, c={spec.c}) -> {out_dir}")
    return 0


COMMANDS: Dict[str, Callable[[RunConfig], int]] = {
    "train": cmd_train,
    "predict": cmd_predict,
    "cv": cmd_cv,
    "grid": cmd_grid,
    "sweep": cmd_sweep,
    "synth": cmd_synth,
}
