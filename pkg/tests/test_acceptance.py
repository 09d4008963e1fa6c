"""End-to-end experiments at full scale. Run with ``pytest --runslow``."""
import time

import numpy as np
import pytest

from app.harness import GridSpec, beta_sparsity_sweep, grid_search
from app.optim import SolverConfig
from app.solver import fit
from app.synthetic import SyntheticSpec, generate_synthetic
from app.views import DEFAULT_KERNELS, ScalingSpec, assemble_view
from scripts.planted_recovery import run_seed
from scripts.scaling_benchmark import time_fit

pytestmark = pytest.mark.slow


def _clinical_view(seed: int = 0):
    view, labels, _ = generate_synthetic(SyntheticSpec(seed=seed))
    motor, nonmotor = view.modalities
    return assemble_view(motor, nonmotor, ScalingSpec(), DEFAULT_KERNELS, sample_ids=view.ids()), labels


def test_fit_at_clinical_scale_converges_quickly():
    view, labels = _clinical_view()
    start = time.perf_counter()
    _, trace = fit(view, labels, 0.3, 0.1, 50, SolverConfig(max_outer_iters=1000))
    assert time.perf_counter() - start < 60.0
    assert trace.converged
    assert len(trace.objective_per_outer_iter) < 1000


def test_planted_model_beats_binary_relevance():
    grid = GridSpec(alpha_values=[1e-1, 1e-3], beta_values=[1e-1, 1e-3], k_values=[5, 10, 20])
    wins = sum(run_seed(seed, grid, 10, SolverConfig())["latent_wins"] for seed in range(10))
    assert wins >= 8


def test_grid_recovers_planted_latent_dimension():
    grid = GridSpec(alpha_values=[0.3], beta_values=[0.1], k_values=[2, 5, 50])
    hits = 0
    for seed in range(10):
        view, labels, _ = generate_synthetic(SyntheticSpec(k_true=5, seed=seed))
        hits += grid_search(view, labels, grid, seed=seed).best.k == 5
    assert hits >= 8


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_more_sparsity_means_fewer_positives(seed):
    view, labels = _clinical_view(seed)
    points = beta_sparsity_sweep(view, labels, 0.3, 50, [1e-5, 1e-3, 1e-1])
    counts = [p.n_positive for p in points]
    assert all(b <= a for a, b in zip(counts, counts[1:]))


def test_fit_time_grows_at_most_quadratically():
    sizes = [50, 100, 200, 400]
    solver = SolverConfig(max_outer_iters=50, outer_rel_tol=1e-300)
    times = [time_fit(n, 50, solver) for n in sizes]
    slope = float(np.polyfit(np.log(sizes), np.log(times), 1)[0])
    assert slope <= 2.3
