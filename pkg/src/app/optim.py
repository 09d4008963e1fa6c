"""
Optimization primitives for the solver: configuration, Armijo backtracking
on quadratic blocks, the shrinkage operator and the FISTA V-subproblem.

V-subproblem:   H(V) = ||J(Y - P V)||_F^2 + beta * ||V||_1

The smooth gradient is 2 P^T J (P V - Y). A step of 1/(2l) followed by
soft-thresholding at beta/(2l) is the exact proximal step for H; l is found
by backtracking until ||J P D||^2 <= l ||D||^2 for D = V_new - Gamma,
starting from the largest eigenvalue of P^T J P.
"""
import logging
import math
from typing import List, Literal, Tuple

import numpy as np
import scipy.linalg
from pydantic import BaseModel, ConfigDict, Field, PositiveFloat, PositiveInt

from core.errors import InvalidConfig, LineSearchFailed
from core.models import LabelMatrix

logger = logging.getLogger(__name__)


class SolverConfig(BaseModel):
    model_config = ConfigDict(
        frozen=True,
        json_schema_extra={
            "example": {
                "max_outer_iters": 200,
                "outer_rel_tol": 1e-6,
                "fista_max_iters": 500,
                "fista_rel_tol": 1e-8,
                "backtrack_shrink": 0.5,
                "backtrack_init_step": 1.0,
                "block_update": "exact",
                "rescale": True,
                "seed": 0,
            }
        },
    )

    max_outer_iters: PositiveInt = 200
    outer_rel_tol: PositiveFloat = 1e-6
    fista_max_iters: PositiveInt = 500
    fista_rel_tol: PositiveFloat = 1e-8
    backtrack_shrink: float = Field(0.5, gt=0.0, lt=1.0)
    backtrack_init_step: PositiveFloat = 1.0
    # "exact" solves the U and P blocks in closed form; "gradient" takes
    # u_inner_steps / p_inner_steps backtracked steps instead
    block_update: Literal["exact", "gradient"] = "exact"
    rescale: bool = True
    u_inner_steps: PositiveInt = 5
    p_inner_steps: PositiveInt = 5
    armijo_c: float = Field(1e-4, gt=0.0, lt=1.0)
    min_step: PositiveFloat = 1e-18
    seed: int = 0


class FitTrace(BaseModel):
    """Objective after every outer iteration (nonincreasing) and FISTA work per iteration.

    ``converged`` is set when the relative decrease met ``outer_rel_tol``
    before ``max_outer_iters`` ran out.
    """

    initial_objective: float = 0.0
    converged: bool = False
    objective_per_outer_iter: List[float] = Field(default_factory=list)
    fista_iters_per_outer: List[int] = Field(default_factory=list)
    wall_time: float = 0.0

    def to_document(self) -> dict:
        # wall time is left out so reruns produce byte-identical files
        return {
            "initial_objective": self.initial_objective,
            "objective_per_outer_iter": list(self.objective_per_outer_iter),
            "fista_iters_per_outer": list(self.fista_iters_per_outer),
            "converged": self.converged,
        }


# -------------------------------------------------------------------
# Line search
# -------------------------------------------------------------------

def armijo_step(grad_sq: float, curvature: float, config: SolverConfig) -> float:
    """Backtracked step for a quadratic block.

    Along x - t*g the block objective changes by exactly
    -t*||g||^2 + t^2*curvature; the step is accepted once that change is at
    most -c*t*||g||^2.
    """
    if not (math.isfinite(grad_sq) and math.isfinite(curvature)):
        raise LineSearchFailed(f"non-finite gradient or curvature ({grad_sq!r}, {curvature!r})")
    if grad_sq == 0.0:
        return 0.0
    step = config.backtrack_init_step
    while -step * grad_sq + step * step * curvature > -config.armijo_c * step * grad_sq:
        step *= config.backtrack_shrink
        if step < config.min_step:
            raise LineSearchFailed(f"step underflow below {config.min_step:g}")
    return step


# -------------------------------------------------------------------
# Shrinkage
# -------------------------------------------------------------------

def shrink(x: float, eps: float) -> float:
    """Soft-threshold: x - eps above eps, x + eps below -eps, 0 in between."""
    if eps < 0:
        raise InvalidConfig(f"shrinkage threshold must be nonnegative, got {eps!r}")
    if x > eps:
        return x - eps
    if x < -eps:
        return x + eps
    return 0.0


def shrink_matrix(X: np.ndarray, eps: float) -> np.ndarray:
    return np.sign(X) * np.maximum(np.abs(X) - eps, 0.0)


# -------------------------------------------------------------------
# FISTA
# -------------------------------------------------------------------

def lasso_objective(P: np.ndarray, labels: LabelMatrix, beta: float, V: np.ndarray) -> float:
    """H(V) = ||J(Y - P V)||_F^2 + beta * ||V||_1."""
    n = labels.n_train
    R = labels.train_values - P[:n] @ V
    return float(np.sum(R * R) + beta * np.sum(np.abs(V)))


def _initial_lipschitz(PtP: np.ndarray, config: SolverConfig) -> float:
    """Largest eigenvalue of P^T J P; the configured first step when that is zero."""
    k = PtP.shape[0]
    top = float(scipy.linalg.eigvalsh(PtP, subset_by_index=[k - 1, k - 1])[0]) if k else 0.0
    if top > 0.0 and math.isfinite(top):
        return top
    return 1.0 / (2.0 * config.backtrack_init_step)


def solve_V_fista(
    P: np.ndarray,
    labels: LabelMatrix,
    beta: float,
    V0: np.ndarray,
    config: SolverConfig,
) -> Tuple[np.ndarray, int]:
    """Minimize H(V) by accelerated proximal gradient from V0.

    Uses backtracking on l, function-value restart of the momentum and
    returns the best iterate seen (V0 included), so H never increases.
    """
    if beta < 0:
        raise InvalidConfig(f"beta must be nonnegative, got {beta!r}")
    n = labels.n_train
    Pt = np.asarray(P, dtype=np.float64)[:n]
    Yt = labels.train_values
    PtP = Pt.T @ Pt
    PtY = Pt.T @ Yt

    def H(V: np.ndarray) -> float:
        R = Yt - Pt @ V
        return float(np.sum(R * R) + beta * np.sum(np.abs(V)))

    V_prev = np.array(V0, dtype=np.float64)
    H_prev = H(V_prev)
    best, H_best = V_prev, H_prev
    gamma = V_prev
    psi = 1.0
    lipschitz = _initial_lipschitz(PtP, config)
    restarted = False
    iters = 0

    for iters in range(1, config.fista_max_iters + 1):
        grad = 2.0 * (PtP @ gamma - PtY)
        while True:
            step = 1.0 / (2.0 * lipschitz)
            V_new = shrink_matrix(gamma - step * grad, beta * step)
            D = V_new - gamma
            if np.sum(D * (PtP @ D)) <= lipschitz * np.sum(D * D):
                break
            lipschitz /= config.backtrack_shrink
            if 1.0 / (2.0 * lipschitz) < config.min_step:
                raise LineSearchFailed(f"FISTA step underflow below {config.min_step:g}")

        H_new = H(V_new)
        if H_new < H_best:
            best, H_best = V_new, H_new

        if H_new > H_prev:
            if restarted:
                # a plain proximal step from V_prev no longer decreases H
                break
            psi = 1.0
            gamma = V_prev
            restarted = True
            continue
        restarted = False

        psi_next = (1.0 + math.sqrt(1.0 + 4.0 * psi * psi)) / 2.0
        gamma = V_new + ((psi - 1.0) / psi_next) * (V_new - V_prev)
        decrease = H_prev - H_new
        converged = decrease <= config.fista_rel_tol * abs(H_prev)
        V_prev, H_prev, psi = V_new, H_new, psi_next
        if converged:
            break

    return best, iters
