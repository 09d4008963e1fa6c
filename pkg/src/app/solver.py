"""
Alternating minimization of

    F(U, P, V) = sum_i ( ||X_i U_i - P||^2 + alpha ||U_i||^2 )
               + ||J (Y - P V)||^2 + beta ||V||_1

U_i is a ridge solve and P a row-wise linear solve (or backtracked gradient
steps on either); V is solved by FISTA. Each outer iteration ends with an
exact rescale along (U_i / t, P / t, V t). Every step is monotone, so the
traced objective never increases.
"""
import logging
import time
from typing import List, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg

from core.errors import DimensionMismatch, InvalidConfig, InvalidK
from core.models import LabelMatrix, ModalityKind, ModelState, MultiModalView, ensure_valid
from app.optim import FitTrace, SolverConfig, armijo_step, solve_V_fista

logger = logging.getLogger(__name__)

LABEL_THRESHOLD = 0.5
MIN_RESCALE, MAX_RESCALE = 0.1, 10.0



# -------------------------------------------------------------------
# Objective / gradients
# -------------------------------------------------------------------

def _check_shapes(state: ModelState, view: MultiModalView, labels: LabelMatrix) -> None:
    if state.s != view.s:
        raise DimensionMismatch("U", detail=f"{state.s} factors for {view.s} modalities")
    for i, (u, m) in enumerate(zip(state.U, view.modalities)):
        if u.shape[0] != m.dim:
            raise DimensionMismatch(f"U[{i}]", detail=f"{u.shape[0]} rows, modality has {m.dim} columns")
    if state.P.shape[0] != view.n_rows:
        raise DimensionMismatch("P", detail=f"{state.P.shape[0]} rows, view has {view.n_rows}")
    if state.V.shape[1] != labels.n_labels:
        raise DimensionMismatch("V", detail=f"{state.V.shape[1]} columns, labels have {labels.n_labels}")


def objective(state: ModelState, view: MultiModalView, labels: LabelMatrix) -> float:
    _check_shapes(state, view, labels)
    P, V = state.P, state.V
    total = 0.0
    for X, U in zip((m.values for m in view.modalities), state.U):
        R = X @ U - P
        total += float(np.sum(R * R)) + state.alpha * float(np.sum(U * U))
    n = labels.n_train
    R = labels.train_values - P[:n] @ V
    total += float(np.sum(R * R)) + state.beta * float(np.sum(np.abs(V)))
    return total


def u_gradient(X: np.ndarray, U: np.ndarray, P: np.ndarray, alpha: float) -> np.ndarray:
    """d/dU_i of F: 2 (X^T X U - X^T P + alpha U)."""
    return 2.0 * (X.T @ (X @ U - P) + alpha * U)


def p_gradient(
    Xs: Sequence[np.ndarray], Us: Sequence[np.ndarray], P: np.ndarray, V: np.ndarray, labels: LabelMatrix
) -> np.ndarray:
    """d/dP of F: 2 J (P V - Y) V^T + 2 (s P - sum_i X_i U_i)."""
    G = 2.0 * (len(Xs) * P - sum(X @ U for X, U in zip(Xs, Us)))
    n = labels.n_train
    G[:n] += 2.0 * (P[:n] @ V - labels.train_values) @ V.T
    return G


def v_smooth_gradient(P: np.ndarray, V: np.ndarray, labels: LabelMatrix) -> np.ndarray:
    """Gradient of the smooth part of F in V: 2 P^T J (P V - Y)."""
    n = labels.n_train
    return 2.0 * P[:n].T @ (P[:n] @ V - labels.train_values)


# -------------------------------------------------------------------
# Block updates
# -------------------------------------------------------------------

RidgeFactor = Tuple[np.ndarray, np.ndarray, np.ndarray]


def ridge_factor(X: np.ndarray) -> RidgeFactor:
    """Thin SVD of a modality; every exact U_i solve of a fit reuses it."""
    left, sv, vt = scipy.linalg.svd(X, full_matrices=False)
    return left, sv, vt


def _u_block(X: np.ndarray, U: np.ndarray, P: np.ndarray, alpha: float) -> float:
    R = X @ U - P
    return float(np.sum(R * R)) + alpha * float(np.sum(U * U))


def _u_exact(X: np.ndarray, U: np.ndarray, P: np.ndarray, alpha: float, factor: RidgeFactor) -> np.ndarray:
    """Ridge solution (X^T X + alpha I)^{-1} X^T P; minimum-norm least squares when alpha is 0."""
    left, sv, vt = factor
    if alpha > 0.0:
        gain = sv / (sv * sv + alpha)
    else:
        tol = max(X.shape) * np.finfo(np.float64).eps * (sv[0] if sv.size else 0.0)
        gain = np.divide(1.0, sv, out=np.zeros_like(sv), where=sv > tol)
    solved = vt.T @ (gain[:, None] * (left.T @ P))
    if _u_block(X, solved, P, alpha) <= _u_block(X, U, P, alpha):
        return solved
    return np.array(U, dtype=np.float64)


def _u_steps(X: np.ndarray, U: np.ndarray, P: np.ndarray, alpha: float, config: SolverConfig) -> np.ndarray:
    XtX = X.T @ X
    XtP = X.T @ P
    U = np.array(U, dtype=np.float64)
    for _ in range(config.u_inner_steps):
        G = 2.0 * (XtX @ U - XtP + alpha * U)
        grad_sq = float(np.sum(G * G))
        XG = X @ G
        step = armijo_step(grad_sq, float(np.sum(XG * XG)) + alpha * grad_sq, config)
        if step == 0.0:
            break
        U -= step * G
    return U


def update_U(state: ModelState, view: MultiModalView, config: SolverConfig) -> List[np.ndarray]:
    """Monotone update of each U_i with P fixed; the U_i are independent."""
    if config.block_update == "exact":
        return [
            _u_exact(m.values, U, state.P, state.alpha, ridge_factor(m.values))
            for m, U in zip(view.modalities, state.U)
        ]
    return [
        _u_steps(m.values, U, state.P, state.alpha, config)
        for m, U in zip(view.modalities, state.U)
    ]


def _p_block(M: np.ndarray, s: int, P: np.ndarray, V: np.ndarray, labels: LabelMatrix) -> float:
    # sum_i ||X_i U_i - P||^2 up to the constant sum_i ||X_i U_i||^2
    n = labels.n_train
    R = labels.train_values - P[:n] @ V
    return s * float(np.sum(P * P)) - 2.0 * float(np.sum(M * P)) + float(np.sum(R * R))


def _p_exact(M: np.ndarray, s: int, P: np.ndarray, V: np.ndarray, labels: LabelMatrix) -> np.ndarray:
    """Row-wise minimizer: P_r (V V^T + s I) = M_r + Y_r V^T on training rows, M_r / s elsewhere."""
    n = labels.n_train
    solved = M / s
    if n:
        factor = scipy.linalg.cho_factor(V @ V.T + s * np.eye(V.shape[0]))
        solved[:n] = scipy.linalg.cho_solve(factor, (M[:n] + labels.train_values @ V.T).T).T
    if _p_block(M, s, solved, V, labels) <= _p_block(M, s, P, V, labels):
        return solved
    return np.array(P, dtype=np.float64)


def _p_steps(
    M: np.ndarray, s: int, P: np.ndarray, V: np.ndarray, labels: LabelMatrix, config: SolverConfig
) -> np.ndarray:
    n = labels.n_train
    Yt = labels.train_values
    P = np.array(P, dtype=np.float64)
    for _ in range(config.p_inner_steps):
        G = 2.0 * (s * P - M)
        G[:n] += 2.0 * (P[:n] @ V - Yt) @ V.T
        grad_sq = float(np.sum(G * G))
        GV = G[:n] @ V
        step = armijo_step(grad_sq, float(np.sum(GV * GV)) + s * grad_sq, config)
        if step == 0.0:
            break
        P -= step * G
    return P


def _p_update(
    M: np.ndarray, s: int, P: np.ndarray, V: np.ndarray, labels: LabelMatrix, config: SolverConfig
) -> np.ndarray:
    if config.block_update == "exact":
        return _p_exact(M, s, P, V, labels)
    return _p_steps(M, s, P, V, labels, config)


def update_P(state: ModelState, view: MultiModalView, labels: LabelMatrix, config: SolverConfig) -> np.ndarray:
    """Monotone update of P with U and V fixed."""
    M = sum(m.values @ U for m, U in zip(view.modalities, state.U))
    return _p_update(M, view.s, state.P, state.V, labels, config)


def rescale_factor(modality_term: float, l1_term: float) -> float:
    """Best t for (U_i / t, P / t, V t).

    Along that curve the modality terms scale by 1/t^2, the L1 term by t and
    the label fit is unchanged, so t = cbrt(2A / B), clipped to [0.1, 10].
    Returns 1.0 when either term is zero.
    """
    if modality_term <= 0.0 or l1_term <= 0.0:
        return 1.0
    t = float(np.clip(np.cbrt(2.0 * modality_term / l1_term), MIN_RESCALE, MAX_RESCALE))
    if modality_term / (t * t) + l1_term * t < modality_term + l1_term:
        return t
    return 1.0



# -------------------------------------------------------------------
# Initialization
# -------------------------------------------------------------------

def pca_scores(X: np.ndarray, k: int) -> np.ndarray:
    """Top-k principal-component scores of X; columns past the numerical rank are zero.

    Each component's sign makes its largest-magnitude loading positive.
    """
    Xc = X - X.mean(axis=0)
    scores = np.zeros((X.shape[0], k))
    if Xc.size == 0:
        return scores
    left, sv, vt = scipy.linalg.svd(Xc, full_matrices=False)
    if sv.size == 0 or sv[0] == 0.0:
        return scores
    tol = max(Xc.shape) * np.finfo(np.float64).eps * sv[0]
    rank = int(np.sum(sv > tol))
    for j in range(min(k, rank)):
        loading = vt[j]
        sign = 1.0 if loading[int(np.argmax(np.abs(loading)))] >= 0 else -1.0
        scores[:, j] = sign * sv[j] * left[:, j]
    return scores


def init_state(view: MultiModalView, labels: LabelMatrix, k: int, alpha: float = 0.0, beta: float = 0.0) -> ModelState:
    """Uniform U_i and V, PCA-score P (raw-feature modalities, else all of them)."""
    if not isinstance(k, (int, np.integer)) or k < 1 or k > view.n_rows:
        raise InvalidK(f"k must be an integer in [1, {view.n_rows}], got {k!r}")
    k = int(k)
    c = labels.n_labels
    U = [np.full((d, k), 1.0 / (d * k)) for d in view.dims]
    V = np.full((k, c), 1.0 / (k * c))
    raw = [m.values for m in view.modalities if m.kind == ModalityKind.RAW_FEATURE]
    if not raw:
        raw = [m.values for m in view.modalities]
    P = pca_scores(np.hstack(raw), k)
    return ModelState(
        U=U, P=P, V=V, alpha=alpha, beta=beta, k=k,
        modality_kinds=[m.kind for m in view.modalities],
        anchor_ids=_anchor_ids(view),
        label_names=list(labels.label_names),
        n_train=labels.n_train,
        recipe=view.recipe,
    )


def _anchor_ids(view: MultiModalView) -> List[str]:
    for m in view.modalities:
        if m.kind == ModalityKind.KERNEL:
            return list(m.anchor_ids)
    return []


# -------------------------------------------------------------------
# Fit
# -------------------------------------------------------------------

def fit(
    view: MultiModalView,
    labels: LabelMatrix,
    alpha: float,
    beta: float,
    k: int,
    config: Optional[SolverConfig] = None,
) -> Tuple[ModelState, FitTrace]:
    config = config or SolverConfig()
    ensure_valid(view, labels)
    if not (np.isfinite(alpha) and alpha >= 0):
        raise InvalidConfig(f"alpha must be a finite nonnegative number, got {alpha!r}")
    if not (np.isfinite(beta) and beta >= 0):
        raise InvalidConfig(f"beta must be a finite nonnegative number, got {beta!r}")

    start = time.perf_counter()
    state = init_state(view, labels, k, alpha=alpha, beta=beta)
    Xs = [m.values for m in view.modalities]
    U, P, V = [np.array(u) for u in state.U], np.array(state.P), np.array(state.V)
    current = objective(state, view, labels)
    trace = FitTrace(initial_objective=current)

    exact = config.block_update == "exact"
    factors = [ridge_factor(X) for X in Xs] if exact else []
    for t in range(config.max_outer_iters):
        if exact:
            U = [_u_exact(X, u, P, alpha, f) for X, u, f in zip(Xs, U, factors)]
        else:
            U = [_u_steps(X, u, P, alpha, config) for X, u in zip(Xs, U)]
        V, iters = solve_V_fista(P, labels, beta, V, config)
        M = sum(X @ u for X, u in zip(Xs, U))
        P = _p_update(M, len(Xs), P, V, labels, config)

        if config.rescale:
            modality_term = sum(_u_block(X, u, P, alpha) for X, u in zip(Xs, U))
            scale = rescale_factor(modality_term, beta * float(np.sum(np.abs(V))))
            if scale != 1.0:
                U, P, V = [u / scale for u in U], P / scale, V * scale

        state = state.model_copy(update={"U": U, "P": P, "V": V})
        value = objective(state, view, labels)
        trace.objective_per_outer_iter.append(value)
        trace.fista_iters_per_outer.append(iters)
        logger.debug(f"🔁 outer {t + 1}: F={value:.10g} (fista {iters} iters)")

        converged = current - value <= config.outer_rel_tol * abs(current)
        current = value
        if converged:
            trace.converged = True
            break

    # model_copy skips validation, so freeze the arrays explicitly
    state = ModelState(**{**state.__dict__, "U": U, "P": P, "V": V})
    state.check_consistent()
    trace.wall_time = time.perf_counter() - start
    logger.info(
        f"✅ Fit alpha={alpha:g} beta={beta:g} k={k}: "
        f"{len(trace.objective_per_outer_iter)} outer iters, F={current:.6g}, {trace.wall_time:.2f}s"
    )
    return state, trace


# -------------------------------------------------------------------
# Prediction
# -------------------------------------------------------------------

def predict_many(model: ModelState, rows: Sequence[np.ndarray]) -> Tuple[np.ndarray, np.ndarray]:
    """Scores (1/s) sum_i z_i U_i V for a batch; labels are score > 0.5."""
    if len(rows) != model.s:
        raise DimensionMismatch("z", detail=f"{len(rows)} modalities given, model has {model.s}")
    blocks = []
    for i, (Z, U) in enumerate(zip(rows, model.U)):
        Z = np.asarray(Z, dtype=np.float64)
        if Z.ndim == 1:
            Z = Z.reshape(1, -1)
        if Z.ndim != 2 or Z.shape[1] != U.shape[0]:
            raise DimensionMismatch(f"z[{i}]", detail=f"expected {U.shape[0]} columns, got shape {Z.shape}")
        blocks.append(Z)
    if len({Z.shape[0] for Z in blocks}) > 1:
        raise DimensionMismatch("z", detail=f"row counts differ: {[Z.shape[0] for Z in blocks]}")
    latent = sum(Z @ U for Z, U in zip(blocks, model.U)) / model.s
    scores = latent @ model.V
    return scores, (scores > LABEL_THRESHOLD).astype(int)


def predict(model: ModelState, z: Sequence[np.ndarray]) -> Tuple[np.ndarray, np.ndarray]:
    """Score vector (length c) and 0/1 labels for one unseen sample given per-modality rows."""
    scores, predicted = predict_many(model, [np.asarray(zi, dtype=np.float64).reshape(1, -1) for zi in z])
    return scores[0], predicted[0]


def predict_transductive(model: ModelState, view: MultiModalView) -> Tuple[np.ndarray, np.ndarray]:
    """Scores and labels for every row of the view the model was fit on."""
    return predict_many(model, [m.values for m in view.modalities])
