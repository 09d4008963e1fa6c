"""
Binary-relevance baseline: one ridge regression per label on the concatenated
raw-feature view, thresholded at 0.5. A comparison floor, not a faithful SVM
reimplementation.
"""
import logging
from typing import Sequence, Tuple

import numpy as np
import scipy.linalg
from pydantic import BaseModel, ConfigDict

from core.errors import EmptyInput, SingularSystem
from core.models import ModalityKind, MultiModalView
from app.metrics import hamming_loss
from app.solver import LABEL_THRESHOLD

logger = logging.getLogger(__name__)

DEFAULT_LAMBDAS = (1e-3, 1e-1, 1.0, 10.0)
MAX_LAMBDA_BUMPS = 6


class RidgeModel(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    W: np.ndarray
    lam: float


def raw_features(view: MultiModalView) -> np.ndarray:
    """Concatenation of the raw-feature modalities (all modalities if there are none)."""
    blocks = [m.values for m in view.modalities if m.kind == ModalityKind.RAW_FEATURE]
    if not blocks:
        blocks = [m.values for m in view.modalities]
    return np.hstack(blocks)


def ridge_solve(X: np.ndarray, Y: np.ndarray, lam: float) -> Tuple[np.ndarray, float]:
    """W = (X^T X + lam I)^{-1} X^T Y; lam grows tenfold while the system is singular."""
    gram = X.T @ X
    rhs = X.T @ Y
    for _ in range(MAX_LAMBDA_BUMPS + 1):
        try:
            return scipy.linalg.solve(gram + lam * np.eye(gram.shape[0]), rhs, assume_a="sym"), lam
        except np.linalg.LinAlgError:
            logger.warning(f"⚠️ Singular ridge system at lambda={lam:g}, retrying at {lam * 10:g}")
            lam *= 10.0
    raise SingularSystem(f"ridge system singular up to lambda={lam:g}")


def binary_relevance_fit(
    X: np.ndarray,
    Y: np.ndarray,
    lambdas: Sequence[float] = DEFAULT_LAMBDAS,
    holdout_fraction: float = 0.1,
    seed: int = 0,
) -> RidgeModel:
    """Pick lambda by holdout Hamming loss (first wins on ties), then refit on all rows."""
    X = np.asarray(X, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.float64)
    if X.shape[0] == 0:
        raise EmptyInput("binary relevance needs at least one training row")

    lam = float(lambdas[0])
    n = X.shape[0]
    if len(lambdas) > 1 and n >= 2:
        order = np.random.default_rng(seed).permutation(n)
        n_hold = min(n - 1, max(1, int(round(holdout_fraction * n))))
        hold, rest = order[:n_hold], order[n_hold:]
        best = None
        for candidate in lambdas:
            W, _ = ridge_solve(X[rest], Y[rest], float(candidate))
            loss = hamming_loss((X[hold] @ W > LABEL_THRESHOLD).astype(int), Y[hold])
            if best is None or loss < best:
                best, lam = loss, float(candidate)

    W, lam = ridge_solve(X, Y, lam)
    logger.info(f"✅ Binary relevance: lambda={lam:g}, {W.shape[1]} labels")
    return RidgeModel(W=W, lam=lam)


def binary_relevance_predict(model: RidgeModel, X: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    scores = np.asarray(X, dtype=np.float64) @ model.W
    return scores, (scores > LABEL_THRESHOLD).astype(int)

