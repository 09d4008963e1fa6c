"""
Planted-model data generator.

    Z ~ N(0, 1)            (n x k_true latent symptoms)
    X_i = Z A_i + noise    (A_i ~ N(0, 1/k_true), so features have unit scale)
    V*  sparse, +-1 nonzeros, each column scaled so Z V* has unit variance
    Y   = 1[Z V* > label_threshold]
"""
import logging
import math
from typing import List, Tuple

import numpy as np
import scipy.linalg
from pydantic import BaseModel, ConfigDict, Field, PositiveInt, field_validator

from core.models import LabelMatrix, ModalityKind, ModalityMatrix, ModelState, MultiModalView

logger = logging.getLogger(__name__)


class SyntheticSpec(BaseModel):
    model_config = ConfigDict(
        frozen=True,
        json_schema_extra={
            "example": {
                "n_samples": 136,
                "k_true": 10,
                "c": 31,
                "modality_dims": [55, 143],
                "v_sparsity": 0.3,
                "noise_sd": 0.1,
                "label_threshold": 1.0,
                "seed": 0,
            }
        },
    )

    n_samples: PositiveInt = 136
    k_true: PositiveInt = 10
    c: PositiveInt = 31
    modality_dims: List[PositiveInt] = Field(default_factory=lambda: [55, 143])
    v_sparsity: float = Field(0.3, gt=0.0, le=1.0)
    noise_sd: float = Field(0.1, ge=0.0)
    label_threshold: float = 1.0
    seed: int = 0

    @field_validator("modality_dims")
    @classmethod
    def check_dims(cls, value: List[int]) -> List[int]:
        if not value:
            raise ValueError("at least one modality is required")
        return value


def _modality_names(s: int) -> List[str]:
    return ["motor", "nonmotor"] if s == 2 else [f"modality_{i}" for i in range(s)]


def generate_synthetic(spec: SyntheticSpec) -> Tuple[MultiModalView, LabelMatrix, ModelState]:
    """Features, labels (all rows labeled) and the planted ground-truth model."""
    rng = np.random.default_rng(spec.seed)
    n, k, c = spec.n_samples, spec.k_true, spec.c

    Z = rng.standard_normal((n, k))
    loadings = [rng.standard_normal((k, d)) / math.sqrt(k) for d in spec.modality_dims]
    blocks = [Z @ A + spec.noise_sd * rng.standard_normal((n, A.shape[1])) for A in loadings]

    mask = rng.random((k, c)) < spec.v_sparsity
    for j in np.flatnonzero(~mask.any(axis=0)):
        mask[rng.integers(k), j] = True
    signs = rng.choice([-1.0, 1.0], size=(k, c))
    V = mask * signs / np.sqrt(mask.sum(axis=0))

    Y = (Z @ V > spec.label_threshold).astype(np.float64)

    names = _modality_names(len(blocks))
    ids = [f"s{i:04d}" for i in range(n)]
    label_names = [f"label_{j}" for j in range(c)]
    view = MultiModalView(
        modalities=[ModalityMatrix(values=X, name=name) for X, name in zip(blocks, names)],
        sample_ids=ids,
    )
    labels = LabelMatrix(values=Y, n_train=n, n_test=0, label_names=label_names)
    planted = ModelState(
        U=[scipy.linalg.pinv(A) for A in loadings],
        P=Z,
        V=V,
        alpha=0.0,
        beta=0.0,
        k=k,
        modality_kinds=[ModalityKind.RAW_FEATURE] * len(blocks),
        label_names=label_names,
        n_train=n,
    )
    logger.info(f"✅ Synthetic instance: n={n}, dims={spec.modality_dims}, c={c}, density={Y.mean():.3f}")
    return view, labels, planted
