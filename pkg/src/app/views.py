"""
Multi-modality representation of the samples.

Two feature views (motor, non-motor) plus one similarity view per kernel,
computed on the scaled concatenation [X1, X2]. Kernel columns are anchored on
the samples present at assembly time; unseen samples are mapped with
``kernel_row`` against those anchors.
"""
import logging
from enum import Enum
from typing import Any, Dict, List, Literal, Optional, Sequence, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, PositiveFloat
from scipy.spatial.distance import pdist

from core.errors import DimensionMismatch, EmptyInput, NegativeFeature
from core.models import ModalityKind, ModalityMatrix, MultiModalView

logger = logging.getLogger(__name__)


# -------------------------------------------------------------------
# Specs
# -------------------------------------------------------------------

class KernelKind(str, Enum):
    LINEAR = "linear"
    GAUSSIAN = "gaussian"
    BHATTACHARYYA = "bhattacharyya"
    CHI_SQUARE = "chi_square"


class KernelSpec(BaseModel):
    model_config = ConfigDict(
        frozen=True,
        json_schema_extra={"example": {"kind": "gaussian", "gaussian_sigma": "auto"}},
    )

    kind: KernelKind
    gaussian_sigma: Union[PositiveFloat, Literal["auto"]] = "auto"
    # None = on for histogram kernels, off otherwise
    histogram_normalize: Optional[bool] = None
    # MinMax-scale the concatenation before histogram kernels
    histogram_minmax: bool = True

    @property
    def is_histogram(self) -> bool:
        return self.kind in (KernelKind.BHATTACHARYYA, KernelKind.CHI_SQUARE)

    @property
    def normalize_rows(self) -> bool:
        if self.histogram_normalize is None:
            return self.is_histogram
        return self.histogram_normalize


DEFAULT_KERNELS = [
    KernelSpec(kind=KernelKind.LINEAR),
    KernelSpec(kind=KernelKind.GAUSSIAN),
    KernelSpec(kind=KernelKind.BHATTACHARYYA),
    KernelSpec(kind=KernelKind.CHI_SQUARE),
]


class ScalingKind(str, Enum):
    NONE = "none"
    ZSCORE = "zscore"
    MINMAX = "minmax"


class ScalingSpec(BaseModel):
    """Column scaling; ``offset``/``scale`` hold one statistic per column once fitted."""

    model_config = ConfigDict(frozen=True, json_schema_extra={"example": {"kind": "zscore"}})

    kind: ScalingKind = ScalingKind.ZSCORE
    offset: Optional[List[float]] = None
    scale: Optional[List[float]] = None

    @property
    def fitted(self) -> bool:
        return self.offset is not None and self.scale is not None


def fit_scaling(values: np.ndarray, kind: ScalingKind) -> ScalingSpec:
    """Compute per-column statistics over all rows. Constant columns map to 0."""
    values = np.asarray(values, dtype=np.float64)
    d = values.shape[1]
    if kind == ScalingKind.NONE or values.shape[0] == 0:
        return ScalingSpec(kind=kind, offset=[0.0] * d, scale=[1.0] * d)
    if kind == ScalingKind.ZSCORE:
        offset = values.mean(axis=0)
        scale = values.std(axis=0)
    else:
        offset = values.min(axis=0)
        scale = values.max(axis=0) - offset
    constant = np.ptp(values, axis=0) == 0
    offset = np.where(constant, values[0], offset)
    scale = np.where(constant | (scale == 0), 1.0, scale)
    return ScalingSpec(kind=kind, offset=offset.tolist(), scale=scale.tolist())


def apply_scaling(values: np.ndarray, spec: ScalingSpec) -> np.ndarray:
    values = np.asarray(values, dtype=np.float64)
    if not spec.fitted:
        spec = fit_scaling(values, spec.kind)
    offset = np.asarray(spec.offset)
    if values.shape[1] != offset.shape[0]:
        raise DimensionMismatch("scaling", detail=f"{values.shape[1]} columns, statistics for {offset.shape[0]}")
    return (values - offset) / np.asarray(spec.scale)


# -------------------------------------------------------------------
# Kernels
# -------------------------------------------------------------------

def concat_features(motor: ModalityMatrix, nonmotor: ModalityMatrix) -> ModalityMatrix:
    """X = [X1, X2]; motor columns first."""
    if motor.n_rows != nonmotor.n_rows:
        raise DimensionMismatch("nonmotor", detail=f"{nonmotor.n_rows} rows but motor has {motor.n_rows}")
    return ModalityMatrix(
        values=np.hstack([motor.values, nonmotor.values]),
        kind=ModalityKind.RAW_FEATURE,
        name="concat",
    )


def _prepare(values: np.ndarray, reference: np.ndarray, spec: KernelSpec) -> np.ndarray:
    """Map rows into the kernel's input space using statistics of the reference (anchor) rows."""
    if not spec.is_histogram:
        return values
    out = values
    if spec.histogram_minmax:
        out = apply_scaling(values, fit_scaling(reference, ScalingKind.MINMAX))
    negative = out < 0
    if negative.any():
        i, j = (int(x) for x in np.argwhere(negative)[0])
        raise NegativeFeature(f"{spec.kind.value} kernel needs nonnegative features; row {i}, column {j} is {out[i, j]!r}")
    if spec.normalize_rows:
        sums = out.sum(axis=1, keepdims=True)
        out = out / np.where(sums > 0, sums, 1.0)
    return out


def _resolve_sigma(prepared_anchors: np.ndarray, spec: KernelSpec) -> float:
    if spec.gaussian_sigma != "auto":
        return float(spec.gaussian_sigma)
    if prepared_anchors.shape[0] < 2:
        return 1.0
    median = float(np.median(pdist(prepared_anchors)))
    return median if median > 0 else 1.0


def _kernel_row(z: np.ndarray, A: np.ndarray, kind: KernelKind, sigma: float) -> np.ndarray:
    """Kernel between one prepared row and every prepared anchor. Each term is symmetric in (z, a)."""
    if kind == KernelKind.LINEAR:
        return np.sum(z * A, axis=1)
    if kind == KernelKind.GAUSSIAN:
        return np.exp(-np.sum((z - A) ** 2, axis=1) / (2.0 * sigma * sigma))
    if kind == KernelKind.BHATTACHARYYA:
        return np.sum(np.sqrt(z * A), axis=1)
    num = 2.0 * (z * A)
    den = z + A
    terms = np.divide(num, den, out=np.zeros_like(num), where=den > 0)
    return np.sum(terms, axis=1)


def _check_nonempty(values: np.ndarray, name: str) -> None:
    if values.ndim != 2 or values.shape[0] == 0 or values.shape[1] == 0:
        raise EmptyInput(f"{name}: kernel input must be a nonempty matrix, got shape {values.shape}")


def gram_matrix(X: ModalityMatrix, spec: KernelSpec, anchor_ids: Optional[Sequence[str]] = None) -> ModalityMatrix:
    """Square (n+m) x (n+m) kernel over the rows of X; row i is kernel_row(X[i])."""
    _check_nonempty(X.values, X.name or "X")
    prepared = _prepare(X.values, X.values, spec)
    sigma = _resolve_sigma(prepared, spec) if spec.kind == KernelKind.GAUSSIAN else 1.0
    K = np.empty((prepared.shape[0], prepared.shape[0]))
    for i in range(prepared.shape[0]):
        K[i] = _kernel_row(prepared[i], prepared, spec.kind, sigma)
    ids = list(anchor_ids) if anchor_ids is not None else [str(i) for i in range(K.shape[0])]
    return ModalityMatrix(values=K, kind=ModalityKind.KERNEL, anchor_ids=ids, name=spec.kind.value)


def kernel_rows(Z: np.ndarray, anchors: ModalityMatrix, spec: KernelSpec) -> np.ndarray:
    """kernel_row for every row of Z."""
    Z = np.atleast_2d(np.asarray(Z, dtype=np.float64))
    _check_nonempty(anchors.values, "anchors")
    if Z.shape[1] != anchors.dim:
        raise DimensionMismatch("z", detail=f"{Z.shape[1]} features, anchors have {anchors.dim}")
    prepared_anchors = _prepare(anchors.values, anchors.values, spec)
    prepared = _prepare(Z, anchors.values, spec) if Z.shape[0] else Z
    sigma = _resolve_sigma(prepared_anchors, spec) if spec.kind == KernelKind.GAUSSIAN else 1.0
    out = np.empty((Z.shape[0], prepared_anchors.shape[0]))
    for r in range(Z.shape[0]):
        out[r] = _kernel_row(prepared[r], prepared_anchors, spec.kind, sigma)
    return out


def kernel_row(z: np.ndarray, anchors: ModalityMatrix, spec: KernelSpec) -> np.ndarray:
    """Kernel values between one feature vector and each anchor; equals the Gram row for an anchor."""
    return kernel_rows(np.asarray(z, dtype=np.float64).reshape(1, -1), anchors, spec)[0]


# -------------------------------------------------------------------
# View assembly
# -------------------------------------------------------------------

def assemble_view(
    motor: ModalityMatrix,
    nonmotor: ModalityMatrix,
    scaling: ScalingSpec,
    kernels: Sequence[KernelSpec],
    sample_ids: Optional[Sequence[str]] = None,
    feature_names: Optional[Sequence[Sequence[str]]] = None,
) -> MultiModalView:
    """[scaled motor, scaled non-motor] + one kernel view per spec on the scaled concatenation."""
    if motor.n_rows != nonmotor.n_rows:
        raise DimensionMismatch("nonmotor", detail=f"{nonmotor.n_rows} rows but motor has {motor.n_rows}")
    ids = list(sample_ids) if sample_ids is not None else [str(i) for i in range(motor.n_rows)]
    if len(ids) != motor.n_rows:
        raise DimensionMismatch("sample_ids", detail=f"{len(ids)} ids for {motor.n_rows} rows")

    motor_scaling = fit_scaling(motor.values, scaling.kind)
    nonmotor_scaling = fit_scaling(nonmotor.values, scaling.kind)
    scaled_motor = ModalityMatrix(values=apply_scaling(motor.values, motor_scaling), name="motor")
    scaled_nonmotor = ModalityMatrix(values=apply_scaling(nonmotor.values, nonmotor_scaling), name="nonmotor")
    concat = concat_features(scaled_motor, scaled_nonmotor)

    modalities = [scaled_motor, scaled_nonmotor]
    for spec in kernels:
        modalities.append(gram_matrix(concat, spec, anchor_ids=ids))

    names = feature_names or (
        [f"motor_{j}" for j in range(motor.dim)],
        [f"nonmotor_{j}" for j in range(nonmotor.dim)],
    )
    recipe = ViewRecipe(
        scaling=[motor_scaling, nonmotor_scaling],
        kernels=list(kernels),
        feature_names=[list(names[0]), list(names[1])],
        anchor_ids=ids,
        anchor_features=concat.values.tolist(),
    )
    logger.info(f"✅ Assembled view: s={len(modalities)}, dims={[m.dim for m in modalities]}")
    return MultiModalView(modalities=modalities, sample_ids=ids, recipe=recipe.to_document())


class ViewRecipe(BaseModel):
    """Everything needed to map unseen samples into an assembled view."""

    model_config = ConfigDict(frozen=True)

    scaling: List[ScalingSpec]
    kernels: List[KernelSpec]
    feature_names: List[List[str]]
    anchor_ids: List[str]
    anchor_features: List[List[float]]

    def to_document(self) -> Dict[str, Any]:
        return self.model_dump(mode="json")

    @classmethod
    def from_document(cls, doc: Dict[str, Any]) -> "ViewRecipe":
        return cls.model_validate(doc)

    @property
    def dims(self) -> List[int]:
        n = len(self.anchor_ids)
        return [len(self.feature_names[0]), len(self.feature_names[1])] + [n] * len(self.kernels)


def map_samples(recipe: ViewRecipe, motor_values: np.ndarray, nonmotor_values: np.ndarray) -> List[np.ndarray]:
    """Per-modality rows (z_1..z_s) for samples given in raw feature space."""
    motor_values = _as_block(motor_values, len(recipe.feature_names[0]), "motor")
    nonmotor_values = _as_block(nonmotor_values, len(recipe.feature_names[1]), "nonmotor")
    if motor_values.shape[0] != nonmotor_values.shape[0]:
        raise DimensionMismatch("nonmotor", detail=f"{nonmotor_values.shape[0]} rows but motor has {motor_values.shape[0]}")
    z_motor = apply_scaling(motor_values, recipe.scaling[0])
    z_nonmotor = apply_scaling(nonmotor_values, recipe.scaling[1])
    rows = [z_motor, z_nonmotor]
    if recipe.kernels:
        concat = np.hstack([z_motor, z_nonmotor])
        anchors = ModalityMatrix(values=np.asarray(recipe.anchor_features, dtype=np.float64), name="anchors")
        for spec in recipe.kernels:
            rows.append(kernel_rows(concat, anchors, spec))
    return rows


def _as_block(values: np.ndarray, width: int, name: str) -> np.ndarray:
    values = np.asarray(values, dtype=np.float64)
    if values.ndim == 1:
        values = values.reshape(1, -1) if values.size else values.reshape(0, width)
    if values.ndim != 2 or values.shape[1] != width:
        raise DimensionMismatch(name, detail=f"expected {width} feature columns, got shape {values.shape}")
    return values
