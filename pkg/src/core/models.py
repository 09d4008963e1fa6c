from enum import Enum
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

from core.errors import DataModelError, DimensionMismatch, NonBinaryLabel, NonFiniteValue


def _frozen(value: Any) -> np.ndarray:
    """Copy into a read-only float64 array."""
    arr = np.array(value, dtype=np.float64)
    arr.setflags(write=False)
    return arr


def _first_index(mask: np.ndarray) -> tuple:
    return tuple(int(i) for i in np.argwhere(mask)[0])


# ============================
# LABEL MATRIX
# ============================
class LabelMatrix(BaseModel):
    """Binary (n_train + n_test) x c drug-label matrix; training rows come first.

    The training mask J is never stored: it is the prefix ``values[:n_train]``.
    """

    model_config = ConfigDict(
        arbitrary_types_allowed=True,
        frozen=True,
        json_schema_extra={
            "example": {
                "values": [[1, 0, 1], [0, 1, 0], [0, 0, 0]],
                "n_train": 2,
                "n_test": 1,
                "label_names": ["levodopa", "pramipexole", "amantadine"],
            }
        },
    )

    values: np.ndarray
    n_train: int
    n_test: int = 0
    label_names: List[str] = Field(default_factory=list)

    coerce_values = field_validator("values", mode="before")(_frozen)

    @property
    def n_rows(self) -> int:
        return int(self.values.shape[0])

    @property
    def n_labels(self) -> int:
        return int(self.values.shape[1]) if self.values.ndim == 2 else 0

    @property
    def train_values(self) -> np.ndarray:
        return self.values[: self.n_train]

    def names(self) -> List[str]:
        return list(self.label_names) or [f"label_{j}" for j in range(self.n_labels)]

    def masked(self) -> "LabelMatrix":
        """Copy with the withheld (test) rows zeroed."""
        values = np.array(self.values)
        values[self.n_train:] = 0.0
        return self.model_copy(update={"values": _frozen(values)})


# ============================
# MODALITY MATRIX / VIEW
# ============================
class ModalityKind(str, Enum):
    RAW_FEATURE = "raw_feature"
    KERNEL = "kernel"


class ModalityMatrix(BaseModel):
    """One (n+m) x d_i representation of the samples."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    values: np.ndarray
    kind: ModalityKind = ModalityKind.RAW_FEATURE
    anchor_ids: List[str] = Field(default_factory=list)
    name: str = ""

    coerce_values = field_validator("values", mode="before")(_frozen)

    @property
    def n_rows(self) -> int:
        return int(self.values.shape[0])

    @property
    def dim(self) -> int:
        return int(self.values.shape[1]) if self.values.ndim == 2 else 0


class MultiModalView(BaseModel):
    """The s modalities over a shared, ordered set of samples.

    ``recipe`` is the JSON document produced by ``app.views.assemble_view``
    (scaling statistics, kernel specs, anchor features); it lets unseen
    samples be mapped into the same modalities.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    modalities: List[ModalityMatrix]
    sample_ids: List[str] = Field(default_factory=list)
    recipe: Optional[Dict[str, Any]] = None

    @property
    def s(self) -> int:
        return len(self.modalities)

    @property
    def n_rows(self) -> int:
        return self.modalities[0].n_rows if self.modalities else 0

    @property
    def dims(self) -> List[int]:
        return [m.dim for m in self.modalities]

    def ids(self) -> List[str]:
        return list(self.sample_ids) or [str(i) for i in range(self.n_rows)]

    def take_rows(self, order: Sequence[int]) -> "MultiModalView":
        """Reorder/select rows; kernel columns (anchors) are left untouched."""
        order = np.asarray(order, dtype=int)
        ids = self.ids()
        return MultiModalView(
            modalities=[m.model_copy(update={"values": _frozen(m.values[order])}) for m in self.modalities],
            sample_ids=[ids[i] for i in order],
            recipe=self.recipe,
        )

    def select(self, rows: Sequence[int], anchors: Sequence[int]) -> "MultiModalView":
        """Select rows and restrict kernel modalities to the given anchor columns."""
        rows = np.asarray(rows, dtype=int)
        anchors = np.asarray(anchors, dtype=int)
        ids = self.ids()
        modalities = []
        for m in self.modalities:
            if m.kind == ModalityKind.KERNEL:
                modalities.append(m.model_copy(update={
                    "values": _frozen(m.values[np.ix_(rows, anchors)]),
                    "anchor_ids": [m.anchor_ids[a] for a in anchors],
                }))
            else:
                modalities.append(m.model_copy(update={"values": _frozen(m.values[rows])}))
        return MultiModalView(modalities=modalities, sample_ids=[ids[i] for i in rows], recipe=None)


# ============================
# MODEL STATE
# ============================
class ModelState(BaseModel):
    """Learned model: U_1..U_s (d_i x k), P ((n+m) x k), V (k x c) and its hyperparameters."""

    model_config = ConfigDict(
        arbitrary_types_allowed=True,
        frozen=True,
        json_schema_extra={
            "example": {
                "alpha": 0.3,
                "beta": 0.1,
                "k": 50,
                "modality_dims": [55, 143, 136, 136, 136, 136],
            }
        },
    )

    U: List[np.ndarray]
    P: np.ndarray
    V: np.ndarray
    alpha: float
    beta: float
    k: int
    modality_kinds: List[ModalityKind] = Field(default_factory=list)
    anchor_ids: List[str] = Field(default_factory=list)
    label_names: List[str] = Field(default_factory=list)
    n_train: int = 0
    recipe: Optional[Dict[str, Any]] = None

    coerce_matrices = field_validator("P", "V", mode="before")(_frozen)

    @field_validator("U", mode="before")
    @classmethod
    def coerce_factors(cls, value):
        return [_frozen(u) for u in value]

    @property
    def s(self) -> int:
        return len(self.U)

    @property
    def modality_dims(self) -> List[int]:
        return [int(u.shape[0]) for u in self.U]

    @property
    def n_labels(self) -> int:
        return int(self.V.shape[1])

    def check_consistent(self) -> None:
        """Raise DimensionMismatch / NonFiniteValue if the matrices do not fit together."""
        if self.V.ndim != 2 or self.V.shape[0] != self.k:
            raise DimensionMismatch("V", detail=f"expected {self.k} rows, got shape {self.V.shape}")
        if self.P.ndim != 2 or self.P.shape[1] != self.k:
            raise DimensionMismatch("P", detail=f"expected {self.k} columns, got shape {self.P.shape}")
        for i, u in enumerate(self.U):
            if u.ndim != 2 or u.shape[1] != self.k:
                raise DimensionMismatch(f"U[{i}]", detail=f"expected {self.k} columns, got shape {u.shape}")
        if self.modality_kinds and len(self.modality_kinds) != len(self.U):
            raise DimensionMismatch("modality_kinds", detail=f"{len(self.modality_kinds)} kinds for {len(self.U)} modalities")
        for name, arr in [("P", self.P), ("V", self.V)] + [(f"U[{i}]", u) for i, u in enumerate(self.U)]:
            bad = ~np.isfinite(arr)
            if bad.any():
                raise NonFiniteValue(name, _first_index(bad), "non-finite entry")

    def to_document(self) -> Dict[str, Any]:
        """Convert to a JSON-ready document (row-major nested lists, repr-exact floats)."""
        return {
            "alpha": float(self.alpha),
            "beta": float(self.beta),
            "k": int(self.k),
            "U": [u.tolist() for u in self.U],
            "P": self.P.tolist(),
            "V": self.V.tolist(),
            "modality_dims": self.modality_dims,
            "modality_kinds": [kind.value for kind in self.modality_kinds],
            "anchor_ids": list(self.anchor_ids),
            "label_names": list(self.label_names),
            "n_train": int(self.n_train),
            "view": self.recipe,
        }

    @classmethod
    def from_document(cls, doc: Dict[str, Any]) -> "ModelState":
        k = int(doc["k"])
        U = [np.array(u, dtype=np.float64).reshape(-1, k) for u in doc["U"]]
        state = cls(
            U=U,
            P=np.array(doc["P"], dtype=np.float64).reshape(-1, k),
            V=np.array(doc["V"], dtype=np.float64).reshape(k, -1),
            alpha=float(doc["alpha"]),
            beta=float(doc["beta"]),
            k=k,
            modality_kinds=[ModalityKind(kind) for kind in doc.get("modality_kinds", [])],
            anchor_ids=list(doc.get("anchor_ids", [])),
            label_names=list(doc.get("label_names", [])),
            n_train=int(doc.get("n_train", 0)),
            recipe=doc.get("view"),
        )
        dims = doc.get("modality_dims")
        if dims is not None and list(dims) != state.modality_dims:
            raise DimensionMismatch("modality_dims", detail=f"declared {list(dims)}, U has {state.modality_dims}")
        state.check_consistent()
        return state


# ============================
# VALIDATION
# ============================
def validate(view: MultiModalView, labels: LabelMatrix) -> Optional[DataModelError]:
    """Check every data-model invariant. Returns None when valid, the error otherwise (never raises)."""
    try:
        Y = labels.values
        if Y.ndim != 2:
            return DimensionMismatch("Y", detail=f"expected a matrix, got {Y.ndim} dimension(s)")
        if Y.shape[1] < 1:
            return DimensionMismatch("Y", detail="at least one label column is required")
        if labels.n_train < 1:
            return DimensionMismatch("Y", detail="at least one training row is required")
        if labels.n_test < 0 or labels.n_train + labels.n_test != Y.shape[0]:
            return DimensionMismatch(
                "Y", detail=f"n_train + n_test = {labels.n_train + labels.n_test} but Y has {Y.shape[0]} rows"
            )
        if labels.label_names and len(labels.label_names) != Y.shape[1]:
            return DimensionMismatch("label_names", detail=f"{len(labels.label_names)} names for {Y.shape[1]} labels")
        bad = ~np.isfinite(Y)
        if bad.any():
            return NonFiniteValue("Y", _first_index(bad), "non-finite entry")
        bad = (Y != 0.0) & (Y != 1.0)
        if bad.any():
            idx = _first_index(bad)
            return NonBinaryLabel("Y", idx, f"entry {Y[idx]!r} is not 0 or 1")
        withheld = Y[labels.n_train:] != 0.0
        if withheld.any():
            row, col = _first_index(withheld)
            return NonBinaryLabel("Y", (row + labels.n_train, col), "withheld row is not zero")

        if view.s < 1:
            return DimensionMismatch("X", detail="at least one modality is required")
        if view.sample_ids and len(view.sample_ids) != Y.shape[0]:
            return DimensionMismatch("sample_ids", detail=f"{len(view.sample_ids)} ids for {Y.shape[0]} rows")
        for i, modality in enumerate(view.modalities):
            name = f"X[{i}]"
            X = modality.values
            if X.ndim != 2:
                return DimensionMismatch(name, detail=f"expected a matrix, got {X.ndim} dimension(s)")
            if X.shape[0] != Y.shape[0]:
                return DimensionMismatch(name, detail=f"{X.shape[0]} rows but labels have {Y.shape[0]}")
            if X.shape[1] < 1:
                return DimensionMismatch(name, detail="no columns")
            if modality.kind == ModalityKind.KERNEL and X.shape[1] != len(modality.anchor_ids):
                return DimensionMismatch(name, detail=f"{X.shape[1]} kernel columns for {len(modality.anchor_ids)} anchors")
            bad = ~np.isfinite(X)
            if bad.any():
                return NonFiniteValue(name, _first_index(bad), "non-finite entry")
    except Exception as e:  # keep validate total
        return DataModelError("input", detail=f"unexpected structure: {e}")
    return None


def ensure_valid(view: MultiModalView, labels: LabelMatrix) -> None:
    error = validate(view, labels)
    if error is not None:
        raise error
