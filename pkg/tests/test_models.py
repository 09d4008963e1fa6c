import numpy as np
import pytest

from core.errors import DimensionMismatch, NonBinaryLabel, NonFiniteValue
from core.models import (
    LabelMatrix,
    ModalityKind,
    ModalityMatrix,
    ModelState,
    MultiModalView,
    ensure_valid,
    validate,
)
from factories import random_problem, random_state


def test_valid_problem_passes():
    view, labels = random_problem(0)
    assert validate(view, labels) is None


def test_non_binary_label_names_index():
    view, labels = random_problem(1)
    Y = np.array(labels.values)
    Y[2, 1] = 0.5
    error = validate(view, labels.model_copy(update={"values": Y}))
    assert isinstance(error, NonBinaryLabel)
    assert error.matrix == "Y"
    assert error.index == (2, 1)


def test_non_finite_feature_names_modality_and_index():
    view, labels = random_problem(2)
    X = np.array(view.modalities[1].values)
    X[4, 0] = np.nan
    broken = MultiModalView(modalities=[view.modalities[0], ModalityMatrix(values=X)])
    error = validate(broken, labels)
    assert isinstance(error, NonFiniteValue)
    assert error.matrix == "X[1]"
    assert error.index == (4, 0)


def test_row_count_mismatch():
    view, labels = random_problem(3)
    short = MultiModalView(modalities=[ModalityMatrix(values=np.ones((3, 2)))])
    with pytest.raises(DimensionMismatch):
        ensure_valid(short, labels)


def test_train_test_counts_must_cover_rows():
    view, labels = random_problem(4)
    bad = LabelMatrix(values=labels.values, n_train=labels.n_train, n_test=0)
    assert isinstance(validate(view, bad), DimensionMismatch)


def test_withheld_rows_must_be_zero():
    view, labels = random_problem(4)
    Y = np.array(labels.values)
    Y[7, 2] = 1.0
    unmasked = labels.model_copy(update={"values": Y})
    error = validate(view, unmasked)
    assert isinstance(error, NonBinaryLabel)
    assert error.index == (7, 2)
    assert "withheld" in error.detail
    assert validate(view, unmasked.masked()) is None


def test_kernel_columns_must_match_anchors():
    view, labels = random_problem(5)
    kernel = ModalityMatrix(values=np.eye(8), kind=ModalityKind.KERNEL, anchor_ids=["a", "b"])
    error = validate(MultiModalView(modalities=[kernel]), labels)
    assert isinstance(error, DimensionMismatch)
    assert error.matrix == "X[0]"


def test_arrays_are_read_only_copies():
    raw = np.zeros((2, 2))
    labels = LabelMatrix(values=raw, n_train=2)
    raw[0, 0] = 1.0
    assert labels.values[0, 0] == 0.0
    with pytest.raises(ValueError):
        labels.values[0, 0] = 1.0


def test_masked_zeroes_test_rows_only():
    Y = np.array([[1, 0], [0, 1], [1, 1]], dtype=float)
    masked = LabelMatrix(values=Y, n_train=2, n_test=1).masked()
    np.testing.assert_array_equal(masked.values, [[1, 0], [0, 1], [0, 0]])


def test_select_restricts_kernel_anchors():
    kernel = ModalityMatrix(
        values=np.arange(9, dtype=float).reshape(3, 3), kind=ModalityKind.KERNEL, anchor_ids=["a", "b", "c"]
    )
    raw = ModalityMatrix(values=np.arange(6, dtype=float).reshape(3, 2))
    view = MultiModalView(modalities=[raw, kernel], sample_ids=["a", "b", "c"])

    picked = view.select([2, 0], [0, 2])
    assert picked.ids() == ["c", "a"]
    np.testing.assert_array_equal(picked.modalities[0].values, [[4, 5], [0, 1]])
    np.testing.assert_array_equal(picked.modalities[1].values, [[6, 8], [0, 2]])
    assert picked.modalities[1].anchor_ids == ["a", "c"]

    reordered = view.take_rows([1, 2, 0])
    assert reordered.modalities[1].dim == 3
    assert reordered.ids() == ["b", "c", "a"]


def test_model_document_round_trip():
    view, labels = random_problem(6)
    state = random_state(6, view, labels, k=3).model_copy(
        update={"modality_kinds": [ModalityKind.RAW_FEATURE] * 2, "label_names": ["x", "y", "z"], "n_train": 6}
    )
    restored = ModelState.from_document(state.to_document())
    for a, b in zip(restored.U, state.U):
        np.testing.assert_array_equal(a, b)
    np.testing.assert_array_equal(restored.P, state.P)
    np.testing.assert_array_equal(restored.V, state.V)
    assert restored.label_names == ["x", "y", "z"]
    assert restored.modality_dims == [4, 3]


def test_model_document_rejects_wrong_dims():
    view, labels = random_problem(7)
    doc = random_state(7, view, labels, k=2).to_document()
    doc["modality_dims"] = [4, 4]
    with pytest.raises(DimensionMismatch):
        ModelState.from_document(doc)
