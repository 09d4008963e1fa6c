import numpy as np
import pytest

from core.errors import DimensionMismatch, EmptyInput, NegativeFeature
from core.models import ModalityKind, ModalityMatrix
from app.views import (
    DEFAULT_KERNELS,
    KernelKind,
    KernelSpec,
    ScalingKind,
    ScalingSpec,
    ViewRecipe,
    apply_scaling,
    assemble_view,
    fit_scaling,
    gram_matrix,
    kernel_row,
    map_samples,
)


@pytest.fixture
def features():
    rng = np.random.default_rng(3)
    motor = ModalityMatrix(values=rng.normal(2.0, 3.0, size=(9, 4)), name="motor")
    nonmotor = ModalityMatrix(values=rng.normal(-1.0, 0.5, size=(9, 5)), name="nonmotor")
    return motor, nonmotor


def test_zscore_columns_are_standardized(features):
    motor, _ = features
    scaled = apply_scaling(motor.values, fit_scaling(motor.values, ScalingKind.ZSCORE))
    np.testing.assert_allclose(scaled.mean(axis=0), 0.0, atol=1e-12)
    np.testing.assert_allclose(scaled.std(axis=0), 1.0, atol=1e-12)


def test_minmax_maps_to_unit_interval(features):
    motor, _ = features
    scaled = apply_scaling(motor.values, fit_scaling(motor.values, ScalingKind.MINMAX))
    np.testing.assert_allclose(scaled.min(axis=0), 0.0, atol=1e-12)
    np.testing.assert_allclose(scaled.max(axis=0), 1.0, atol=1e-12)


def test_constant_column_scales_to_zero():
    values = np.array([[1.0, 5.0], [2.0, 5.0], [3.0, 5.0]])
    for kind in (ScalingKind.ZSCORE, ScalingKind.MINMAX):
        scaled = apply_scaling(values, fit_scaling(values, kind))
        np.testing.assert_array_equal(scaled[:, 1], 0.0)


def test_scaling_statistics_width_must_match():
    spec = fit_scaling(np.ones((3, 2)), ScalingKind.ZSCORE)
    with pytest.raises(DimensionMismatch):
        apply_scaling(np.ones((3, 3)), spec)


@pytest.mark.parametrize("spec", DEFAULT_KERNELS, ids=lambda s: s.kind.value)
def test_gram_is_symmetric_with_unit_diagonal_where_expected(spec):
    rng = np.random.default_rng(0)
    X = ModalityMatrix(values=rng.random((7, 5)))
    K = gram_matrix(X, spec).values
    assert K.shape == (7, 7)
    np.testing.assert_array_equal(K, K.T)
    if spec.kind != KernelKind.LINEAR:
        # gaussian by construction, histogram kernels on L1-normalized rows
        np.testing.assert_allclose(np.diag(K), 1.0, atol=1e-12)


def test_linear_gram_is_inner_products():
    rng = np.random.default_rng(1)
    X = rng.standard_normal((6, 3))
    K = gram_matrix(ModalityMatrix(values=X), KernelSpec(kind=KernelKind.LINEAR)).values
    np.testing.assert_allclose(K, X @ X.T, atol=1e-12)


def test_gaussian_with_fixed_sigma():
    X = np.array([[0.0, 0.0], [3.0, 4.0]])
    K = gram_matrix(ModalityMatrix(values=X), KernelSpec(kind=KernelKind.GAUSSIAN, gaussian_sigma=5.0)).values
    np.testing.assert_allclose(K[0, 1], np.exp(-25.0 / 50.0))


def test_chi_square_on_raw_histograms():
    raw = KernelSpec(kind=KernelKind.CHI_SQUARE, histogram_minmax=False, histogram_normalize=False)
    disjoint = gram_matrix(ModalityMatrix(values=np.array([[1.0, 0.0], [0.0, 1.0]])), raw).values
    assert disjoint[0, 1] == 0.0
    assert disjoint[0, 0] == 1.0
    same = gram_matrix(ModalityMatrix(values=np.array([[1.0, 1.0], [1.0, 1.0]])), raw).values
    np.testing.assert_array_equal(same, 2.0)


@pytest.mark.parametrize("spec", DEFAULT_KERNELS, ids=lambda s: s.kind.value)
def test_kernel_row_of_anchor_equals_gram_row(spec):
    rng = np.random.default_rng(2)
    anchors = ModalityMatrix(values=rng.standard_normal((8, 4)))
    K = gram_matrix(anchors, spec).values
    for i in range(anchors.n_rows):
        np.testing.assert_array_equal(kernel_row(anchors.values[i], anchors, spec), K[i])


def test_histogram_kernel_rejects_negative_features():
    X = ModalityMatrix(values=np.array([[1.0, -0.5], [0.2, 0.3]]))
    spec = KernelSpec(kind=KernelKind.CHI_SQUARE, histogram_minmax=False)
    with pytest.raises(NegativeFeature):
        gram_matrix(X, spec)


def test_empty_kernel_input():
    with pytest.raises(EmptyInput):
        gram_matrix(ModalityMatrix(values=np.zeros((0, 3))), KernelSpec(kind=KernelKind.LINEAR))


def test_kernel_row_width_must_match_anchors():
    anchors = ModalityMatrix(values=np.ones((3, 2)))
    with pytest.raises(DimensionMismatch):
        kernel_row(np.ones(3), anchors, KernelSpec(kind=KernelKind.LINEAR))


def test_assemble_view_layout(features):
    motor, nonmotor = features
    ids = [f"p{i}" for i in range(9)]
    view = assemble_view(motor, nonmotor, ScalingSpec(), DEFAULT_KERNELS, sample_ids=ids)
    assert view.s == 2 + len(DEFAULT_KERNELS)
    assert view.dims == [4, 5, 9, 9, 9, 9]
    assert [m.kind for m in view.modalities[:2]] == [ModalityKind.RAW_FEATURE] * 2
    assert all(m.kind == ModalityKind.KERNEL and m.anchor_ids == ids for m in view.modalities[2:])
    assert ViewRecipe.from_document(view.recipe).dims == view.dims


def test_assemble_view_without_kernels(features):
    motor, nonmotor = features
    view = assemble_view(motor, nonmotor, ScalingSpec(kind=ScalingKind.NONE), [])
    assert view.s == 2
    np.testing.assert_array_equal(view.modalities[0].values, motor.values)


def test_map_samples_reproduces_training_rows(features):
    motor, nonmotor = features
    view = assemble_view(motor, nonmotor, ScalingSpec(), DEFAULT_KERNELS)
    recipe = ViewRecipe.from_document(view.recipe)
    rows = map_samples(recipe, motor.values[[2, 5]], nonmotor.values[[2, 5]])
    assert len(rows) == view.s
    for mapped, modality in zip(rows, view.modalities):
        np.testing.assert_allclose(mapped, modality.values[[2, 5]], rtol=0, atol=1e-12)


def test_map_samples_rejects_wrong_width(features):
    motor, nonmotor = features
    recipe = ViewRecipe.from_document(assemble_view(motor, nonmotor, ScalingSpec(), []).recipe)
    with pytest.raises(DimensionMismatch):
        map_samples(recipe, np.ones((2, 3)), np.ones((2, 5)))


def test_map_samples_accepts_zero_rows(features):
    motor, nonmotor = features
    recipe = ViewRecipe.from_document(assemble_view(motor, nonmotor, ScalingSpec(), DEFAULT_KERNELS).recipe)
    rows = map_samples(recipe, np.zeros((0, 4)), np.zeros((0, 5)))
    assert [r.shape for r in rows] == [(0, 4), (0, 5), (0, 9), (0, 9), (0, 9), (0, 9)]
