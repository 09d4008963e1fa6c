import numpy as np
import pytest
from pydantic import ValidationError

from app.synthetic import SyntheticSpec, generate_synthetic


def test_same_seed_same_instance():
    a_view, a_labels, a_planted = generate_synthetic(SyntheticSpec(seed=4))
    b_view, b_labels, b_planted = generate_synthetic(SyntheticSpec(seed=4))
    for a, b in zip(a_view.modalities, b_view.modalities):
        np.testing.assert_array_equal(a.values, b.values)
    np.testing.assert_array_equal(a_labels.values, b_labels.values)
    np.testing.assert_array_equal(a_planted.V, b_planted.V)

    c_view, _, _ = generate_synthetic(SyntheticSpec(seed=5))
    assert not np.array_equal(a_view.modalities[0].values, c_view.modalities[0].values)


def test_default_shape_matches_clinical_data():
    view, labels, planted = generate_synthetic(SyntheticSpec())
    assert view.dims == [55, 143]
    assert [m.name for m in view.modalities] == ["motor", "nonmotor"]
    assert labels.values.shape == (136, 31)
    assert labels.n_train == 136 and labels.n_test == 0
    assert planted.k == 10
    assert view.ids()[0] == "s0000"


def test_label_density_band():
    for seed in range(100):
        _, labels, _ = generate_synthetic(SyntheticSpec(seed=seed))
        assert 0.05 <= labels.values.mean() <= 0.40


def test_threshold_below_everything_gives_all_ones():
    spec = SyntheticSpec(n_samples=20, c=4, noise_sd=0.0, v_sparsity=1.0, label_threshold=float("-inf"))
    _, labels, _ = generate_synthetic(spec)
    assert labels.values.sum() == 20 * 4


def test_planted_columns_are_nonzero_with_unit_norm():
    _, _, planted = generate_synthetic(SyntheticSpec(v_sparsity=0.05, seed=2))
    norms = np.linalg.norm(planted.V, axis=0)
    np.testing.assert_allclose(norms, 1.0, atol=1e-12)


def test_noise_free_features_are_reconstructed_by_planted_factors():
    view, _, planted = generate_synthetic(SyntheticSpec(n_samples=30, noise_sd=0.0, seed=1))
    for modality, U in zip(view.modalities, planted.U):
        np.testing.assert_allclose(modality.values @ U, planted.P, atol=1e-8)


def test_more_than_two_modalities_get_generic_names():
    view, _, _ = generate_synthetic(SyntheticSpec(n_samples=10, modality_dims=[3, 4, 5]))
    assert [m.name for m in view.modalities] == ["modality_0", "modality_1", "modality_2"]


@pytest.mark.parametrize("field, value", [("v_sparsity", 0.0), ("v_sparsity", 1.5), ("modality_dims", []), ("noise_sd", -1.0)])
def test_invalid_spec(field, value):
    with pytest.raises(ValidationError):
        SyntheticSpec(**{field: value})
