import numpy as np
import pytest
from sklearn.base import clone

from ramstap import AnmCovariance, FocussCovariance, RamCovariance, SMICovariance
from ramstap.scene import RadarConfig, draw_snapshots, make_clutter_scenario, space_time_steering

CFG = RadarConfig(num_pulses=3, num_elements=3, num_patches=40, cnr_db=20)


@pytest.fixture(scope="module")
def X():
    return draw_snapshots(make_clutter_scenario(CFG), CFG, 2, 0).data.T


def small(cls, **kw):
    return cls(num_pulses=3, num_elements=3, **kw)


@pytest.mark.parametrize("cls", [SMICovariance, FocussCovariance, AnmCovariance, RamCovariance])
def test_params_roundtrip_through_clone(cls):
    est = small(cls, noise_power=2.0)
    params = est.get_params()
    assert params["noise_power"] == 2.0 and params["num_pulses"] == 3
    twin = clone(est)
    assert twin.get_params() == params and twin is not est
    est.set_params(noise_power=0.5)
    assert est.noise_power == 0.5


@pytest.mark.parametrize("cls", [SMICovariance, FocussCovariance, AnmCovariance, RamCovariance])
def test_fit_produces_hermitian_covariance(cls, X):
    est = small(cls).fit(X)
    R = est.covariance_
    assert R.shape == (9, 9) and est.n_features_in_ == 9
    np.testing.assert_allclose(R, R.conj().T, atol=1e-10)
    assert np.linalg.eigvalsh(R)[0] >= -1e-9


def test_smi_matches_sample_covariance(X):
    R = small(SMICovariance).fit(X).covariance_
    np.testing.assert_allclose(R, X.T @ X.conj() / 2)


def test_gridless_attributes(X):
    est = small(RamCovariance, max_mm_iterations=2).fit(X)
    assert est.result_.mm_iterations <= 2
    assert est.denoised_.shape == X.shape
    assert 0 <= est.clutter_rank_ <= 9
    assert np.linalg.eigvalsh(est.covariance_)[0] >= 1.0 - 1e-6


def test_anm_is_single_mm_step(X):
    anm = small(AnmCovariance).fit(X)
    assert anm.result_.mm_iterations == 1
    assert "max_mm_iterations" not in anm.get_params()


def test_focuss_attributes(X):
    est = small(FocussCovariance, rho_s=2, rho_d=2).fit(X)
    assert est.dictionary_.num_atoms == 36
    assert est.profile_.coefficients.shape == (36, 2)


def test_weights_solve_loaded_system(X):
    est = small(SMICovariance).fit(X)
    s = space_time_steering(0.1, 0.0, 3, 3)
    w = est.weights(s)
    np.testing.assert_allclose((est.covariance_ + np.eye(9)) @ w, s, atol=1e-10)
    S = np.column_stack([s, space_time_steering(-0.2, 0.0, 3, 3)])
    assert est.weights(S, loading=0.5).shape == (9, 2)


def test_unfitted_weights_raise():
    from sklearn.exceptions import NotFittedError
    with pytest.raises(NotFittedError):
        small(SMICovariance).weights(np.ones(9))


def test_input_validation(X):
    with pytest.raises(ValueError, match="features"):
        small(SMICovariance).fit(X[:, :8])
    bad = X.copy()
    bad[0, 0] = np.nan
    with pytest.raises(ValueError, match="NaN"):
        small(SMICovariance).fit(bad)
    with pytest.raises(ValueError):
        small(SMICovariance, noise_power=1.0).set_params(num_pulses=0).fit(X)


def test_single_snapshot_vector_is_accepted(X):
    R = small(SMICovariance).fit(X[0]).covariance_
    np.testing.assert_allclose(R, np.outer(X[0], X[0].conj()))
