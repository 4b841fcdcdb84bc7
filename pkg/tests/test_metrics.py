import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from swan.errors import DegenerateReceiverError
from swan.fc import wmmse_digital_update, wmmse_weight_update
from swan.geometry import RadioConfig
from swan.metrics import (BeamformerState, EnergyModel, energy_efficiency, mse_all,
                          mse_per_user, sinr, sinr_all, sum_rate, user_rates,
                          weighted_mse_objective)

from .helpers import crandn, unit_phases

SCALAR = RadioConfig(P=1.0, sigma2=1.0)


def scalar_state(w):
    return BeamformerState(np.array([[1.0]]), np.array([[w]]))


def random_instance(seed, M=8, N=4, K=2):
    rng = np.random.default_rng(seed)
    W = unit_phases(rng, M, N)
    H = crandn(rng, M, K)
    return W, H


# -- SINR and rate -------------------------------------------------------------

def test_scalar_sinr_is_one():
    assert sinr(scalar_state(1.0), np.array([[1.0]]), SCALAR, 0) == pytest.approx(1.0)
    assert sum_rate(scalar_state(1.0), np.array([[1.0]]), SCALAR) == pytest.approx(1.0)


@given(st.integers(0, 10 ** 6), st.floats(0.1, 10), st.floats(-np.pi, np.pi))
def test_sinr_invariant_to_receiver_scaling(seed, mag, phase):
    W, H = random_instance(seed)
    rng = np.random.default_rng(seed + 1)
    st_ = BeamformerState(W, crandn(rng, 4, 2))
    base = sinr_all(st_, H, SCALAR)
    scaled = st_.copy()
    scaled.G_BB[:, 0] *= mag * np.exp(1j * phase)
    np.testing.assert_allclose(sinr_all(scaled, H, SCALAR), base, rtol=1e-12)


def test_orthogonal_channels_have_no_interference():
    H = np.eye(3, dtype=complex)
    st_ = BeamformerState(np.eye(3), np.eye(3))
    radio = RadioConfig(P=1.0, sigma2=0.5)
    # with zero interference SINR = |h|^2 / (sigma2 / P)
    np.testing.assert_allclose(sinr_all(st_, H, radio), 2.0)


def test_degenerate_receiver_raises():
    st_ = BeamformerState(np.ones((2, 1)), np.zeros((1, 1)))
    with pytest.raises(DegenerateReceiverError):
        sinr_all(st_, np.ones((2, 1)), SCALAR)


def test_symmetric_users_have_equal_rates():
    H = np.array([[1.0, 0.0], [0.0, 1.0]], complex)
    st_ = BeamformerState(np.eye(2), np.eye(2))
    r = user_rates(st_, H, SCALAR)
    assert r[0] == pytest.approx(r[1])


@given(st.integers(0, 10 ** 6))
def test_sum_rate_invariant_under_user_permutation(seed):
    W, H = random_instance(seed, K=3)
    G = crandn(np.random.default_rng(seed), 4, 3)
    perm = [2, 0, 1]
    a = sum_rate(BeamformerState(W, G), H, SCALAR)
    b = sum_rate(BeamformerState(W, G[:, perm]), H[:, perm], SCALAR)
    assert a == pytest.approx(b, rel=1e-12)


# -- MSE -----------------------------------------------------------------------

def test_zero_receiver_mse_equals_power():
    radio = RadioConfig(P=0.3, sigma2=0.1)
    st_ = BeamformerState(np.ones((2, 1)), np.zeros((1, 2)))
    np.testing.assert_allclose(mse_all(st_, np.ones((2, 2)), radio), 0.3)


def test_scalar_mse_example():
    # P|w h|^2 - 2P Re(w h) + sigma2 |w|^2 + P = 0.25 - 1 + 0.25 + 1
    assert mse_per_user(scalar_state(0.5), np.array([[1.0]]), SCALAR, 0) == pytest.approx(0.5)


def test_mse_matches_expectation_definition(unit_radio):
    # e_k = E|g^H y - s_k|^2 with y = H s + n, E|s|^2 = P, E nn^H = sigma2 I
    W, H = random_instance(3)
    G = crandn(np.random.default_rng(4), 4, 2)
    V = W @ G
    P, s2 = unit_radio.P, unit_radio.sigma2
    for k in range(2):
        a = V[:, k].conj() @ H
        target = np.zeros(2)
        target[k] = 1
        e = P * np.sum(np.abs(a - target) ** 2) + s2 * np.linalg.norm(V[:, k]) ** 2
        assert mse_per_user(BeamformerState(W, G), H, unit_radio, k) == pytest.approx(e)


@pytest.mark.parametrize("seed", range(10))
def test_mmse_identity_and_rate_from_mse(seed):
    radio = RadioConfig(P=1.0, sigma2=0.05)
    W, H = random_instance(seed)
    st_ = BeamformerState(W, wmmse_digital_update(W, H, radio))
    e = mse_all(st_, H, radio)
    g = sinr_all(st_, H, radio)
    np.testing.assert_allclose(e * (1 + g), radio.P, rtol=1e-9)
    assert sum_rate(st_, H, radio) == pytest.approx(-np.sum(np.log2(e / radio.P)), rel=1e-9)


def test_weighted_objective_identities():
    W, H = random_instance(7)
    radio = RadioConfig(P=1.0, sigma2=0.2)
    st_ = BeamformerState(W, crandn(np.random.default_rng(8), 4, 2))
    e = mse_all(st_, H, radio)
    assert weighted_mse_objective(st_, H, radio) == pytest.approx(e.sum())
    st_.omega = wmmse_weight_update(e)
    assert weighted_mse_objective(st_, H, radio) == pytest.approx(np.sum(1 + np.log(e)))


# -- state and energy ----------------------------------------------------------

def test_state_check():
    st_ = BeamformerState(np.exp(1j * np.ones((3, 2))), np.zeros((2, 1)))
    st_.check()
    bad = st_.copy()
    bad.G_RF[0, 0] = 2.0
    with pytest.raises(ValueError):
        bad.check()
    mask = np.array([[True, False], [False, True], [True, False]])
    sparse = BeamformerState(np.where(mask, 1.0, 0.0), np.zeros((2, 1)), mask)
    sparse.check()
    sparse.G_RF[0, 1] = 1.0
    with pytest.raises(ValueError):
        sparse.check()


def test_energy_efficiency_examples():
    radio = RadioConfig(P=0.01)
    em = EnergyModel()
    assert energy_efficiency(10, radio, em, 25, 50, 1250) == pytest.approx(10 / 20.01)
    assert energy_efficiency(10, radio, em, 25, 50, 1250) == pytest.approx(0.49975, abs=1e-5)
    assert energy_efficiency(10, radio, em, 25, 50, 50) == pytest.approx(10 / 8.01)
    assert energy_efficiency(10, radio, em, 25, 50, 50) == pytest.approx(1.2484, abs=1e-4)
    assert energy_efficiency(0, radio, em, 25, 50, 50) == 0


@given(st.integers(0, 5000), st.integers(1, 100))
def test_energy_efficiency_decreases_in_phase_shifters(n_ps, extra):
    radio = RadioConfig()
    em = EnergyModel()
    assert (energy_efficiency(5.0, radio, em, 4, 16, n_ps + extra)
            < energy_efficiency(5.0, radio, em, 4, 16, n_ps))


def test_energy_model_rejects_nonpositive():
    with pytest.raises(ValueError):
        EnergyModel(P_PS=0)
