import mpmath as mp
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from swan.errors import FeasibilityError, SingularGeometryError
from swan.geometry import (SPEED_OF_LIGHT, GeometryConfig, RadioConfig, SwanChannel,
                           as_users, channel_entries, free_space_channel, is_feasible, sample_users,
                           uplink_channel, waveguide_response)

mp.mp.dps = 40


def _eta_oracle(f_c):
    lam = mp.mpf(SPEED_OF_LIGHT) / mp.mpf(f_c)
    return lam ** 2 / (16 * mp.pi ** 2)


# -- derived constants ---------------------------------------------------------

def test_derived_constants_match_high_precision():
    r = RadioConfig()
    assert r.lambda_c == pytest.approx(1.07068735e-2, rel=1e-8)
    assert r.eta == pytest.approx(float(_eta_oracle(28e9)), rel=1e-13)
    assert r.eta == pytest.approx(7.2596e-7, rel=1e-4)


@given(st.floats(1e8, 3e11), st.floats(1.0, 4.0))
def test_derived_identities(f_c, n_eff):
    r = RadioConfig(f_c=f_c, n_eff=n_eff)
    assert r.lambda_g * r.n_eff == pytest.approx(r.lambda_c, rel=1e-12)
    assert 16 * np.pi ** 2 * r.eta == pytest.approx(r.lambda_c ** 2, rel=1e-12)


@pytest.mark.parametrize("kw", [dict(P=0), dict(sigma2=-1), dict(kappa=-0.1),
                                dict(n_eff=0.9), dict(f_c=0)])
def test_radio_rejects_bad_values(kw):
    with pytest.raises(ValueError):
        RadioConfig(**kw)


def test_geometry_layout():
    g = GeometryConfig(D_x=80, M=50)
    assert g.L == 80 / 50
    np.testing.assert_allclose(g.feed_x, np.arange(50) * 1.6)
    assert g.delta_min == pytest.approx(RadioConfig().lambda_c / 2)
    with pytest.raises(ValueError):
        GeometryConfig(M=0)
    with pytest.raises(ValueError):
        GeometryConfig(H=0)


# -- free space ----------------------------------------------------------------

def test_free_space_magnitude_directly_below():
    g = GeometryConfig(D_x=1, M=1)
    h = free_space_channel(g, RadioConfig(), [0.0], [0, 0, 0])
    oracle = mp.sqrt(_eta_oracle(28e9)) / 3
    assert abs(h[0]) == pytest.approx(float(oracle), rel=1e-12)
    assert abs(h[0]) == pytest.approx(2.8401e-4, rel=1e-4)


def test_free_space_phase():
    g = GeometryConfig(D_x=1, M=1)
    r = RadioConfig()
    h = free_space_channel(g, r, [0.5], [0.1, 2.0, 0])
    dist = np.sqrt(0.4 ** 2 + 2.0 ** 2 + 9.0)
    expected = np.sqrt(r.eta) / dist * np.exp(-2j * np.pi * dist / r.lambda_c)
    assert h[0] == pytest.approx(expected, rel=1e-12)


def test_free_space_independent_of_kappa():
    g = GeometryConfig(D_x=4, M=2)
    x = [0.7, 3.1]
    a = free_space_channel(g, RadioConfig(kappa=0.0), x, [1.0, 2.0, 0])
    b = free_space_channel(g, RadioConfig(kappa=0.08), x, [1.0, 2.0, 0])
    np.testing.assert_array_equal(a, b)


def test_mirror_users_have_equal_magnitude():
    g = GeometryConfig(D_x=4, M=1)
    r = RadioConfig()
    a = free_space_channel(g, r, [2.0], [1.3, 5.0, 0])
    b = free_space_channel(g, r, [2.0], [2.7, 5.0, 0])
    assert abs(a[0]) == pytest.approx(abs(b[0]), rel=1e-14)


def test_coincident_user_is_singular():
    # a zero-height receiver lets a user coincide with a PA
    with pytest.raises(SingularGeometryError):
        channel_entries(np.array([1.0]), np.array([[1.0, 0.0, 0.0]]), RadioConfig(), 0.0)


def test_users_must_be_on_ground():
    with pytest.raises(ValueError):
        as_users([[1.0, 2.0, 0.5]])
    assert as_users([[1.0, 2.0]]).shape == (1, 3)


def test_infeasible_positions_are_rejected():
    g = GeometryConfig(D_x=2, M=2)
    with pytest.raises(FeasibilityError):
        free_space_channel(g, RadioConfig(), [1.2, 1.5], [0, 0, 0])


# -- waveguide -----------------------------------------------------------------

def test_waveguide_at_feed_is_one():
    g = GeometryConfig(D_x=2, M=2)
    w = waveguide_response(g, RadioConfig(), [0.0, 1.0])
    np.testing.assert_array_equal(w, [1 + 0j, 1 + 0j])


def test_waveguide_loss_one_meter():
    g = GeometryConfig(D_x=2, M=1)
    w = waveguide_response(g, RadioConfig(kappa=0.08), [1.0])
    assert abs(w[0]) == pytest.approx(10 ** -0.004, rel=1e-14)
    assert abs(w[0]) == pytest.approx(0.99083, abs=5e-6)


@given(st.floats(0, 1))
def test_lossless_waveguide_has_unit_magnitude(x):
    g = GeometryConfig(D_x=1, M=1)
    w = waveguide_response(g, RadioConfig(kappa=0.0), [x])
    assert abs(w[0]) == pytest.approx(1.0, abs=1e-15)


# -- uplink channel ------------------------------------------------------------

def test_single_pa_at_feed_above_user():
    g = GeometryConfig(D_x=1, M=1)
    r = RadioConfig()
    H = uplink_channel(g, r, [0.0], [[0, 0, 0]])
    assert abs(H[0, 0]) == pytest.approx(np.sqrt(r.eta) / g.H, rel=1e-14)


positions = st.lists(st.floats(0, 1), min_size=3, max_size=3)
user_xy = st.tuples(st.floats(0, 3), st.floats(0, 5))


@given(positions, st.lists(user_xy, min_size=1, max_size=4), st.floats(0, 0.5))
def test_channel_magnitude_formula(frac, users, kappa):
    g = GeometryConfig(D_x=3, M=3)
    r = RadioConfig(kappa=kappa)
    x = g.feed_x + np.array(frac) * g.L * 0.98 + 0.01 * g.L
    U = np.array([[ux, uy, 0.0] for ux, uy in users])
    H = uplink_channel(g, r, x, U)
    fs = np.column_stack([free_space_channel(g, r, x, u) for u in U])
    wg = waveguide_response(g, r, x)
    np.testing.assert_allclose(H, fs * wg[:, None], rtol=1e-14)
    dist = np.sqrt((x[:, None] - U[:, 0]) ** 2 + U[:, 1] ** 2 + g.H ** 2)
    delta = np.abs(g.feed_x - x)
    expected = np.sqrt(r.eta) / dist * 10 ** (-kappa * delta / 20)[:, None]
    np.testing.assert_allclose(np.abs(H), expected, rtol=1e-12)


@given(st.floats(0, 5), st.floats(0.01, 5))
def test_magnitude_decays_with_distance(y, dy):
    g = GeometryConfig(D_x=1, M=1)
    r = RadioConfig()
    near = uplink_channel(g, r, [0.5], [[0.5, y, 0]])
    far = uplink_channel(g, r, [0.5], [[0.5, y + dy, 0]])
    assert abs(far[0, 0]) < abs(near[0, 0])


def test_lossless_feed_positions_equal_free_space():
    g = GeometryConfig(D_x=4, M=4)
    r = RadioConfig(kappa=0.0)
    U = [[0.3, 1.0, 0], [3.3, 4.0, 0]]
    H = uplink_channel(g, r, g.feed_x, U)
    fs = np.column_stack([free_space_channel(g, r, g.feed_x, u) for u in U])
    np.testing.assert_array_equal(H, fs)


def test_permuting_users_permutes_columns(rng):
    g = GeometryConfig(M=8)
    r = RadioConfig()
    U = sample_users(g, 4, rng)
    perm = [2, 0, 3, 1]
    x = g.midpoints()
    np.testing.assert_array_equal(uplink_channel(g, r, x, U)[:, perm],
                                  uplink_channel(g, r, x, U[perm]))


def test_swan_channel_rows_match_matrix(rng):
    g = GeometryConfig(M=4)
    ch = SwanChannel(g, RadioConfig(), sample_users(g, 3, rng))
    cands = np.linspace(g.feed_x[2], g.feed_x[2] + g.L, 7)
    rows = ch.rows(2, cands)
    assert ch.rows(2, cands) is rows
    for c, row in zip(cands, rows):
        x = g.midpoints()
        x[2] = c
        np.testing.assert_allclose(ch.matrix(x)[2], row, rtol=1e-14)


# -- feasibility ---------------------------------------------------------------

def test_feasible_example():
    g = GeometryConfig(D_x=2, M=2, delta_min=0.005)
    assert is_feasible(g, [0.5, 1.5]) == (True, None)


def test_spacing_violation_example():
    g = GeometryConfig(D_x=2, M=2, delta_min=0.005)
    ok, reason = is_feasible(g, [0.999, 1.000])
    assert not ok and reason.startswith("spacing")


def test_containment_violation_example():
    g = GeometryConfig(D_x=2, M=2, delta_min=0.005)
    ok, reason = is_feasible(g, [1.2, 1.5])
    assert not ok and reason.startswith("containment") and "PA 1 " in reason


@given(st.lists(st.floats(-0.5, 4.5), min_size=4, max_size=4))
def test_is_feasible_agrees_with_definition(x):
    g = GeometryConfig(D_x=4, M=4, delta_min=0.1)
    x = np.array(x)
    inside = np.all((x >= g.feed_x) & (x <= g.feed_x + g.L))
    gaps = np.abs(x[:, None] - x[None, :]) + np.eye(4) * 10
    spaced = np.all(gaps >= 0.1)
    assert is_feasible(g, x)[0] == (inside and spaced)


def test_sample_users_in_box(rng):
    g = GeometryConfig()
    U = sample_users(g, 500, rng)
    assert U.shape == (500, 3)
    assert np.all((U[:, 0] >= 0) & (U[:, 0] <= g.D_x))
    assert np.all((U[:, 1] >= 0) & (U[:, 1] <= g.D_y))
    assert np.all(U[:, 2] == 0)
