import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from swan import manifold
from swan.errors import DegenerateRetractionError, NumericError
from swan.manifold import (ArmijoParams, ObjectiveOracle, cg_optimize, oracle_from_pair,
                           polak_ribiere, random_point, retract,
                           riemannian_project, transport)

from .helpers import crandn, unit_phases

seeds = st.integers(0, 2 ** 32 - 1)


def tangent_at(W, rng, mask=None):
    return riemannian_project(W, crandn(rng, *W.shape), mask)


# -- primitives ----------------------------------------------------------------

def test_projection_examples():
    one = np.array([[1 + 0j]])
    assert riemannian_project(one, np.array([[1 + 0j]]))[0, 0] == 0
    assert riemannian_project(one, np.array([[1j]]))[0, 0] == 1j
    assert riemannian_project(one, np.array([[1 + 1j]]))[0, 0] == 1j


def test_retraction_examples():
    one = np.array([[1 + 0j]])
    W = unit_phases(np.random.default_rng(0), 3, 2)
    np.testing.assert_array_equal(retract(W, np.zeros_like(W), 0.0), W)
    out = retract(one, np.array([[1j]]), 1.0)
    assert out[0, 0] == pytest.approx(np.exp(1j * np.pi / 4), abs=1e-15)


def test_retraction_rejects_normal_direction():
    with pytest.raises(ValueError):
        retract(np.array([[1 + 0j]]), np.array([[1 + 0j]]), 0.5)


def test_retraction_through_origin():
    # a tangent step cannot reach the origin, so build one by hand
    W = np.array([[1 + 0j]])
    with pytest.raises(DegenerateRetractionError):
        old = manifold.TANGENT_ATOL
        manifold.TANGENT_ATOL = np.inf
        try:
            retract(W, np.array([[-1 + 0j]]), 1.0)
        finally:
            manifold.TANGENT_ATOL = old


def test_transport_examples():
    rng = np.random.default_rng(1)
    W = unit_phases(rng, 4, 3)
    T = tangent_at(W, rng)
    np.testing.assert_allclose(transport(T, W), T, atol=1e-15)
    np.testing.assert_allclose(transport(W, W), 0, atol=1e-15)


@given(seeds, st.floats(1e-6, 10))
def test_tangency_and_modulus(seed, alpha):
    rng = np.random.default_rng(seed)
    W = unit_phases(rng, 8, 4)
    T = tangent_at(W, rng)
    assert np.max(np.abs(np.real(T * W.conj()))) <= 1e-12
    W2 = retract(W, T, alpha)
    assert np.max(np.abs(np.abs(W2) - 1)) <= 1e-12
    T2 = transport(T, W2)
    assert np.max(np.abs(np.real(T2 * W2.conj()))) <= 1e-12


@given(seeds)
def test_mask_is_preserved(seed):
    rng = np.random.default_rng(seed)
    mask = rng.uniform(size=(6, 3)) < 0.5
    W = random_point(mask, rng)
    T = tangent_at(W, rng, mask)
    W2 = retract(W, T, 0.7, mask)
    assert np.all(W2[~mask] == 0)
    np.testing.assert_allclose(np.abs(W2[mask]), 1, atol=1e-12)


def test_polak_ribiere_zero_when_gradient_repeats():
    G = crandn(np.random.default_rng(2), 3, 3)
    assert polak_ribiere(G, G, G) == 0.0


def test_polak_ribiere_is_nonnegative():
    rng = np.random.default_rng(3)
    G = crandn(rng, 3, 3)
    # numerator <G/2, G/2 - G> is negative, so the coefficient clips to zero
    assert polak_ribiere(G / 2, G, G) == 0.0
    assert polak_ribiere(2 * G, G, G) == pytest.approx(2.0)


# -- optimizer -----------------------------------------------------------------

def phase_alignment(B):
    return oracle_from_pair(lambda W: (-np.real(np.vdot(W, B)), -B))


def test_zero_gradient_returns_start():
    W0 = unit_phases(np.random.default_rng(4), 3, 2)
    res = cg_optimize(phase_alignment(2 * W0), W0)
    np.testing.assert_array_equal(res.W, W0)
    assert res.iterations == 1 and res.converged


@pytest.mark.parametrize("seed", range(5))
def test_phase_alignment_reaches_closed_form(seed):
    rng = np.random.default_rng(seed)
    B = crandn(rng, 6, 3)
    res = cg_optimize(phase_alignment(B), unit_phases(rng, 6, 3), tol=1e-14, max_iter=500)
    assert res.trace[-1] == pytest.approx(-np.abs(B).sum(), abs=1e-6)
    np.testing.assert_allclose(res.W, np.exp(1j * np.angle(B)), atol=1e-3)


@given(seeds)
def test_trace_is_monotone(seed):
    rng = np.random.default_rng(seed)
    A = crandn(rng, 5, 5)
    R = A @ A.conj().T
    B = crandn(rng, 5, 2)
    f = oracle_from_pair(lambda W: (np.real(np.vdot(W, R @ W)) - np.real(np.vdot(W, B)),
                                    2 * R @ W - B))
    res = cg_optimize(f, unit_phases(rng, 5, 2), max_iter=50)
    assert np.all(np.diff(res.trace) <= 1e-12 * np.abs(res.trace[:-1]).max())


def test_maximize_sense():
    rng = np.random.default_rng(5)
    B = crandn(rng, 4, 2)
    oracle = oracle_from_pair(lambda W: (np.real(np.vdot(W, B)), B), sense="maximize")
    res = cg_optimize(oracle, unit_phases(rng, 4, 2), tol=1e-14, max_iter=300)
    assert np.all(np.diff(res.trace) >= 0)
    assert res.trace[-1] == pytest.approx(np.abs(B).sum(), abs=1e-6)


def test_non_finite_objective_reports_iteration():
    oracle = ObjectiveOracle(lambda W: np.nan, lambda W: np.ones_like(W))
    with pytest.raises(NumericError) as info:
        cg_optimize(oracle, np.ones((2, 2), complex))
    assert info.value.iteration == 0


def test_gradient_shape_is_checked():
    oracle = ObjectiveOracle(lambda W: 0.0, lambda W: np.ones((3, 3)))
    with pytest.raises(ValueError):
        cg_optimize(oracle, np.ones((2, 2), complex))


def test_bad_sense():
    with pytest.raises(ValueError):
        ObjectiveOracle(lambda W: 0.0, lambda W: W, sense="sideways")


def test_armijo_defaults():
    a = ArmijoParams()
    assert (a.initial_step, a.contraction, a.sufficient_decrease, a.max_backtracks) == \
        (1.0, 0.5, 1e-4, 50)
