"""Conjugate gradient on products of complex unit circles.

Points are complex matrices whose masked entries have unit modulus and whose
unmasked entries are exactly zero.  Tangent vectors at ``W`` satisfy
``Re{T * conj(W)} = 0`` entry-wise; the ambient metric is
``<A, B> = Re tr(A^H B)``.  A Euclidean gradient is expected in the same
metric, i.e. ``f(W + tE) = f(W) + t Re tr(G^H E) + o(t)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, List, Optional

import numpy as np

from .errors import DegenerateRetractionError, NumericError

TANGENT_ATOL = 1e-9
# A Riemannian gradient this small relative to the Euclidean one is zero.
ZERO_GRAD_RTOL = 1e-12


def _mask_like(W, mask):
    if mask is None:
        return np.ones(np.shape(W), dtype=bool)
    return np.asarray(mask, dtype=bool)


def inner(A: np.ndarray, B: np.ndarray) -> float:
    return float(np.real(np.vdot(A, B)))


def riemannian_project(W: np.ndarray, G: np.ndarray, mask=None) -> np.ndarray:
    """Project an ambient matrix onto the tangent space at ``W``."""
    T = G - np.real(G * W.conj()) * W
    if mask is not None:
        T = np.where(mask, T, 0)
    return T


def transport(D: np.ndarray, W_next: np.ndarray, mask=None) -> np.ndarray:
    """Carry a tangent vector to the tangent space at ``W_next``."""
    return riemannian_project(W_next, D, mask)


def retract(W: np.ndarray, D: np.ndarray, alpha: float, mask=None) -> np.ndarray:
    """Entry-wise normalization of ``W + alpha D`` back onto the circles."""
    mask = _mask_like(W, mask)
    scale = max(1.0, float(np.max(np.abs(D), initial=0.0)))
    if np.max(np.abs(np.real(D * W.conj())[mask]), initial=0.0) > TANGENT_ATOL * scale:
        raise ValueError("direction is not tangent at W")
    if alpha == 0:
        return np.where(mask, W, 0)
    return _normalize(W + alpha * D, None if mask.all() else mask)


def _normalize(Y: np.ndarray, mask) -> np.ndarray:
    """Entry-wise ``Y / |Y|`` on ``mask`` (everywhere when ``mask`` is None)."""
    if mask is None:
        mod = np.abs(Y)
        if not mod.all():
            raise DegenerateRetractionError("retraction through the origin")
        return Y / mod
    mod = np.abs(Y)
    if np.any(mod[mask] == 0):
        raise DegenerateRetractionError("retraction through the origin")
    out = np.zeros_like(Y)
    out[mask] = Y[mask] / mod[mask]
    return out


def random_point(mask: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Uniform phases on the masked entries."""
    phases = rng.uniform(-np.pi, np.pi, size=mask.shape)
    return np.where(mask, np.exp(1j * phases), 0)


@dataclass
class ObjectiveOracle:
    """Objective value and Euclidean gradient with an optimization sense."""

    value: Callable[[np.ndarray], float]
    euclid_grad: Callable[[np.ndarray], np.ndarray]
    sense: str = "minimize"

    def __post_init__(self):
        if self.sense not in ("minimize", "maximize"):
            raise ValueError("sense must be 'minimize' or 'maximize'")

    @property
    def sign(self) -> float:
        return 1.0 if self.sense == "minimize" else -1.0


def oracle_from_pair(fn: Callable[[np.ndarray], tuple],
                     sense: str = "minimize") -> ObjectiveOracle:
    """Build an oracle from ``fn(W) -> (value, grad)``.

    The last evaluation is memoized, so asking for the gradient at the point
    the line search just accepted costs nothing extra.
    """
    memo = {}

    def pair(W):
        key = W.tobytes()
        if memo.get("key") != key:
            memo["key"] = key
            memo["out"] = fn(W)
        return memo["out"]

    return ObjectiveOracle(lambda W: pair(W)[0], lambda W: pair(W)[1], sense)


@dataclass(frozen=True)
class ArmijoParams:
    initial_step: float = 1.0
    contraction: float = 0.5
    sufficient_decrease: float = 1e-4
    max_backtracks: int = 50


@dataclass
class CGResult:
    W: np.ndarray
    trace: List[float] = field(default_factory=list)
    iterations: int = 0
    converged: bool = False


def polak_ribiere(G_new: np.ndarray, G_old_transported: np.ndarray,
                  G_old: np.ndarray) -> float:
    """Nonnegative Polak-Ribiere coefficient."""
    denom = inner(G_old, G_old)
    if denom <= 0:
        return 0.0
    return max(inner(G_new, G_new - G_old_transported) / denom, 0.0)


def cg_optimize(oracle: ObjectiveOracle, W0: np.ndarray, mask=None,
                tol: float = 1e-8, max_iter: int = 200,
                armijo: ArmijoParams = ArmijoParams()) -> CGResult:
    """Riemannian conjugate gradient with Armijo backtracking.

    Stops when the fractional change of the objective drops below ``tol`` or
    after ``max_iter`` iterations.  The returned trace holds the objective (in
    the oracle's own sign) after every accepted step and is monotone in the
    optimization sense.
    """
    mask = _mask_like(W0, mask)
    # None skips the masking work when every entry is free
    pmask = None if mask.all() else mask
    sign = oracle.sign

    def evaluate(W, it):
        f = sign * float(oracle.value(W))
        if not np.isfinite(f):
            raise NumericError(f"non-finite objective at iteration {it}", it)
        return f

    def rgrad(W, it):
        g = np.asarray(oracle.euclid_grad(W))
        if g.shape != W.shape:
            raise ValueError("gradient shape does not match the point")
        if not np.all(np.isfinite(g)):
            raise NumericError(f"non-finite gradient at iteration {it}", it)
        G = riemannian_project(W, sign * g, pmask)
        if np.linalg.norm(G) <= ZERO_GRAD_RTOL * np.linalg.norm(g):
            G = np.zeros_like(G)
        return G

    W = np.where(mask, W0, 0).astype(complex)
    f = evaluate(W, 0)
    G = rgrad(W, 0)
    result = CGResult(W=W, trace=[sign * f])
    if inner(G, G) == 0.0:
        result.iterations = 1
        result.converged = True
        return result

    D = -G
    it = 0
    while it < max_iter:
        slope = inner(G, D)
        if slope >= 0:
            D = -G
            slope = -inner(G, G)
        step = _armijo(evaluate, W, D, f, slope, pmask, armijo, it)
        if step is None:
            if inner(D + G, D + G) > 0:
                # conjugate direction failed; retry once along steepest descent
                D = -G
                continue
            result.converged = True
            break
        it += 1
        W_new, f_new = step
        G_new = rgrad(W_new, it)
        beta = polak_ribiere(G_new, transport(G, W_new, pmask), G)
        D = -G_new + beta * transport(D, W_new, pmask)
        change = abs(f_new - f) / max(abs(f), np.finfo(float).tiny)
        W, f, G = W_new, f_new, G_new
        result.trace.append(sign * f)
        if change < tol or inner(G, G) == 0.0:
            result.converged = True
            break
    result.W = W
    result.iterations = max(it, 1)
    return result


def _armijo(evaluate, W, D, f, slope, mask, params: ArmijoParams, it):
    # D is tangent by construction (a projection or a transported sum of
    # projections), so the retraction's tangency check is skipped here
    alpha = params.initial_step
    for _ in range(params.max_backtracks):
        try:
            W_try = _normalize(W + alpha * D, mask)
        except DegenerateRetractionError:
            alpha *= params.contraction
            continue
        f_try = evaluate(W_try, it)
        if f_try <= f + params.sufficient_decrease * alpha * slope:
            return W_try, f_try
        alpha *= params.contraction
    return None
