"""Fully-connected tri-hybrid beamforming: WMMSE and zero-forcing BCD.

Each outer iteration updates the digital combiner in closed form, the analog
combiner by Riemannian conjugate gradient, and the PA positions by
Gauss-Seidel search.  The WMMSE variant also refreshes its weights.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, List, Optional

import numpy as np

from .errors import (RegularizationError, SwanError, UnsupportedVariantError,
                     ZFInfeasibleError)
from .geometry import GeometryConfig, RadioConfig, SwanChannel, check_feasible
from .manifold import cg_optimize, oracle_from_pair, random_point
from .metrics import BeamformerState, mse_all, mse_from_combiner, sum_rate
from .pinching import SearchGrid, gauss_seidel, segment_grid

# Largest accepted ZF noise-enhancement factor t_k [T2]_kk.  It equals
# 1 / (1 - rho_k^2) with rho_k the multiple correlation of user k's effective
# channel with the others, so it measures how close Hc is to rank deficiency.
ZF_ENHANCEMENT_LIMIT = 1e12

# callback(stage, state, x, H) after every sub-step
Callback = Callable[[str, BeamformerState, np.ndarray, np.ndarray], None]


# -- digital updates ---------------------------------------------------------

def wmmse_digital_update(W_RF: np.ndarray, H: np.ndarray,
                         radio: RadioConfig) -> np.ndarray:
    """MMSE digital combiner for a fixed analog matrix (one column per user)."""
    Hc = W_RF.conj().T @ H
    A = Hc @ Hc.conj().T + radio.noise_to_power * (W_RF.conj().T @ W_RF)
    try:
        return np.linalg.solve(A, Hc)
    except np.linalg.LinAlgError as exc:
        raise RegularizationError("singular MMSE system matrix") from exc


def wmmse_weight_update(e) -> np.ndarray:
    e = np.asarray(e, dtype=float)
    if np.any(~(e > 0)):
        raise ValueError("MSE values must be positive")
    return 1.0 / e


def _zf_core(W_RF: np.ndarray, H: np.ndarray):
    K = H.shape[1]
    if K > W_RF.shape[1]:
        raise ZFInfeasibleError(f"K={K} users exceed N_RF={W_RF.shape[1]} chains")
    D = W_RF.conj().T @ W_RF
    Hc = W_RF.conj().T @ H
    try:
        T1 = np.linalg.inv(D)
    except np.linalg.LinAlgError as exc:
        raise ZFInfeasibleError("analog matrix has dependent columns") from exc
    T2 = Hc.conj().T @ T1 @ Hc
    inv, good = _zf_inverse(T2[None])
    if not good[0]:
        raise ZFInfeasibleError("effective channel is rank deficient")
    return T1, Hc, inv[0]


def _zf_inverse(T2: np.ndarray):
    """Batched ``T2^-1`` and a mask of the numerically invertible entries."""
    n = len(T2)
    inv = np.full_like(T2, np.nan)
    finite = np.all(np.isfinite(T2), axis=(1, 2))
    idx = np.flatnonzero(finite)
    if idx.size:
        try:
            inv[idx] = np.linalg.inv(T2[idx])
        except np.linalg.LinAlgError:
            for j in idx:
                try:
                    inv[j] = np.linalg.inv(T2[j])
                except np.linalg.LinAlgError:
                    pass
    with np.errstate(invalid="ignore"):
        t = np.real(np.diagonal(inv, axis1=1, axis2=2))
        enh = t * np.real(np.diagonal(T2, axis1=1, axis2=2))
        good = (np.all(np.isfinite(inv.reshape(n, -1)), axis=1)
                & np.all(t > 0, axis=1)
                & np.all(enh < ZF_ENHANCEMENT_LIMIT, axis=1))
    return inv, good


def zf_digital_update(W_RF: np.ndarray, H: np.ndarray) -> np.ndarray:
    """Minimum-norm zero-forcing combiner: ``D^-1 Hc (Hc^H D^-1 Hc)^-1``."""
    T1, Hc, T3 = _zf_core(W_RF, H)
    return T1 @ Hc @ T3


# -- analog objectives --------------------------------------------------------

@dataclass
class WmmseCache:
    """Quadratic-form data of the weighted MSE as a function of ``W_RF``.

    ``const`` is ``P * sum(omega)``, which reduces to ``K P`` for unit weights.
    """

    R: np.ndarray
    C: np.ndarray
    B: np.ndarray
    const: float


def wmmse_cache(H: np.ndarray, W_BB: np.ndarray, omega, radio: RadioConfig) -> WmmseCache:
    omega = np.asarray(omega, dtype=float)
    P = radio.P
    R = H @ H.conj().T + radio.noise_to_power * np.eye(H.shape[0])
    Wo = W_BB * omega
    C = P * (Wo @ W_BB.conj().T)
    B = 2 * P * (H * omega) @ W_BB.conj().T
    return WmmseCache(R, C, B, float(P * omega.sum()))


def wmmse_analog_objective(W_RF: np.ndarray, cache: WmmseCache):
    """Value ``tr(W^H R W C) - Re tr(W^H B) + const`` and gradient ``2RWC - B``."""
    RWC = cache.R @ W_RF @ cache.C
    value = (np.real(np.vdot(W_RF, RWC)) - np.real(np.vdot(W_RF, cache.B))
             + cache.const)
    return float(value), 2 * RWC - cache.B


@dataclass
class ZfCache:
    T1: np.ndarray
    T2: np.ndarray
    T3: np.ndarray
    t: np.ndarray
    T4: np.ndarray
    c: float


def zf_cache(W_RF: np.ndarray, H: np.ndarray, radio: RadioConfig) -> ZfCache:
    T1, Hc, T3 = _zf_core(W_RF, H)
    T2 = Hc.conj().T @ T1 @ Hc
    t = np.real(np.diag(T3))
    c = radio.P / radio.sigma2
    T4 = np.diag(-c / (np.log(2) * t * (t + c)))
    return ZfCache(T1, T2, T3, t, T4, c)


def zf_analog_objective(W_RF: np.ndarray, H: np.ndarray, radio: RadioConfig):
    """ZF sum rate as a function of ``W_RF`` and its Euclidean gradient.

    The gradient is returned in the real metric ``Re tr(A^H B)``, which is
    twice the conjugate (Wirtinger) derivative.  This is the inner loop of
    the ZF analog update, so it works on single matrices directly rather
    than through :func:`zf_cache`.
    """
    K = H.shape[1]
    if K > W_RF.shape[1]:
        raise ZFInfeasibleError(f"K={K} users exceed N_RF={W_RF.shape[1]} chains")
    Wh = W_RF.conj().T
    Hc = Wh @ H
    try:
        T1Hc = np.linalg.solve(Wh @ W_RF, Hc)
        T2 = Hc.conj().T @ T1Hc
        T3 = np.linalg.inv(T2)
    except np.linalg.LinAlgError as exc:
        raise ZFInfeasibleError("effective channel is rank deficient") from exc
    t = np.real(np.diag(T3))
    enh = t * np.real(np.diag(T2))
    if not (np.all(np.isfinite(T3)) and np.all(t > 0)
            and np.all(enh < ZF_ENHANCEMENT_LIMIT)):
        raise ZFInfeasibleError("effective channel is rank deficient")
    c = radio.P / radio.sigma2
    value = float(np.sum(np.log2(1 + c / t)))
    t4 = -c / (np.log(2) * t * (t + c))
    # Hc^H T1 = (T1 Hc)^H because T1 is Hermitian
    right = ((T3 * t4) @ T3) @ T1Hc.conj().T
    grad = 2 * (W_RF @ (T1Hc @ right) - H @ right)
    return value, grad


# -- block coordinate descent --------------------------------------------------

@dataclass
class BcdResult:
    state: BeamformerState
    x: np.ndarray
    rate_trace: List[float] = field(default_factory=list)
    objective_trace: List[float] = field(default_factory=list)
    iterations: int = 0
    converged: bool = False


def initial_state(M: int, N_RF: int, K: int, rng: np.random.Generator,
                  mask: Optional[np.ndarray] = None) -> BeamformerState:
    """Random unit-modulus analog matrix on ``mask``; digital part zero."""
    if mask is None:
        mask = np.ones((M, N_RF), dtype=bool)
    return BeamformerState(random_point(mask, rng), np.zeros((N_RF, K), complex), mask)


def _fractional_change(new: float, old: float) -> float:
    return abs(new - old) / max(abs(old), np.finfo(float).tiny)


class WmmsePositionObjective:
    """Weighted MSE as a function of PA positions with receivers held fixed.

    Calling the object evaluates every candidate of one antenna at once via
    a rank-one update of ``S = V^H H``.
    """

    def __init__(self, channel, W_RF, W_BB, omega, radio: RadioConfig):
        self.channel = channel
        self.V = W_RF @ W_BB
        self.omega = np.asarray(omega, dtype=float)
        self.P = radio.P
        self.noise = radio.sigma2 * np.sum(np.abs(self.V) ** 2, axis=0)
        self.penalty = float(np.sum(np.log(self.omega)))

    def _objective(self, S):
        e = (self.P * np.sum(np.abs(S) ** 2, axis=-1)
             - 2 * self.P * np.real(np.diagonal(S, axis1=-2, axis2=-1))
             + self.noise + self.P)
        return e @ self.omega - self.penalty

    def value(self, x) -> float:
        return float(self._objective(self.V.conj().T @ self.channel.matrix(x)))

    def __call__(self, x, m, cands):
        Hx = self.channel.matrix(x)
        S = self.V.conj().T @ Hx
        delta = self.channel.rows(m, cands) - Hx[m]
        S = S[None] + self.V[m].conj()[None, :, None] * delta[:, None, :]
        return self._objective(S)


class ZfPositionObjective:
    """ZF sum rate as a function of PA positions for a fixed analog matrix.

    The digital ZF combiner is re-solved for every candidate (with it held
    fixed the ZF constraint would pin the rate).  Candidates that make the
    effective channel rank deficient score ``-inf`` and are never accepted.
    """

    def __init__(self, channel, W_RF, radio: RadioConfig):
        self.channel = channel
        self.W_RF = W_RF
        self.T1 = np.linalg.inv(W_RF.conj().T @ W_RF)
        self.c = radio.P / radio.sigma2

    def _rates(self, Hc):
        T2 = np.conj(np.swapaxes(Hc, -1, -2)) @ self.T1 @ Hc
        inv, good = _zf_inverse(T2)
        out = np.full(len(T2), -np.inf)
        t = np.real(np.diagonal(inv[good], axis1=1, axis2=2))
        out[good] = np.sum(np.log2(1 + self.c / t), axis=1)
        return out

    def value(self, x) -> float:
        Hc = self.W_RF.conj().T @ self.channel.matrix(x)
        return float(self._rates(Hc[None])[0])

    def __call__(self, x, m, cands):
        Hx = self.channel.matrix(x)
        Hc = self.W_RF.conj().T @ Hx
        delta = self.channel.rows(m, cands) - Hx[m]
        Hc = Hc[None] + self.W_RF[m].conj()[None, :, None] * delta[:, None, :]
        return self._rates(Hc)


def run_wmmse_bcd(channel, radio: RadioConfig, state: BeamformerState, x0,
                  grid: Optional[SearchGrid], analog_step, tol: float = 1e-8,
                  max_outer: int = 50, gs_max_pass: int = 50,
                  callback: Optional[Callback] = None) -> BcdResult:
    """WMMSE block coordinate descent shared by the FC and PC structures.

    ``analog_step(G_RF, cache, mask)`` returns an analog matrix that does not
    increase the weighted MSE.  With ``grid=None`` positions stay fixed.
    Cycle: analog, pinching, weights, digital, weights.  Refreshing the
    weights right after the digital update makes the recorded sum rate (with
    the MMSE receiver) non-decreasing.
    """
    x = np.array(x0, dtype=float)
    st = state.copy()
    H = channel.matrix(x)

    def notify(stage):
        if callback is not None:
            callback(stage, st, x, H)

    def digital_and_weights():
        st.G_BB = wmmse_digital_update(st.G_RF, H, radio)
        notify("digital")
        st.omega = wmmse_weight_update(mse_all(st, H, radio))
        notify("weights")

    digital_and_weights()
    result = BcdResult(st, x, rate_trace=[sum_rate(st, H, radio)])
    for it in range(1, max_outer + 1):
        try:
            cache = wmmse_cache(H, st.G_BB, st.omega, radio)
            st.G_RF = analog_step(st.G_RF, cache, st.mask)
            notify("analog")
            if grid is not None:
                batch = WmmsePositionObjective(channel, st.G_RF, st.G_BB,
                                               st.omega, radio)
                x = gauss_seidel(batch.value, grid, x, "minimize", tol=tol,
                                 max_pass=gs_max_pass, batch=batch).x
                H = channel.matrix(x)
                notify("pinching")
            st.omega = wmmse_weight_update(mse_all(st, H, radio))
            notify("weights")
            digital_and_weights()
        except SwanError as exc:
            raise type(exc)(f"outer iteration {it}: {exc}") from exc
        result.rate_trace.append(sum_rate(st, H, radio))
        result.iterations = it
        if _fractional_change(result.rate_trace[-1], result.rate_trace[-2]) < tol:
            result.converged = True
            break
    result.x = x
    result.state = st
    return result


def cg_analog_step(radio: RadioConfig, tol: float = 1e-8, max_iter: int = 200):
    def step(G_RF, cache, mask):
        oracle = oracle_from_pair(lambda W: wmmse_analog_objective(W, cache))
        return cg_optimize(oracle, G_RF, mask, tol=tol, max_iter=max_iter).W

    return step


def run_zf_bcd(channel, radio: RadioConfig, state: BeamformerState, x0,
               grid: Optional[SearchGrid], tol: float = 1e-8, max_outer: int = 50,
               cg_max_iter: int = 200, gs_max_pass: int = 50,
               callback: Optional[Callback] = None) -> BcdResult:
    """Zero-forcing BCD: digital ZF, analog ascent, then pinching ascent.

    The analog and pinching blocks maximize the ZF sum rate with the digital
    combiner re-solved in closed form, so the rate trace is non-decreasing.
    """
    x = np.array(x0, dtype=float)
    st = state.copy()
    st.omega = np.ones(st.K)
    H = channel.matrix(x)

    def notify(stage):
        if callback is not None:
            callback(stage, st, x, H)

    st.G_BB = zf_digital_update(st.G_RF, H)
    notify("digital")
    result = BcdResult(st, x, rate_trace=[sum_rate(st, H, radio)])
    for it in range(1, max_outer + 1):
        try:
            Hf = H
            oracle = oracle_from_pair(lambda W: zf_analog_objective(W, Hf, radio),
                                      sense="maximize")
            st.G_RF = cg_optimize(oracle, st.G_RF, st.mask, tol=tol,
                                  max_iter=cg_max_iter).W
            notify("analog")
            if grid is not None:
                batch = ZfPositionObjective(channel, st.G_RF, radio)
                x = gauss_seidel(batch.value, grid, x, "maximize", tol=tol,
                                 max_pass=gs_max_pass, batch=batch).x
                H = channel.matrix(x)
                notify("pinching")
            st.G_BB = zf_digital_update(st.G_RF, H)
            notify("digital")
        except SwanError as exc:
            raise type(exc)(f"outer iteration {it}: {exc}") from exc
        result.rate_trace.append(sum_rate(st, H, radio))
        result.iterations = it
        if _fractional_change(result.rate_trace[-1], result.rate_trace[-2]) < tol:
            result.converged = True
            break
    result.x = x
    result.state = st
    return result


@dataclass
class StagedResult:
    """Outcome of a zero-forcing stage followed by a WMMSE stage.

    Either stage may be absent: ZF is skipped when ``K > N_RF`` and WMMSE
    when only the ZF solution is wanted.
    """

    zf: Optional[BcdResult]
    wmmse: Optional[BcdResult]

    @property
    def final(self) -> BcdResult:
        return self.wmmse if self.wmmse is not None else self.zf

    @property
    def iterations(self) -> int:
        return sum(r.iterations for r in (self.zf, self.wmmse) if r is not None)

    def combined(self) -> BcdResult:
        """Final state with the rate traces of both stages concatenated."""
        last = self.final
        trace = [] if self.zf is None or self.wmmse is None else list(self.zf.rate_trace)
        return BcdResult(last.state, last.x, trace + list(last.rate_trace),
                         last.objective_trace, self.iterations, last.converged)


def zf_then_wmmse(channel, radio: RadioConfig, state: BeamformerState, x0,
                  grid: Optional[SearchGrid], analog_step, wmmse: bool = True,
                  tol: float = 1e-8, max_outer: int = 50, cg_max_iter: int = 200,
                  gs_max_pass: int = 50, zf_callback: Optional[Callback] = None,
                  wmmse_callback: Optional[Callback] = None) -> StagedResult:
    """ZF BCD on ``state.mask``, then WMMSE BCD started from its output.

    With more users than RF chains zero forcing is impossible; WMMSE then
    starts from ``state`` directly, and asking for ZF alone raises.
    """
    K, N_RF = channel.K, state.G_RF.shape[1]
    zf = None
    if K <= N_RF:
        zf = run_zf_bcd(channel, radio, state, x0, grid, tol=tol, max_outer=max_outer,
                        cg_max_iter=cg_max_iter, gs_max_pass=gs_max_pass,
                        callback=zf_callback)
        if not wmmse:
            return StagedResult(zf, None)
        state, x0 = zf.state, zf.x
    elif not wmmse:
        raise ZFInfeasibleError(f"K={K} users exceed N_RF={N_RF} chains")
    wm = run_wmmse_bcd(channel, radio, state, x0, grid, analog_step, tol=tol,
                       max_outer=max_outer, gs_max_pass=gs_max_pass,
                       callback=wmmse_callback)
    return StagedResult(zf, wm)


def bcd_fc(variant: str, geom: GeometryConfig, radio: RadioConfig, users,
           state: BeamformerState, x0, tol: float = 1e-8, max_outer: int = 50,
           resolution: float = 0.01, cg_max_iter: int = 200,
           gs_max_pass: int = 50, callback: Optional[Callback] = None,
           zf_init: bool = True) -> BcdResult:
    """Fully-connected tri-hybrid beamforming for ``variant`` 'wmmse' or 'zf'.

    With ``zf_init`` the WMMSE variant starts from the ZF solution (when
    ``K <= N_RF``); its rate trace then covers both stages and
    ``iterations`` counts both.
    """
    if variant not in ("wmmse", "zf"):
        raise UnsupportedVariantError(f"unknown FC variant {variant!r}")
    check_feasible(geom, x0)
    channel = SwanChannel(geom, radio, users)
    grid = segment_grid(geom, resolution)
    if variant == "zf":
        return run_zf_bcd(channel, radio, state, x0, grid, tol=tol,
                          max_outer=max_outer, cg_max_iter=cg_max_iter,
                          gs_max_pass=gs_max_pass, callback=callback)
    step = cg_analog_step(radio, tol, cg_max_iter)
    if not zf_init:
        return run_wmmse_bcd(channel, radio, state, x0, grid, step, tol=tol,
                             max_outer=max_outer, gs_max_pass=gs_max_pass,
                             callback=callback)
    return zf_then_wmmse(channel, radio, state, x0, grid, step, tol=tol,
                         max_outer=max_outer, cg_max_iter=cg_max_iter,
                         gs_max_pass=gs_max_pass, wmmse_callback=callback).combined()
