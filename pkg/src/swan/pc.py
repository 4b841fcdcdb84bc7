"""Partially-connected tri-hybrid beamforming with an interleaved layout.

Each RF chain drives ``N_par = M / N_RF`` segments spread round-robin along
the waveguide, so every chain sees the whole service area.  The analog part
is updated one phase shifter at a time in closed form.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .errors import TopologyError, UnsupportedVariantError
from .fc import (BcdResult, Callback, WmmseCache, run_wmmse_bcd,
                 wmmse_digital_update, zf_then_wmmse)
from .geometry import GeometryConfig, RadioConfig, SwanChannel, check_feasible
from .manifold import random_point
from .metrics import BeamformerState
from .pinching import segment_grid


@dataclass(frozen=True)
class InterleavedTopology:
    """Row permutation and connectivity mask of the interleaved layout.

    ``perm[i, j] = 1`` maps row ``j`` of the sequential block-diagonal layout
    to row ``i`` of the interleaved one; ``mask = perm @ sequential_mask``.
    """

    N_RF: int
    N_par: int
    perm: np.ndarray
    mask: np.ndarray

    @property
    def M(self) -> int:
        return self.N_RF * self.N_par

    def chain_of(self) -> np.ndarray:
        """0-based RF chain index of every row."""
        return np.argmax(self.mask, axis=1)


def sequential_mask(M: int, N_RF: int) -> np.ndarray:
    """Block-diagonal mask: chain ``j`` owns rows ``j N_par .. (j+1) N_par - 1``."""
    N_par = M // N_RF
    mask = np.zeros((M, N_RF), dtype=bool)
    mask[np.arange(M), np.arange(M) // N_par] = True
    return mask


def build_interleaved(M: int, N_RF: int) -> InterleavedTopology:
    if N_RF < 1 or M < 1 or M % N_RF:
        raise TopologyError(f"N_RF={N_RF} must divide M={M}")
    N_par = M // N_RF
    # 0-based: sequential row j = jp * N_par + ip goes to row i = ip * N_RF + jp
    ip, jp = np.meshgrid(np.arange(N_par), np.arange(N_RF), indexing="ij")
    seq = (jp * N_par + ip).ravel()
    inter = (ip * N_RF + jp).ravel()
    perm = np.zeros((M, M), dtype=int)
    perm[inter, seq] = 1
    mask = (perm @ sequential_mask(M, N_RF).astype(int)).astype(bool)
    return InterleavedTopology(N_RF, N_par, perm, mask)


def pc_digital_update(F_RF: np.ndarray, H: np.ndarray, radio: RadioConfig) -> np.ndarray:
    """MMSE digital combiner for a masked analog matrix."""
    return wmmse_digital_update(F_RF, H, radio)


def _phase_target(F: np.ndarray, RFC: np.ndarray, cache: WmmseCache,
                  m: int, n: int) -> complex:
    # [R F_breve C]_mn, with F_breve equal to F except entry (m, n) zeroed
    r_breve = RFC[m, n] - cache.R[m, m] * F[m, n] * cache.C[n, n]
    return cache.B[m, n] - 2 * r_breve


def elementwise_phase_update(F_RF: np.ndarray, cache: WmmseCache,
                             entry: Tuple[int, int],
                             mask: Optional[np.ndarray] = None) -> np.ndarray:
    """Optimal unit-modulus value of one analog entry, others held fixed.

    Returns an updated copy.  When the phase target ``c3`` vanishes every
    phase is optimal and the entry is left alone.
    """
    m, n = entry
    if mask is not None and not mask[m, n]:
        raise ValueError(f"entry {entry} is not connected")
    F = np.array(F_RF, dtype=complex)
    RFC = cache.R @ F @ cache.C
    c3 = _phase_target(F, RFC, cache, m, n)
    if c3 != 0:
        F[m, n] = np.exp(1j * np.angle(c3))
    return F


def phase_sweep(F_RF: np.ndarray, cache: WmmseCache, mask: np.ndarray) -> np.ndarray:
    """One row-major pass of element-wise updates over the masked entries.

    ``R F C`` is kept current with a rank-one correction after every change,
    so a pass costs ``O(M N_RF)`` per entry instead of a full product.
    """
    F = np.array(F_RF, dtype=complex)
    RFC = cache.R @ F @ cache.C
    for m, n in zip(*np.nonzero(mask)):
        c3 = _phase_target(F, RFC, cache, m, n)
        if c3 == 0:
            continue
        new = np.exp(1j * np.angle(c3))
        delta = new - F[m, n]
        if delta != 0:
            F[m, n] = new
            RFC += np.outer(cache.R[:, m] * delta, cache.C[n, :])
    return F


def pc_initial_state(topo: InterleavedTopology, K: int,
                     rng: np.random.Generator) -> BeamformerState:
    """Uniform random phases on the interleaved mask."""
    return BeamformerState(random_point(topo.mask, rng),
                           np.zeros((topo.N_RF, K), complex), topo.mask.copy())


def pc_analog_step(F_RF: np.ndarray, cache: WmmseCache, mask: np.ndarray) -> np.ndarray:
    return phase_sweep(F_RF, cache, mask)


def bcd_pc(geom: GeometryConfig, radio: RadioConfig, users,
           topo: InterleavedTopology, state: BeamformerState, x0,
           tol: float = 1e-8, max_outer: int = 50, resolution: float = 0.01,
           gs_max_pass: int = 50, variant: str = "wmmse",
           callback: Optional[Callback] = None, zf_init: bool = True,
           cg_max_iter: int = 200) -> BcdResult:
    """WMMSE BCD for the partially-connected structure.

    Identical to the fully-connected loop except that the analog block is a
    single element-wise phase sweep.  With ``zf_init`` (and ``K <= N_RF``)
    the loop starts from a zero-forcing BCD run restricted to the mask,
    mirroring the fully-connected initialisation; ZF is never offered as a
    final answer here.
    """
    if variant != "wmmse":
        raise UnsupportedVariantError(
            "only the WMMSE variant is provided for the partially-connected "
            "structure; zero forcing is ill-conditioned there")
    if topo.M != geom.M:
        raise TopologyError(f"topology has {topo.M} rows but geometry has M={geom.M}")
    if not np.array_equal(state.mask, topo.mask):
        raise TopologyError("initial state mask does not match the topology")
    check_feasible(geom, x0)
    channel = SwanChannel(geom, radio, users)
    grid = segment_grid(geom, resolution)
    if not zf_init:
        return run_wmmse_bcd(channel, radio, state, x0, grid, pc_analog_step,
                             tol=tol, max_outer=max_outer, gs_max_pass=gs_max_pass,
                             callback=callback)
    return zf_then_wmmse(channel, radio, state, x0, grid, pc_analog_step, tol=tol,
                         max_outer=max_outer, cg_max_iter=cg_max_iter,
                         gs_max_pass=gs_max_pass, wmmse_callback=callback).combined()
