"""Closed-form single-user rate scaling with the number of segments.

A single user sits at transverse distance ``delta_yz = sqrt(r_y^2 + H^2)``
from the waveguide, centred on an odd number ``M`` of segments of length
``L``, with every PA as close to the user as its segment allows and
in-waveguide loss neglected.  Two limits are covered:

* FC limit: one RF chain with ``M`` phase shifters (equal-gain combining).
* PC limit: ``M`` RF chains with one phase shifter each (maximum-ratio
  combining).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import UnsupportedGeometryError
from .geometry import GeometryConfig, RadioConfig, as_users, check_feasible


@dataclass(frozen=True)
class ScalingParams:
    P: float
    sigma2: float
    eta: float
    L: float
    delta_yz: float
    M: int = 1

    def __post_init__(self):
        if self.delta_yz <= 0 or self.L <= 0:
            raise ValueError("delta_yz and L must be positive")
        if int(self.M) != self.M or self.M < 1:
            raise ValueError("M must be a positive integer")

    @classmethod
    def from_radio(cls, radio: RadioConfig, L: float, delta_yz: float,
                   M: int = 1) -> "ScalingParams":
        return cls(radio.P, radio.sigma2, radio.eta, L, delta_yz, M)

    @property
    def snr0(self) -> float:
        """Transmit SNR scaled by the path-gain constant, ``P eta / sigma2``."""
        return self.P * self.eta / self.sigma2

    def with_M(self, M: int) -> "ScalingParams":
        return ScalingParams(self.P, self.sigma2, self.eta, self.L, self.delta_yz, M)


def rate(snr) -> np.ndarray:
    return np.log2(1.0 + np.asarray(snr, dtype=float))


def _require_odd(M: int) -> None:
    if M % 2 == 0:
        raise UnsupportedGeometryError(
            f"exact sums need an odd segment count centred on the user, got M={M}")


def _side_distances(p: ScalingParams) -> np.ndarray:
    """Distances to the PAs on one side, nearest first (``(M-1)/2`` of them)."""
    mt = np.arange(1, (p.M - 1) // 2 + 1)
    return np.sqrt(p.L ** 2 * (mt - 0.5) ** 2 + p.delta_yz ** 2)


def snr_fc_exact(p: ScalingParams) -> float:
    _require_odd(p.M)
    amp = 1.0 / p.delta_yz + 2.0 * np.sum(1.0 / _side_distances(p))
    return float(p.snr0 / p.M * amp ** 2)


def snr_fc_approx(p: ScalingParams) -> float:
    amp = 1.0 / p.delta_yz + 2.0 / p.L * np.arcsinh(p.L * p.M / (2 * p.delta_yz))
    return float(p.snr0 / p.M * amp ** 2)


def fc_peak_segments(p: ScalingParams) -> float:
    """Segment count at which the FC-limit rate peaks, ``2 delta_yz^2 / L``."""
    return 2.0 * p.delta_yz ** 2 / p.L


def snr_pc_exact(p: ScalingParams) -> float:
    _require_odd(p.M)
    gain = 1.0 / p.delta_yz ** 2 + 2.0 * np.sum(1.0 / _side_distances(p) ** 2)
    return float(p.snr0 * gain)


def snr_pc_approx(p: ScalingParams) -> float:
    arg = (p.M - 1) * p.L / (2 * p.delta_yz)
    gain = 1.0 / p.delta_yz ** 2 + 2.0 / (p.L * p.delta_yz) * np.arctan(arg)
    return float(p.snr0 * gain)


def pc_limit(p: ScalingParams) -> float:
    """Supremum of the PC-limit SNR as ``M`` grows without bound."""
    return float(p.snr0 * (1.0 / p.delta_yz ** 2 + np.pi / (p.L * p.delta_yz)))


def scaling_table(limit: str, p: ScalingParams, m_max: int):
    """Columns ``M, exact, approx, exact_rate, approx_rate`` over odd ``M``.

    The exact sums are evaluated with cumulative sums so the whole curve up
    to ``m_max`` costs one pass.
    """
    if limit not in ("fc", "pc"):
        raise ValueError("limit must be 'fc' or 'pc'")
    if m_max < 1:
        raise ValueError("m_max must be at least 1")
    Ms = np.arange(1, m_max + 1, 2)
    d = _side_distances(p.with_M(Ms[-1]))
    if limit == "fc":
        amp = 1.0 / p.delta_yz + 2.0 * np.concatenate([[0.0], np.cumsum(1.0 / d)])
        exact = p.snr0 / Ms * amp ** 2
        approx = np.array([snr_fc_approx(p.with_M(int(M))) for M in Ms])
    else:
        gain = 1.0 / p.delta_yz ** 2 + 2.0 * np.concatenate([[0.0], np.cumsum(1.0 / d ** 2)])
        exact = p.snr0 * gain
        approx = np.array([snr_pc_approx(p.with_M(int(M))) for M in Ms])
    return Ms, exact, approx, rate(exact), rate(approx)


def optimal_placement_single_user(geom: GeometryConfig, user) -> np.ndarray:
    """PA positions that crowd as close to one user as feasibility allows.

    The PA on the user's segment sits directly abreast of the user; the
    others hug the segment end nearest the user, pushed outward only as far
    as the minimum spacing demands.
    """
    u = as_users(user)
    if len(u) != 1:
        raise ValueError("expected a single user")
    L, M = geom.L, geom.M
    ux = float(np.clip(u[0, 0], 0.0, geom.D_x))
    s = min(int(ux // L), M - 1)
    lo, hi = geom.segment_bounds
    x = np.empty(M)
    x[s] = ux
    for m in range(s + 1, M):
        x[m] = min(max(x[m - 1] + geom.delta_min, lo[m]), hi[m])
    for m in range(s - 1, -1, -1):
        x[m] = max(min(x[m + 1] - geom.delta_min, hi[m]), lo[m])
    return check_feasible(geom, x)
