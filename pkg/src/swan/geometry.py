"""Segmented-waveguide geometry and the uplink channel model.

Pinching antennas (PAs) sit at ``(x_m, 0, H)``; segment ``m`` spans
``[m L, (m + 1) L]`` (0-based) and is fed at its left endpoint.  Users lie on
the ground plane.  All quantities are SI (meters, hertz, watts).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .errors import FeasibilityError, SingularGeometryError

SPEED_OF_LIGHT = 299_792_458.0

# Absolute slack for containment/spacing comparisons on grid coordinates.
FEASIBILITY_ATOL = 1e-12


@dataclass(frozen=True)
class RadioConfig:
    """Carrier, waveguide and power parameters (reference-setup defaults)."""

    f_c: float = 28e9
    n_eff: float = 1.4
    kappa: float = 0.08
    P: float = 0.01
    sigma2: float = 1e-11

    def __post_init__(self):
        if self.f_c <= 0:
            raise ValueError("f_c must be positive")
        if self.P <= 0 or self.sigma2 <= 0:
            raise ValueError("P and sigma2 must be positive")
        if self.kappa < 0:
            raise ValueError("kappa must be nonnegative")
        if self.n_eff < 1:
            raise ValueError("n_eff must be >= 1")

    @property
    def lambda_c(self) -> float:
        return SPEED_OF_LIGHT / self.f_c

    @property
    def lambda_g(self) -> float:
        return self.lambda_c / self.n_eff

    @property
    def eta(self) -> float:
        """Free-space path-gain constant lambda_c^2 / (16 pi^2)."""
        return self.lambda_c ** 2 / (16 * np.pi ** 2)

    @property
    def noise_to_power(self) -> float:
        return self.sigma2 / self.P


@dataclass(frozen=True)
class GeometryConfig:
    """Layout of ``M`` equal segments covering ``[0, D_x]`` at height ``H``."""

    D_x: float = 80.0
    D_y: float = 20.0
    H: float = 3.0
    M: int = 50
    delta_min: float = SPEED_OF_LIGHT / 28e9 / 2

    def __post_init__(self):
        if int(self.M) != self.M or self.M < 1:
            raise ValueError("M must be a positive integer")
        if self.H <= 0:
            raise ValueError("H must be positive")
        if self.delta_min <= 0:
            raise ValueError("delta_min must be positive")
        if self.D_x <= 0 or self.D_y < 0:
            raise ValueError("service area must have positive extent")

    @property
    def L(self) -> float:
        return self.D_x / self.M

    @property
    def feed_x(self) -> np.ndarray:
        return np.arange(self.M) * self.L

    @property
    def segment_bounds(self) -> Tuple[np.ndarray, np.ndarray]:
        lo = np.arange(self.M) * self.L
        return lo, lo + self.L

    def midpoints(self) -> np.ndarray:
        return (np.arange(self.M) + 0.5) * self.L


def as_users(positions) -> np.ndarray:
    """Validate user positions and return them as a ``(K, 3)`` float array.

    ``(K, 2)`` input is accepted and padded with ``z = 0``.
    """
    users = np.atleast_2d(np.asarray(positions, dtype=float))
    if users.shape[1] == 2:
        users = np.column_stack([users, np.zeros(len(users))])
    if users.ndim != 2 or users.shape[1] != 3 or len(users) < 1:
        raise ValueError("users must be a (K, 3) array with K >= 1")
    if np.any(users[:, 2] != 0):
        raise ValueError("users must lie on the ground plane (z = 0)")
    return users


def is_feasible(geom: GeometryConfig, x) -> Tuple[bool, Optional[str]]:
    """Check membership of ``x`` in the feasible set.

    Returns ``(True, None)`` or ``(False, reason)`` where the reason names the
    first violated constraint and the (1-based) antenna index.
    """
    x = np.asarray(x, dtype=float)
    if x.shape != (geom.M,):
        return False, f"shape: expected {geom.M} positions, got {x.shape}"
    lo, hi = geom.segment_bounds
    bad = np.flatnonzero((x < lo - FEASIBILITY_ATOL) | (x > hi + FEASIBILITY_ATOL))
    if bad.size:
        m = int(bad[0])
        return False, (f"containment: PA {m + 1} at x={x[m]:.6g} outside "
                       f"[{lo[m]:.6g}, {hi[m]:.6g}]")
    viol = spacing_violation(x, geom.delta_min)
    if viol is not None:
        i, j = viol
        return False, (f"spacing: PAs {i + 1} and {j + 1} are "
                       f"{abs(x[i] - x[j]):.6g} m apart (< {geom.delta_min:.6g})")
    return True, None


def spacing_violation(x: np.ndarray, delta_min: float):
    """First pair ``(i, j)`` closer than ``delta_min`` or ``None``."""
    if len(x) < 2:
        return None
    order = np.argsort(x, kind="stable")
    gaps = np.diff(x[order])
    bad = np.flatnonzero(gaps < delta_min - FEASIBILITY_ATOL)
    if not bad.size:
        return None
    a, b = sorted((int(order[bad[0]]), int(order[bad[0] + 1])))
    return a, b


def check_feasible(geom: GeometryConfig, x) -> np.ndarray:
    ok, reason = is_feasible(geom, x)
    if not ok:
        raise FeasibilityError(reason)
    return np.asarray(x, dtype=float)


def channel_entries(pa_x, users, radio: RadioConfig, height: float,
                    feed_x=None) -> np.ndarray:
    """Channel coefficients between PAs at ``pa_x`` and every user.

    ``pa_x`` may have any shape ``S``; the result has shape ``S + (K,)``.
    Without ``feed_x`` only the free-space term is applied; otherwise the
    in-waveguide response for a path of length ``|feed_x - pa_x|`` multiplies it.
    """
    pa_x = np.asarray(pa_x, dtype=float)
    users = np.asarray(users, dtype=float)
    dx = pa_x[..., None] - users[:, 0]
    r = np.sqrt(dx ** 2 + users[:, 1] ** 2 + height ** 2)
    if np.any(r == 0):
        raise SingularGeometryError("user coincides with a pinching antenna")
    h = np.sqrt(radio.eta) / r * np.exp(-2j * np.pi * r / radio.lambda_c)
    if feed_x is not None:
        h = h * _waveguide(np.abs(np.asarray(feed_x, dtype=float) - pa_x),
                           radio)[..., None]
    return h


def _waveguide(delta, radio: RadioConfig):
    return (10.0 ** (-radio.kappa * delta / 20.0)
            * np.exp(-2j * np.pi * delta / radio.lambda_g))


def free_space_channel(geom: GeometryConfig, radio: RadioConfig, x,
                       user) -> np.ndarray:
    """Free-space response from one user to every PA (length ``M``)."""
    x = check_feasible(geom, x)
    user = as_users(user)
    return channel_entries(x, user, radio, geom.H)[:, 0]


def waveguide_response(geom: GeometryConfig, radio: RadioConfig, x) -> np.ndarray:
    """In-waveguide response from each PA to its segment's feed point."""
    x = check_feasible(geom, x)
    return _waveguide(np.abs(geom.feed_x - x), radio)


def uplink_channel(geom: GeometryConfig, radio: RadioConfig, x, users) -> np.ndarray:
    """Overall ``M x K`` uplink channel matrix ``H(x)``."""
    x = check_feasible(geom, x)
    users = as_users(users)
    return channel_entries(x, users, radio, geom.H, feed_x=geom.feed_x)


def sample_users(geom: GeometryConfig, K: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform users over ``[0, D_x] x [0, D_y]`` on the ground plane."""
    xy = rng.uniform(size=(K, 2)) * np.array([geom.D_x, geom.D_y])
    return np.column_stack([xy, np.zeros(K)])


class SwanChannel:
    """Channel ``H(x)`` for fixed users, plus batched single-row variants."""

    def __init__(self, geom: GeometryConfig, radio: RadioConfig, users):
        self.geom = geom
        self.radio = radio
        self.users = as_users(users)
        self._feed = geom.feed_x
        self._rows = {}

    @property
    def K(self) -> int:
        return len(self.users)

    def matrix(self, x) -> np.ndarray:
        return channel_entries(x, self.users, self.radio, self.geom.H,
                               feed_x=self._feed)

    def rows(self, m: int, cands) -> np.ndarray:
        """Row ``m`` of ``H`` for each candidate position, shape ``(n, K)``.

        Results are cached per antenna for the last candidate array seen (by
        identity), so repeated sweeps over a fixed grid cost one evaluation.
        """
        hit = self._rows.get(m)
        if hit is not None and hit[0] is cands:
            return hit[1]
        rows = channel_entries(cands, self.users, self.radio, self.geom.H,
                               feed_x=self._feed[m])
        self._rows[m] = (cands, rows)
        return rows


class FixedChannel:
    """A channel that does not depend on antenna positions."""

    def __init__(self, H):
        self.H = np.asarray(H, dtype=complex)

    @property
    def K(self) -> int:
        return self.H.shape[1]

    def matrix(self, x=None) -> np.ndarray:
        return self.H
