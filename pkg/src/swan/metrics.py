"""Link-level metrics for a hybrid receiver ``G_BB^H G_RF^H``."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DegenerateReceiverError
from .geometry import RadioConfig

DEGENERATE_NORM = 1e-300


@dataclass
class BeamformerState:
    """Analog matrix, digital matrix, connectivity mask and WMMSE weights."""

    G_RF: np.ndarray
    G_BB: np.ndarray
    mask: Optional[np.ndarray] = None
    omega: Optional[np.ndarray] = None

    def __post_init__(self):
        self.G_RF = np.asarray(self.G_RF, dtype=complex)
        self.G_BB = np.asarray(self.G_BB, dtype=complex)
        if self.mask is None:
            self.mask = np.ones(self.G_RF.shape, dtype=bool)
        self.mask = np.asarray(self.mask, dtype=bool)
        if self.omega is None:
            self.omega = np.ones(self.G_BB.shape[1])
        self.omega = np.asarray(self.omega, dtype=float)

    @property
    def K(self) -> int:
        return self.G_BB.shape[1]

    def combiner(self) -> np.ndarray:
        """Effective ``M x K`` combining matrix ``G_RF G_BB``."""
        return self.G_RF @ self.G_BB

    def check(self, atol: float = 1e-9) -> None:
        """Raise ``ValueError`` if the state violates its invariants."""
        M, N = self.G_RF.shape
        if self.G_BB.shape[0] != N or self.mask.shape != (M, N):
            raise ValueError("inconsistent beamformer shapes")
        mod = np.abs(self.G_RF)
        if np.any(np.abs(mod[self.mask] - 1) > atol):
            raise ValueError("analog entries must be unit modulus on the mask")
        if np.any(mod[~self.mask] != 0):
            raise ValueError("analog entries must vanish off the mask")
        if np.any(self.omega <= 0):
            raise ValueError("WMMSE weights must be positive")

    def copy(self) -> "BeamformerState":
        return BeamformerState(self.G_RF.copy(), self.G_BB.copy(),
                               self.mask.copy(), self.omega.copy())


@dataclass(frozen=True)
class EnergyModel:
    """Per-component power draw in watts (defaults from the EE study)."""

    P_PA: float = 0.1
    P_PS: float = 0.01
    P_RF: float = 0.1

    def __post_init__(self):
        if min(self.P_PA, self.P_PS, self.P_RF) <= 0:
            raise ValueError("component powers must be positive")


def _cross(V: np.ndarray, H: np.ndarray) -> np.ndarray:
    # S[k, i] = v_k^H h_i
    return V.conj().T @ H


def sinr_all(state: BeamformerState, H: np.ndarray, radio: RadioConfig) -> np.ndarray:
    V = state.combiner()
    S = _cross(V, H)
    noise = np.sum(np.abs(V) ** 2, axis=0)
    bad = np.flatnonzero(np.sqrt(noise) < DEGENERATE_NORM)
    if bad.size:
        raise DegenerateReceiverError(f"receiver for user {bad[0]} is zero")
    power = np.abs(S) ** 2
    signal = np.diag(power)
    interference = power.sum(axis=1) - signal
    return signal / (interference + radio.noise_to_power * noise)


def sinr(state: BeamformerState, H: np.ndarray, radio: RadioConfig, k: int) -> float:
    """SINR of user ``k`` (0-based)."""
    return float(sinr_all(state, H, radio)[k])


def user_rates(state: BeamformerState, H: np.ndarray, radio: RadioConfig) -> np.ndarray:
    return np.log2(1.0 + sinr_all(state, H, radio))


def sum_rate(state: BeamformerState, H: np.ndarray, radio: RadioConfig) -> float:
    """Achievable sum rate in bits/s/Hz."""
    return float(np.sum(user_rates(state, H, radio)))


def mse_from_combiner(V: np.ndarray, H: np.ndarray, radio: RadioConfig) -> np.ndarray:
    """Per-user MSE for effective combiners ``V`` (columns ``G_RF g_k``)."""
    S = _cross(V, H)
    P = radio.P
    return (P * np.sum(np.abs(S) ** 2, axis=1)
            - 2 * P * np.real(np.diag(S))
            + radio.sigma2 * np.sum(np.abs(V) ** 2, axis=0)
            + P)


def mse_all(state: BeamformerState, H: np.ndarray, radio: RadioConfig) -> np.ndarray:
    return mse_from_combiner(state.combiner(), H, radio)


def mse_per_user(state: BeamformerState, H: np.ndarray, radio: RadioConfig,
                 k: int) -> float:
    return float(mse_all(state, H, radio)[k])


def weighted_mse_objective(state: BeamformerState, H: np.ndarray,
                           radio: RadioConfig) -> float:
    """``sum_k omega_k e_k - ln omega_k`` (natural log)."""
    e = mse_all(state, H, radio)
    return float(np.sum(state.omega * e - np.log(state.omega)))


def energy_efficiency(rate: float, radio: RadioConfig, em: EnergyModel,
                      N_RF: int, M: int, N_PS: int) -> float:
    """Sum rate per watt of total consumed power."""
    total = radio.P + N_RF * em.P_RF + M * em.P_PA + N_PS * em.P_PS
    return float(rate / total)
