"""Desired-signal amplitude, aggregate interference and SINR at the BS.

User index 0 of a :class:`LinkBudget` is the desired user; the remaining rows
are interferers. Interferers carry independent data, so their received powers
add; each interferer's own direct and reflected paths add in amplitude.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import CascadeChannel
from .ris import PhaseConfig


@dataclass(frozen=True)
class LinkBudget:
    """Everything needed to evaluate the SINR of one frame.

    Attributes
    ----------
    p_tx, noise : float
        Transmit power of every user and noise power at the BS, in watts.
    direct : (U,) complex
        ``sqrt(eta_u) * g_u`` for each user.
    to_bs : (R, N) complex
        RIS -> BS fading ``h_i``.
    from_user : (U, R, N) complex
        User -> RIS fading ``h_ui``.
    scale : (U, R) float
        ``sqrt(eta_ui)``, the product-distance amplitude of each cascade.
    atten : (U, R) float
        Angle attenuation applied to each user's reflection at each RIS.
    """

    p_tx: float
    noise: float
    direct: np.ndarray
    to_bs: np.ndarray
    from_user: np.ndarray
    scale: np.ndarray
    atten: np.ndarray

    def __post_init__(self):
        if self.p_tx <= 0 or self.noise <= 0:
            raise ValueError("transmit and noise power must be positive")
        U = self.direct.shape[0]
        R, N = self.to_bs.shape
        if self.from_user.shape != (U, R, N):
            raise ValueError(f"from_user shape {self.from_user.shape} != {(U, R, N)}")
        if self.scale.shape != (U, R) or self.atten.shape != (U, R):
            raise ValueError("scale and atten must be (users, RISs)")
        if np.any(self.atten <= 0) or np.any(self.atten > 1):
            raise ValueError("attenuation must lie in (0, 1]")

    @property
    def n_users(self) -> int:
        return self.direct.shape[0]

    @property
    def n_ris(self) -> int:
        return self.to_bs.shape[0]

    @property
    def n_elements(self) -> int:
        return self.to_bs.shape[1]

    def cascade(self, user: int, ris: int) -> CascadeChannel:
        """Path-loss-scaled cascade of one (user, RIS) pair."""
        return CascadeChannel(self.scale[user, ris] * self.to_bs[ris],
                              self.from_user[user, ris])

    def desired_cascade(self, ris: int) -> np.ndarray:
        """Per-element terms ``sqrt(eta_li) h_i[n] h_li[n]`` for phase selection."""
        return self.scale[0, ris] * self.to_bs[ris] * self.from_user[0, ris]

    def with_power(self, p_tx: float) -> "LinkBudget":
        return LinkBudget(p_tx, self.noise, self.direct, self.to_bs,
                          self.from_user, self.scale, self.atten)


def as_onoff(v, n_ris: int) -> np.ndarray:
    v = np.asarray(v)
    if v.shape != (n_ris,):
        raise ValueError(f"ON-OFF vector must have length {n_ris}, got {v.shape}")
    if not np.all((v == 0) | (v == 1)):
        raise ValueError("ON-OFF states must be 0 or 1")
    return v.astype(np.int8)


def stack_configs(configs, n_ris: int, n_elements: int) -> np.ndarray:
    if len(configs) != n_ris:
        raise ValueError(f"expected {n_ris} phase configs, got {len(configs)}")
    thetas = np.stack([c.thetas if isinstance(c, PhaseConfig) else np.asarray(c)
                       for c in configs])
    if thetas.shape != (n_ris, n_elements):
        raise ValueError(f"phase configs shape {thetas.shape} != {(n_ris, n_elements)}")
    return thetas


def reflected_amplitudes(budget: LinkBudget, configs) -> np.ndarray:
    """(U, R) complex reflected amplitude of every user through every RIS."""
    thetas = stack_configs(configs, budget.n_ris, budget.n_elements)
    per_ris = budget.to_bs * np.exp(1j * thetas)
    summed = np.einsum("rn,urn->ur", per_ris, budget.from_user)
    return budget.scale * np.sqrt(budget.atten) * summed


def _amplitudes(budget: LinkBudget, v: np.ndarray, refl: np.ndarray) -> np.ndarray:
    return budget.direct + (refl * v).sum(axis=1)


def _gamma(p_tx: float, noise: float, amps: np.ndarray) -> float:
    signal = p_tx * abs(amps[0]) ** 2
    interference = p_tx * float(np.sum(np.abs(amps[1:]) ** 2))
    return signal / (interference + noise)


def desired_amplitude(budget: LinkBudget, v, configs) -> complex:
    v = as_onoff(v, budget.n_ris)
    refl = reflected_amplitudes(budget, configs)
    return complex(_amplitudes(budget, v, refl)[0])


def interference_power(budget: LinkBudget, v, configs) -> float:
    v = as_onoff(v, budget.n_ris)
    amps = _amplitudes(budget, v, reflected_amplitudes(budget, configs))
    return budget.p_tx * float(np.sum(np.abs(amps[1:]) ** 2))


def sinr_from_reflections(budget: LinkBudget, v, refl: np.ndarray) -> float:
    """SINR for ON-OFF vector ``v`` given precomputed reflected amplitudes."""
    v = as_onoff(v, budget.n_ris)
    return _gamma(budget.p_tx, budget.noise, _amplitudes(budget, v, refl))


def sinr(budget: LinkBudget, v, configs) -> float:
    return sinr_from_reflections(budget, v, reflected_amplitudes(budget, configs))


def sinr_direct(budget: LinkBudget) -> float:
    """SINR with every RIS off (direct links only)."""
    return _gamma(budget.p_tx, budget.noise, budget.direct)
