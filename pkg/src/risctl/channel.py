"""Large-scale path loss and Rayleigh small-scale fading."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

SPEED_OF_LIGHT = 2.998e8

# integer tags keep per-link sub-seeds disjoint across link classes
LINK_DIRECT = 1   # user -> BS, g_u
LINK_RIS_BS = 2   # RIS_i -> BS, h_i
LINK_USER_RIS = 3  # user -> RIS_i, h_ui
LINK_PHASE = 4     # common phase of an interferer's coherent reflection


@dataclass(frozen=True)
class PathLossParams:
    f: float = 2.4e9
    gt: float = 1.0
    gr: float = 1.0
    alpha: float = 2.0
    c: float = SPEED_OF_LIGHT

    def __post_init__(self):
        if self.f <= 0:
            raise ValueError("carrier frequency must be positive")
        if self.gt <= 0 or self.gr <= 0:
            raise ValueError("antenna gains must be positive")
        if self.alpha < 2:
            raise ValueError("path-loss exponent must be >= 2")


@dataclass(frozen=True)
class CascadeChannel:
    """Per-element fading of the two hops through one RIS."""

    to_bs: np.ndarray
    from_user: np.ndarray

    def __post_init__(self):
        if self.to_bs.ndim != 1 or self.to_bs.shape != self.from_user.shape:
            raise ValueError("cascade vectors must be 1-D with equal length")
        if self.to_bs.size < 1:
            raise ValueError("cascade needs at least one element")

    @property
    def n(self) -> int:
        return self.to_bs.size


def unit_pathloss(params: PathLossParams) -> float:
    """Free-space loss at 1 m: ``(c * sqrt(gt * gr) / (4 pi f))**2``."""
    return (params.c * math.sqrt(params.gt * params.gr) / (4 * math.pi * params.f)) ** 2


def pathloss_direct(C: float, d, alpha: float):
    d = np.asarray(d, dtype=float)
    if np.any(d <= 0):
        raise ValueError("distance must be positive")
    out = C * d ** (-alpha)
    return float(out) if out.ndim == 0 else out


def pathloss_reflected(C: float, d_i, d_ui, alpha: float):
    """Product-distance loss of the user -> RIS -> BS leg."""
    d_i = np.asarray(d_i, dtype=float)
    d_ui = np.asarray(d_ui, dtype=float)
    if np.any(d_i <= 0) or np.any(d_ui <= 0):
        raise ValueError("distance must be positive")
    return pathloss_direct(C, d_i * d_ui, alpha)


def sample_cn01(rng: np.random.Generator, n: int) -> np.ndarray:
    """Draw ``n`` i.i.d. CN(0, 1) gains.

    Real and imaginary parts are drawn interleaved, so the first ``k`` gains of
    a length-``n`` draw equal a length-``k`` draw from the same stream.
    """
    if n < 1:
        raise ValueError("need at least one draw")
    z = rng.standard_normal((n, 2)) * math.sqrt(0.5)
    return z[:, 0] + 1j * z[:, 1]


def link_rng(master_seed: int, frame: int, link: int, *index: int) -> np.random.Generator:
    """Independent stream for one link in one frame.

    Derived from ``(master_seed, frame, link, *index)`` through
    :class:`numpy.random.SeedSequence`, so adding links or methods never shifts
    the draws of another link.
    """
    ss = np.random.SeedSequence([int(master_seed), int(frame), int(link), *map(int, index)])
    return np.random.default_rng(ss)
