"""Quantised phase codebooks, phase selection and RIS reflection gain."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .channel import CascadeChannel

# exhaustive codebook search is used when N * b stays below this
EXHAUSTIVE_BITS_LIMIT = 16


@dataclass(frozen=True)
class PhaseCodebook:
    bits: int
    phases: np.ndarray = field(repr=False)

    @property
    def size(self) -> int:
        return self.phases.size

    @property
    def step(self) -> float:
        return 2 * math.pi / self.size


@dataclass(frozen=True)
class PhaseConfig:
    thetas: np.ndarray

    @property
    def n(self) -> int:
        return self.thetas.size

    def response(self) -> np.ndarray:
        return np.exp(1j * self.thetas)


@dataclass(frozen=True)
class AngleAttenuation:
    """Reflected power falls as ``lambda0 / lambda`` beyond ``lambda0``."""

    lambda0: float = math.radians(5.0)
    form: str = "inverse"

    def __post_init__(self):
        if self.lambda0 <= 0:
            raise ValueError("lambda0 must be positive")
        if self.form != "inverse":
            raise ValueError(f"unknown attenuation law {self.form!r}")


def build_codebook(bits: int) -> PhaseCodebook:
    if not 1 <= bits <= 8:
        raise ValueError("quantisation bits must be in 1..8")
    k = np.arange(2**bits)
    return PhaseCodebook(bits, 2 * math.pi * k / 2**bits)


def nearest_codeword(angles, codebook: PhaseCodebook) -> np.ndarray:
    """Index of the codeword closest (circularly) to each angle.

    Halfway ties resolve to the lower index.
    """
    x = np.mod(np.asarray(angles, dtype=float), 2 * math.pi) / codebook.step
    idx = np.ceil(x - 0.5).astype(int)
    return np.mod(idx, codebook.size)


def select_phases(direct: complex, cascade, codebook: PhaseCodebook,
                  exhaustive: bool | None = None) -> PhaseConfig:
    """Choose per-element codewords maximising ``|direct + sum c_n e^{j theta_n}|``.

    Every element is snapped to the codeword nearest ``psi - arg(c_n)`` for a
    common reference ``psi``; :func:`scan_phases` picks the best ``psi``. With
    ``exhaustive=True`` (default when ``N * b <= 16``) every codeword
    combination is enumerated instead.
    """
    cascade = np.asarray(cascade, dtype=complex)
    if cascade.ndim != 1 or cascade.size == 0:
        raise ValueError("cascade must be a non-empty vector")
    if exhaustive is None:
        exhaustive = cascade.size * codebook.bits <= EXHAUSTIVE_BITS_LIMIT
    if exhaustive:
        return exhaustive_phases(direct, cascade, codebook)
    return scan_phases(direct, cascade, codebook)


def _snap(psi: float, cascade: np.ndarray, codebook: PhaseCodebook) -> np.ndarray:
    idx = nearest_codeword(psi - np.angle(cascade), codebook)
    idx[cascade == 0] = 0
    return idx


def align_phases(direct: complex, cascade, codebook: PhaseCodebook) -> PhaseConfig:
    """Snap every element onto the phase of ``direct`` (0 if ``direct`` is 0)."""
    cascade = np.asarray(cascade, dtype=complex)
    ref = np.angle(direct) if direct != 0 else 0.0
    return PhaseConfig(codebook.phases[_snap(ref, cascade, codebook)])


def scan_phases(direct: complex, cascade, codebook: PhaseCodebook) -> PhaseConfig:
    """Best common-reference alignment, found by sweeping ``psi`` over [0, 2 pi).

    The optimal quantised configuration snaps every element towards the phase
    of the optimal resultant, so it is one of the ``N * 2**b`` configurations
    visited as ``psi`` crosses the codeword decision boundaries. The plain
    :func:`align_phases` answer is kept unless the sweep finds a strictly
    larger magnitude.
    """
    cascade = np.asarray(cascade, dtype=complex)
    q, step = codebook.size, codebook.step
    rot = np.exp(1j * codebook.phases)
    base = align_phases(direct, cascade, codebook)
    base_val = abs(achieved(direct, cascade, base)) ** 2

    live = np.flatnonzero(cascade != 0)
    if live.size == 0:
        return base
    c = cascade[live]
    phi = np.angle(c)
    k0 = _snap(0.0, c, codebook)
    start = direct + np.dot(c, rot[k0])
    # element n steps to its next codeword when psi passes phi_n + (m + 1/2) step
    m = np.arange(q)
    where = np.mod(phi[:, None] + (m + 0.5) * step, 2 * math.pi).ravel()
    elem = np.repeat(np.arange(c.size), q)
    order = np.argsort(where, kind="stable")
    where, elem = where[order], elem[order]
    # codeword held by each element just before each of its crossings
    crossings = np.zeros(c.size, dtype=int)
    before = np.empty(elem.size, dtype=int)
    for j, n in enumerate(elem):
        before[j] = (k0[n] + crossings[n]) % q
        crossings[n] += 1
    delta = c[elem] * (rot[(before + 1) % q] - rot[before])
    vals = np.abs(start + np.cumsum(delta)) ** 2
    j = int(np.argmax(vals))
    best_val = max(abs(start) ** 2, vals[j])
    if best_val <= base_val * (1 + 1e-12):
        return base
    if abs(start) ** 2 >= vals[j]:
        idx = k0
    else:
        nxt = where[j + 1] if j + 1 < where.size else 2 * math.pi
        idx = _snap(0.5 * (where[j] + nxt), c, codebook)
    out = np.zeros(cascade.size, dtype=int)
    out[live] = idx
    return PhaseConfig(codebook.phases[out])


def exhaustive_phases(direct: complex, cascade, codebook: PhaseCodebook) -> PhaseConfig:
    cascade = np.asarray(cascade, dtype=complex)
    if cascade.size * codebook.bits > 24:
        raise ValueError("exhaustive phase search is limited to N * b <= 24")
    rot = np.exp(1j * codebook.phases)
    best_val, best = -1.0, None
    # product() enumerates lexicographically, so the first maximum is the lowest
    for combo in itertools.product(range(codebook.size), repeat=cascade.size):
        val = abs(direct + np.dot(cascade, rot[list(combo)])) ** 2
        if val > best_val:
            best_val, best = val, combo
    return PhaseConfig(codebook.phases[list(best)])


def achieved(direct: complex, cascade, config: PhaseConfig) -> complex:
    return direct + np.dot(np.asarray(cascade, dtype=complex), config.response())


def reflect_gain(config: PhaseConfig, chan: CascadeChannel, atten: float = 1.0) -> complex:
    """Unscaled reflected amplitude ``sqrt(atten) * sum h_i e^{j theta} h_ui``."""
    if config.n != chan.n:
        raise ValueError(f"config has {config.n} elements, channel has {chan.n}")
    if not 0 < atten <= 1:
        raise ValueError("attenuation must lie in (0, 1]")
    return complex(math.sqrt(atten) * np.sum(chan.to_bs * config.response() * chan.from_user))


def angle_attenuation(model: AngleAttenuation, lam: float) -> float:
    if not 0 <= lam <= math.pi:
        raise ValueError("incidence angle must lie in [0, pi]")
    if lam <= model.lambda0:
        return 1.0
    return model.lambda0 / lam
