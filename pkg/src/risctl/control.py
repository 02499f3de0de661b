"""RIS ON-OFF strategies: threshold control, exhaustive oracle and baselines."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np

from .link import LinkBudget, reflected_amplitudes, sinr_direct, sinr_from_reflections
from .ris import PhaseCodebook, select_phases

MAX_EXHAUSTIVE_RIS = 20
_CHUNK = 1 << 14
# vectorised screening keeps every vector this close to the best, then re-scores exactly
_SCREEN_RTOL = 1e-9

METHODS = ("tpc", "reactive", "always_on", "oracle", "direct")


@dataclass(frozen=True)
class ControlDecision:
    v: np.ndarray
    configs: tuple
    gamma: float
    method: str

    @property
    def v_bits(self) -> str:
        return "".join(str(int(b)) for b in self.v)


def desired_phases(budget: LinkBudget, codebook: PhaseCodebook) -> tuple:
    """Per-RIS codebook configuration aligned to the desired user."""
    d = complex(budget.direct[0])
    return tuple(select_phases(d, budget.desired_cascade(i), codebook)
                 for i in range(budget.n_ris))


def evaluate_on(decision: ControlDecision, budget: LinkBudget) -> ControlDecision:
    """Score an existing (V, Phi) decision on a different geometry."""
    refl = reflected_amplitudes(budget, decision.configs)
    return dataclasses.replace(decision, gamma=sinr_from_reflections(budget, decision.v, refl))


def _threshold_rule(budget, refl, sequential):
    R = budget.n_ris
    g_direct = sinr_direct(budget)
    v = np.zeros(R, dtype=np.int8)
    for i in range(R):
        trial = v.copy() if sequential else np.zeros(R, dtype=np.int8)
        trial[i] = 1
        # ties keep the RIS on
        v[i] = 1 if sinr_from_reflections(budget, trial, refl) >= g_direct else 0
    return v


def tpc_onoff(budget: LinkBudget, codebook: PhaseCodebook, configs=None,
              sequential: bool = False) -> ControlDecision:
    """Per-RIS threshold control.

    Each RIS gets its codebook phases, then is switched on iff the SINR with
    that RIS alone active is at least the direct-link SINR. With
    ``sequential=True`` the trial for RIS ``i`` also keeps the RISs already
    switched on.
    """
    configs = desired_phases(budget, codebook) if configs is None else tuple(configs)
    refl = reflected_amplitudes(budget, configs)
    v = _threshold_rule(budget, refl, sequential)
    return ControlDecision(v, configs, sinr_from_reflections(budget, v, refl), "tpc")


def reactive_onoff(stale_budget: LinkBudget, codebook: PhaseCodebook,
                   eval_budget: LinkBudget | None = None, configs=None) -> ControlDecision:
    """Threshold control on last-observed positions.

    The decision only sees ``stale_budget``; if ``eval_budget`` is given the
    returned SINR is scored on it.
    """
    d = tpc_onoff(stale_budget, codebook, configs)
    d = dataclasses.replace(d, method="reactive")
    return d if eval_budget is None else evaluate_on(d, eval_budget)


def always_on(budget: LinkBudget, codebook: PhaseCodebook, configs=None) -> ControlDecision:
    configs = desired_phases(budget, codebook) if configs is None else tuple(configs)
    refl = reflected_amplitudes(budget, configs)
    v = np.ones(budget.n_ris, dtype=np.int8)
    return ControlDecision(v, configs, sinr_from_reflections(budget, v, refl), "always_on")


def direct_only(budget: LinkBudget, codebook: PhaseCodebook, configs=None) -> ControlDecision:
    configs = desired_phases(budget, codebook) if configs is None else tuple(configs)
    v = np.zeros(budget.n_ris, dtype=np.int8)
    return ControlDecision(v, configs, sinr_direct(budget), "direct")


def _bits(k: np.ndarray, R: int) -> np.ndarray:
    # RIS 0 is the most significant bit, so numeric order == lexicographic order
    shifts = np.arange(R - 1, -1, -1)
    return ((k[:, None] >> shifts) & 1).astype(np.int8)


def exhaustive_onoff(budget: LinkBudget, codebook: PhaseCodebook, configs=None) -> ControlDecision:
    """Best ON-OFF vector over all ``2**R`` candidates with phases held fixed.

    Ties go to the vector with fewer active RISs, then the lexicographically
    smallest one.
    """
    R = budget.n_ris
    if R > MAX_EXHAUSTIVE_RIS:
        raise ValueError(f"exhaustive search limited to {MAX_EXHAUSTIVE_RIS} RISs, got {R}")
    configs = desired_phases(budget, codebook) if configs is None else tuple(configs)
    refl = reflected_amplitudes(budget, configs)
    p, s2 = budget.p_tx, budget.noise

    total = 1 << R
    scores = np.empty(total)
    for start in range(0, total, _CHUNK):
        k = np.arange(start, min(start + _CHUNK, total))
        V = _bits(k, R).astype(float)
        amps = budget.direct[None, :] + V @ refl.T
        pw = np.abs(amps) ** 2
        scores[start:start + k.size] = p * pw[:, 0] / (p * pw[:, 1:].sum(axis=1) + s2)

    top = scores.max()
    cand = np.flatnonzero(scores >= top * (1 - _SCREEN_RTOL))
    V = _bits(cand, R)
    order = np.lexsort((cand, V.sum(axis=1)))
    best_v, best_g = None, -np.inf
    for j in order:
        g = sinr_from_reflections(budget, V[j], refl)
        if g > best_g:
            best_v, best_g = V[j], g
    return ControlDecision(best_v, configs, best_g, "oracle")


STRATEGIES = {
    "tpc": tpc_onoff,
    "always_on": always_on,
    "oracle": exhaustive_onoff,
    "direct": direct_only,
}
