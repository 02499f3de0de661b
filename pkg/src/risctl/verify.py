"""Small-instance oracle checks run by ``risctl verify``."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import control
from .channel import pathloss_direct, pathloss_reflected, sample_cn01
from .link import LinkBudget, sinr, sinr_direct
from .predictor import batch_loss, init_params, lstm_backward, lstm_forward, mse_loss
from .ris import (PhaseConfig, achieved, align_phases, build_codebook, exhaustive_phases,
                  select_phases)


@dataclass
class Check:
    name: str
    passed: bool
    measured: float
    tolerance: str

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'}  {self.name:<34} measured={self.measured:<12.4g} {self.tolerance}"


def random_budget(rng: np.random.Generator, n_users=11, n_ris=10, n_elements=4,
                  p_tx=1.0, noise=1e-12) -> LinkBudget:
    """Random but physically scaled budget (path-loss magnitudes ~1e-5..1e-3)."""
    U, R, N = n_users, n_ris, n_elements
    direct = 10 ** rng.uniform(-5, -3, U) * sample_cn01(rng, U)
    to_bs = sample_cn01(rng, R * N).reshape(R, N)
    from_user = sample_cn01(rng, U * R * N).reshape(U, R, N)
    scale = 10 ** rng.uniform(-5.5, -4, (U, R))
    atten = rng.uniform(0.05, 1.0, (U, R))
    atten[0] = 1.0
    return LinkBudget(p_tx, noise, direct, to_bs, from_user, scale, atten)


def check_onoff(seed=0, instances=100) -> list[Check]:
    rng = np.random.default_rng(seed)
    cb = build_codebook(2)
    worst = np.inf
    for _ in range(instances):
        b = random_budget(rng, n_users=int(rng.integers(1, 8)), n_ris=int(rng.integers(1, 8)))
        o = control.exhaustive_onoff(b, cb).gamma
        others = (control.tpc_onoff(b, cb).gamma, control.always_on(b, cb).gamma, sinr_direct(b))
        worst = min(worst, min(o - g for g in others))
    mismatch = 0
    for _ in range(instances):
        b = random_budget(rng, n_ris=1)
        t, o = control.tpc_onoff(b, cb), control.exhaustive_onoff(b, cb)
        mismatch += int(t.gamma != o.gamma)
    return [Check("onoff: oracle dominance", worst >= 0, worst, "min(oracle - other) >= 0"),
            Check("onoff: greedy == oracle at R=1", mismatch == 0, mismatch, "mismatches == 0")]


def check_codebook(seed=0, instances=200, bits=2) -> list[Check]:
    rng = np.random.default_rng(seed)
    cb = build_codebook(bits)
    worst_db, plain_db, sandwich_bad, exact = 0.0, 0.0, 0, 0
    for _ in range(instances):
        n = int(rng.integers(1, 4))
        a = complex(sample_cn01(rng, 1)[0])
        c = sample_cn01(rng, n) * rng.uniform(0.1, 2.0, n)
        got = abs(achieved(a, c, select_phases(a, c, cb, exhaustive=False)))
        plain = abs(achieved(a, c, align_phases(a, c, cb)))
        ex = abs(achieved(a, c, exhaustive_phases(a, c, cb)))
        worst_db = max(worst_db, 20 * math.log10(ex / got))
        plain_db = max(plain_db, 20 * math.log10(ex / plain))
        exact += int(got >= ex)
        lo = abs(a) + math.cos(math.pi / 2**bits) * np.abs(c).sum()
        hi = abs(a) + np.abs(c).sum()
        sandwich_bad += int(not (lo * (1 - 1e-12) <= got <= hi * (1 + 1e-12)))
    return [Check("codebook: selection vs exhaustive", worst_db <= 0.5, worst_db, "gap <= 0.5 dB"),
            Check("codebook: analytic sandwich", sandwich_bad == 0, sandwich_bad, "violations == 0"),
            Check("codebook: exact optimum fraction", exact / instances >= 0.9, exact / instances, ">= 0.9"),
            Check("codebook: plain alignment gap", True, plain_db, "reported")]


def gradient_check(backward=lstm_backward, hidden=4, eps=1e-5, seed=0) -> dict[str, float]:
    """Relative error between analytic and central-difference gradients per parameter."""
    rng = np.random.default_rng(seed)
    params = init_params(hidden, seed)
    x = rng.normal(size=(3, 8, 2))
    y = rng.normal(size=(3, 2))
    pred, cache = lstm_forward(params, x)
    analytic = backward(params, cache, mse_loss(pred, y)[1])
    out = {}
    for k, p in params.items():
        num = np.zeros_like(p)
        for idx in np.ndindex(p.shape):
            orig = p[idx]
            p[idx] = orig + eps
            up = batch_loss(params, x, y)
            p[idx] = orig - eps
            down = batch_loss(params, x, y)
            p[idx] = orig
            num[idx] = (up - down) / (2 * eps)
        denom = max(np.linalg.norm(num) + np.linalg.norm(analytic[k]), 1e-300)
        out[k] = float(np.linalg.norm(num - analytic[k]) / denom)
    return out


def check_gradients(backward=lstm_backward) -> list[Check]:
    errs = gradient_check(backward)
    return [Check(f"lstm grad {k}", e < 1e-4, e, "rel err < 1e-4") for k, e in errs.items()]


def check_equations(seed=0, instances=1000) -> list[Check]:
    rng = np.random.default_rng(seed)
    cb = build_codebook(2)
    bad = 0
    for _ in range(instances):
        b = random_budget(rng, n_users=int(rng.integers(1, 12)), n_ris=int(rng.integers(1, 6)),
                          n_elements=4)
        cfg = [PhaseConfig(rng.choice(cb.phases, b.n_elements)) for _ in range(b.n_ris)]
        bad += int(sinr(b, np.zeros(b.n_ris, dtype=int), cfg) != sinr_direct(b))
    worst = 0.0
    for _ in range(instances):
        C = 10 ** rng.uniform(-6, 0)
        d_i, d_u, alpha = rng.uniform(1, 1000), rng.uniform(1, 1000), rng.uniform(2, 4)
        ref = pathloss_direct(C, d_i, alpha) * pathloss_direct(1.0, d_u, alpha)
        worst = max(worst, abs(pathloss_reflected(C, d_i, d_u, alpha) / ref - 1))
    return [Check("sinr(v=0) == sinr_direct", bad == 0, bad, "bit-exact mismatches == 0"),
            Check("pathloss product identity", worst <= 1e-12, worst, "rel err <= 1e-12")]


def run_all(backward=lstm_backward) -> list[Check]:
    return check_onoff() + check_codebook() + check_gradients(backward) + check_equations()
