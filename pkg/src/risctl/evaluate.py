"""Horizon error of a one-step predictor over held-out trajectories."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geom import haversine_arrays
from .predictor import linear_next, rollout
from .trajectory import heading_change, make_windows

CURVE_THRESHOLD = math.radians(30.0)


@dataclass
class HorizonErrors:
    """Per-window errors (m) at the final horizon step for one trajectory segment."""

    name: str
    model: np.ndarray
    baseline: np.ndarray
    curved: np.ndarray
    truth: np.ndarray      # (n, 2) true point at the horizon
    predicted: np.ndarray  # (n, 2) model forecast at the horizon
    linear: np.ndarray     # (n, 2) constant-velocity forecast at the horizon


def horizon_errors(step_fn, segment, steps: int, in_len: int = 8) -> HorizonErrors | None:
    w = make_windows(segment, in_len, steps)
    if len(w) == 0:
        return None
    pred = rollout(step_fn, w.inputs, steps)[:, -1]
    lin = rollout(linear_next, w.inputs, steps)[:, -1]
    t = w.targets
    xy = segment.coords()
    curved = np.array([heading_change(xy[s:s + in_len + steps], in_len) > CURVE_THRESHOLD
                       for s in range(len(w))])
    return HorizonErrors(segment.name,
                         haversine_arrays(t[:, 0], t[:, 1], pred[:, 0], pred[:, 1]),
                         haversine_arrays(t[:, 0], t[:, 1], lin[:, 0], lin[:, 1]),
                         curved, t, pred, lin)


@dataclass
class EvalReport:
    split: str
    horizon_s: float
    per_trajectory: list   # (name, windows, mean model error, mean baseline error)
    mean_error_m: float
    baseline_error_m: float
    curved_windows: int
    curved_error_m: float
    curved_baseline_m: float
    n_trajectories: int

    def lines(self) -> list[str]:
        out = [f"split={self.split} horizon={self.horizon_s:g}s trajectories={self.n_trajectories}"]
        for name, n, e, b in self.per_trajectory:
            out.append(f"  {name:<28} windows={n:<6d} lstm={e:9.2f} m  linear={b:9.2f} m")
        out.append(f"mean error: lstm={self.mean_error_m:.2f} m linear={self.baseline_error_m:.2f} m")
        out.append(f"curved windows ({self.curved_windows}): lstm={self.curved_error_m:.2f} m "
                   f"linear={self.curved_baseline_m:.2f} m")
        return out


def evaluate_segments(step_fn, segments, steps: int, dt: float, split: str = "test",
                      in_len: int = 8) -> tuple[EvalReport, list[HorizonErrors]]:
    parts = [h for h in (horizon_errors(step_fn, s, steps, in_len) for s in segments) if h is not None]
    if not parts:
        raise ValueError("no segment is long enough for the prediction horizon")
    per = {}
    for h in parts:
        per.setdefault(h.name, []).append(h)
    rows = []
    for name, hs in per.items():
        m = np.concatenate([h.model for h in hs])
        b = np.concatenate([h.baseline for h in hs])
        rows.append((name, m.size, float(m.mean()), float(b.mean())))
    model = np.concatenate([h.model for h in parts])
    base = np.concatenate([h.baseline for h in parts])
    curved = np.concatenate([h.curved for h in parts])
    nc = int(curved.sum())
    report = EvalReport(split, steps * dt, rows, float(model.mean()), float(base.mean()), nc,
                        float(model[curved].mean()) if nc else float("nan"),
                        float(base[curved].mean()) if nc else float("nan"), len(per))
    return report, parts
