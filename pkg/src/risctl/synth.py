"""Synthetic GPS tracks written in the Geolife PLT layout.

Used when the real dataset is not available: street-grid motion with smooth
turns, speed jitter, GPS noise, irregular sampling and occasional dropouts.
"""

from __future__ import annotations

import math
from datetime import datetime, timedelta, timezone
from pathlib import Path

import numpy as np

PLT_HEADER = (
    "Geolife trajectory\n"
    "WGS 84\n"
    "Altitude is in Feet\n"
    "Reserved 3\n"
    "0,2,255,My Track,0,0,2,8421376\n"
    "0\n"
)
_EXCEL_EPOCH = datetime(1899, 12, 30, tzinfo=timezone.utc)
_BEIJING = (39.98, 116.33)

# (speed range m/s, turn rate deg/s) per travel mode
MODES = {
    "walk": ((0.9, 1.6), 15.0),
    "bike": ((3.0, 5.0), 10.0),
    "car": ((7.0, 12.0), 6.0),
}


def simulate_track(rng: np.random.Generator, duration: float = 1800.0, mode: str = "walk",
                   origin=_BEIJING, gps_sigma: float = 2.0, step: float = 1.0) -> np.ndarray:
    """Return an (n, 3) array of (t, lat, lon) sampled every ``step`` seconds."""
    (vmin, vmax), turn_rate = MODES[mode]
    n = int(duration / step) + 1
    heading = rng.uniform(0, 2 * math.pi)
    target = heading
    speed = rng.uniform(vmin, vmax)
    cruise = speed
    x = y = 0.0
    xs, ys = np.empty(n), np.empty(n)
    next_turn = rng.exponential(90.0)
    for k in range(n):
        xs[k], ys[k] = x, y
        t = k * step
        if t >= next_turn:
            target = heading + rng.choice([-1, 1]) * rng.choice([math.pi / 2, math.pi / 4, math.pi / 2])
            next_turn = t + rng.exponential(90.0)
            if rng.random() < 0.15:
                cruise = rng.uniform(vmin, vmax)
        err = target - heading
        max_turn = math.radians(turn_rate) * step
        heading += max(-max_turn, min(max_turn, err)) + rng.normal(0, 0.01)
        speed += 0.1 * (cruise - speed) * step + rng.normal(0, 0.05 * vmax) * math.sqrt(step)
        speed = max(0.0, speed)
        x += speed * math.cos(heading) * step
        y += speed * math.sin(heading) * step
    xs += rng.normal(0, gps_sigma, n)
    ys += rng.normal(0, gps_sigma, n)
    lat0, lon0 = origin
    lat = lat0 + np.degrees(ys / 6_371_000)
    lon = lon0 + np.degrees(xs / (6_371_000 * math.cos(math.radians(lat0))))
    return np.column_stack([np.arange(n) * step, lat, lon])


def subsample(rng: np.random.Generator, track: np.ndarray, gap_prob: float = 0.002) -> np.ndarray:
    """Irregular 1-5 s sampling with occasional multi-minute dropouts."""
    keep = [0]
    i = 0
    while True:
        i += int(rng.choice([1, 2, 5], p=[0.3, 0.3, 0.4]))
        if rng.random() < gap_prob:
            i += int(rng.integers(90, 240))
        if i >= len(track):
            break
        keep.append(i)
    return track[keep]


def to_plt(track: np.ndarray, start: datetime) -> str:
    rows = [PLT_HEADER]
    for t, lat, lon in track:
        when = start + timedelta(seconds=float(t))
        days = (when - _EXCEL_EPOCH).total_seconds() / 86400
        rows.append(f"{lat:.6f},{lon:.6f},0,{160:d},{days:.10f},"
                    f"{when:%Y-%m-%d},{when:%H:%M:%S}\n")
    return "".join(rows)


def write_corpus(out_dir, n_files: int = 71, seed: int = 0, duration=(1200.0, 2400.0),
                 modes=("walk", "walk", "bike", "car")) -> list[Path]:
    """Write ``n_files`` synthetic tracks as ``NNN.plt`` under ``out_dir``."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    paths = []
    for k in range(n_files):
        mode = modes[k % len(modes)]
        origin = (_BEIJING[0] + rng.uniform(-0.05, 0.05), _BEIJING[1] + rng.uniform(-0.08, 0.08))
        track = simulate_track(rng, rng.uniform(*duration), mode, origin)
        track = subsample(rng, track)
        start = datetime(2008, 10, 23, 5, 0, tzinfo=timezone.utc) + timedelta(hours=int(rng.integers(0, 2000)))
        p = out_dir / f"{k:03d}.plt"
        p.write_text(to_plt(track, start))
        paths.append(p)
    return paths
