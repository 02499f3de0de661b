"""Geolife PLT ingestion, resampling, windowing and the distance metric."""

from __future__ import annotations

import hashlib
import json
import logging
import math
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .geom import GeoPoint, haversine_arrays

log = logging.getLogger(__name__)

PLT_HEADER_LINES = 6
DEFAULT_DT = 5.0
MAX_GAP_S = 60.0
IN_LEN = 8
MANIFEST_VERSION = 1


class PltParseError(ValueError):
    def __init__(self, msg, line=None, source=None):
        where = f"{source}:" if source else ""
        where += f"line {line}: " if line is not None else ""
        super().__init__(where + msg)
        self.line = line


@dataclass(frozen=True)
class Trajectory:
    """Time-ordered track stored as parallel arrays (degrees, seconds)."""

    lat: np.ndarray
    lon: np.ndarray
    t: np.ndarray
    dropped: int = 0
    name: str = ""

    def __post_init__(self):
        if not (self.lat.shape == self.lon.shape == self.t.shape) or self.lat.ndim != 1:
            raise ValueError("lat, lon and t must be equal-length vectors")
        if self.t.size < 2:
            raise ValueError("a trajectory needs at least two points")
        if np.any(np.diff(self.t) <= 0):
            raise ValueError("timestamps must be strictly increasing")

    def __len__(self):
        return self.t.size

    @property
    def duration(self) -> float:
        return float(self.t[-1] - self.t[0])

    @property
    def points(self) -> list[GeoPoint]:
        return [GeoPoint(float(a), float(b), float(c)) for a, b, c in zip(self.lat, self.lon, self.t)]

    def coords(self) -> np.ndarray:
        return np.column_stack([self.lat, self.lon])

    def slice(self, start: int, stop: int) -> "Trajectory":
        return Trajectory(self.lat[start:stop], self.lon[start:stop], self.t[start:stop], name=self.name)


def _timestamp(date: str, clock: str) -> float:
    dt = datetime.strptime(f"{date} {clock}", "%Y-%m-%d %H:%M:%S")
    return dt.replace(tzinfo=timezone.utc).timestamp()


def parse_plt(text: str, source: str = "") -> Trajectory:
    """Parse the body of a Geolife ``.plt`` file.

    Records that go backwards in time or repeat a timestamp are dropped and
    counted in :attr:`Trajectory.dropped`.
    """
    lines = text.splitlines()
    if len(lines) < PLT_HEADER_LINES:
        raise PltParseError("missing 6-line header", source=source)
    lat, lon, ts = [], [], []
    dropped = 0
    for lineno, raw in enumerate(lines[PLT_HEADER_LINES:], start=PLT_HEADER_LINES + 1):
        line = raw.strip()
        if not line:
            continue
        parts = line.split(",")
        if len(parts) != 7:
            raise PltParseError(f"expected 7 fields, got {len(parts)}", lineno, source)
        try:
            la, lo = float(parts[0]), float(parts[1])
            float(parts[3])
            float(parts[4])
            t = _timestamp(parts[5].strip(), parts[6].strip())
        except ValueError as exc:
            raise PltParseError(f"bad record {line!r} ({exc})", lineno, source) from None
        if not (-90 <= la <= 90 and -180 <= lo <= 180):
            raise PltParseError(f"coordinates out of range in {line!r}", lineno, source)
        if ts and t <= ts[-1]:
            dropped += 1
            continue
        lat.append(la)
        lon.append(lo)
        ts.append(t)
    if len(ts) < 2:
        raise PltParseError("fewer than two valid points", source=source)
    if dropped:
        log.info("%s: dropped %d out-of-order records", source or "plt", dropped)
    return Trajectory(np.array(lat), np.array(lon), np.array(ts), dropped, source)


def read_plt(path) -> Trajectory:
    path = Path(path)
    return parse_plt(path.read_text(), source=path.name)


def split_gaps(traj: Trajectory, max_gap: float = MAX_GAP_S) -> list[Trajectory]:
    cuts = np.flatnonzero(np.diff(traj.t) > max_gap) + 1
    bounds = [0, *cuts.tolist(), len(traj)]
    return [traj.slice(a, b) for a, b in zip(bounds[:-1], bounds[1:]) if b - a >= 2]


def resample(traj: Trajectory, dt: float = DEFAULT_DT, max_gap: float = MAX_GAP_S) -> list[Trajectory]:
    """Linearly interpolate onto a ``dt`` grid, one output per gap-free segment.

    Segments shorter than ``dt`` are discarded. Raises if nothing survives.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    if traj.duration < dt:
        raise ValueError(f"trajectory lasts {traj.duration:.1f} s, shorter than dt={dt}")
    out = []
    for seg in split_gaps(traj, max_gap):
        if seg.duration < dt:
            continue
        n = int(math.floor(seg.duration / dt + 1e-9)) + 1
        grid = seg.t[0] + dt * np.arange(n)
        out.append(Trajectory(np.interp(grid, seg.t, seg.lat),
                              np.interp(grid, seg.t, seg.lon), grid, name=traj.name))
    if not out:
        raise ValueError("no gap-free segment is at least dt long")
    return out


@dataclass(frozen=True)
class Windows:
    """Sliding windows: ``inputs`` (n, in_len, 2) and ``targets`` (n, 2) in degrees."""

    inputs: np.ndarray
    targets: np.ndarray

    def __len__(self):
        return self.inputs.shape[0]

    @classmethod
    def empty(cls, in_len: int = IN_LEN):
        return cls(np.zeros((0, in_len, 2)), np.zeros((0, 2)))

    @classmethod
    def concat(cls, parts, in_len: int = IN_LEN):
        parts = [p for p in parts if len(p)]
        if not parts:
            return cls.empty(in_len)
        return cls(np.concatenate([p.inputs for p in parts]),
                   np.concatenate([p.targets for p in parts]))


def make_windows(traj: Trajectory, in_len: int = IN_LEN, horizon: int = 1) -> Windows:
    xy = traj.coords()
    count = len(traj) - in_len - horizon + 1
    if count <= 0:
        return Windows.empty(in_len)
    starts = np.arange(count)
    inputs = xy[starts[:, None] + np.arange(in_len)]
    targets = xy[starts + in_len + horizon - 1]
    return Windows(inputs, targets)


@dataclass(frozen=True)
class NormStats:
    mean_lat: float
    mean_lon: float
    std_lat: float
    std_lon: float

    def __post_init__(self):
        if not (self.std_lat > 0 and self.std_lon > 0):
            raise ValueError("normalisation std must be positive")

    @classmethod
    def fit(cls, pairs) -> "NormStats":
        a = np.asarray(pairs, dtype=float).reshape(-1, 2)
        mean = a.mean(axis=0)
        std = a.std(axis=0)
        return cls(float(mean[0]), float(mean[1]), float(std[0]), float(std[1]))

    @property
    def mean(self) -> np.ndarray:
        return np.array([self.mean_lat, self.mean_lon])

    @property
    def std(self) -> np.ndarray:
        return np.array([self.std_lat, self.std_lon])

    def digest(self) -> str:
        blob = json.dumps(asdict(self), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


def normalize(points, stats: NormStats) -> np.ndarray:
    return (np.asarray(points, dtype=float) - stats.mean) / stats.std


def denormalize(z, stats: NormStats) -> np.ndarray:
    return np.asarray(z, dtype=float) * stats.std + stats.mean


def anchor_offsets(inputs: np.ndarray, targets: np.ndarray | None = None):
    """Express each window relative to its last observed point.

    Absolute city-scale coordinates leave metre-scale motion in the 7th
    decimal of a degree; offsets from the anchor keep it well conditioned.
    """
    anchor = inputs[:, -1, :]
    rel_in = inputs - anchor[:, None, :]
    rel_tg = None if targets is None else targets - anchor
    return anchor, rel_in, rel_tg


def mean_haversine_error(pred, truth) -> float:
    """Mean great-circle error in metres between paired (lat, lon) rows."""
    pred = _as_pairs(pred)
    truth = _as_pairs(truth)
    if pred.shape != truth.shape or pred.shape[0] < 1:
        raise ValueError("prediction and truth must be non-empty and equally long")
    d = haversine_arrays(truth[:, 0], truth[:, 1], pred[:, 0], pred[:, 1])
    return float(np.mean(d))


def _as_pairs(x) -> np.ndarray:
    if len(x) and isinstance(x[0], GeoPoint):
        return np.array([[p.lat, p.lon] for p in x])
    return np.asarray(x, dtype=float).reshape(-1, 2)


def heading_change(path: np.ndarray, history: int, min_move_m: float = 2.0) -> float:
    """Largest heading change (radians) over the future part of ``path``.

    ``path`` holds (lat, lon) rows; the first ``history`` rows are observed.
    Headings use two-step chords; chords shorter than ``min_move_m`` carry no
    direction and are skipped.
    """
    lat0 = math.radians(path[history - 1, 0])
    xy = np.column_stack([path[:, 1] * math.cos(lat0), path[:, 0]]) * (math.pi / 180 * 6_371_000)
    entry = xy[history - 1] - xy[history - 3]
    if np.hypot(*entry) < min_move_m:
        return 0.0
    a0 = math.atan2(entry[1], entry[0])
    worst = 0.0
    for k in range(history + 1, len(xy)):
        chord = xy[k] - xy[k - 2]
        if np.hypot(*chord) < min_move_m:
            continue
        d = abs((math.atan2(chord[1], chord[0]) - a0 + math.pi) % (2 * math.pi) - math.pi)
        worst = max(worst, d)
    return worst


# -- dataset manifest --------------------------------------------------------

@dataclass
class FileEntry:
    name: str
    sha256: str
    split: str
    points: int
    dropped: int
    segments: int
    windows: int


@dataclass
class DatasetManifest:
    data_dir: str
    dt: float
    max_gap: float
    in_len: int
    seed: int
    files: list[FileEntry] = field(default_factory=list)
    unreadable: list[str] = field(default_factory=list)
    stats: NormStats | None = None
    version: int = MANIFEST_VERSION

    def split_files(self, split: str) -> list[Path]:
        return [Path(self.data_dir) / f.name for f in self.files if f.split == split]

    def counts(self) -> dict:
        out = {}
        for f in self.files:
            c = out.setdefault(f.split, {"files": 0, "windows": 0})
            c["files"] += 1
            c["windows"] += f.windows
        return dict(sorted(out.items()))

    def to_json(self) -> str:
        d = asdict(self)
        d["splits"] = self.counts()
        return json.dumps(d, indent=2, sort_keys=True) + "\n"

    def digest(self) -> str:
        return hashlib.sha256(self.to_json().encode()).hexdigest()[:16]

    @classmethod
    def from_json(cls, text: str) -> "DatasetManifest":
        d = json.loads(text)
        if d.get("version") != MANIFEST_VERSION:
            raise ValueError(f"unsupported manifest version {d.get('version')}")
        d.pop("splits", None)
        d["files"] = [FileEntry(**f) for f in d["files"]]
        d["stats"] = NormStats(**d["stats"]) if d.get("stats") else None
        return cls(**d)

    @classmethod
    def load(cls, path) -> "DatasetManifest":
        return cls.from_json(Path(path).read_text())


def assign_splits(names: list[str], seed: int, fractions=(0.8, 0.1, 0.1)) -> dict[str, str]:
    """Deterministic file-level split; every split gets a file when n >= 3."""
    names = sorted(names)
    n = len(names)
    n_val = max(1, round(fractions[1] * n)) if n >= 3 else 0
    n_test = max(1, round(fractions[2] * n)) if n >= 2 else 0
    perm = np.random.default_rng(seed).permutation(n)
    out = {}
    for rank, i in enumerate(perm):
        if rank < n_test:
            out[names[i]] = "test"
        elif rank < n_test + n_val:
            out[names[i]] = "val"
        else:
            out[names[i]] = "train"
    return out


def load_segments(path, dt: float, max_gap: float = MAX_GAP_S) -> list[Trajectory]:
    return resample(read_plt(path), dt, max_gap)


def split_windows(manifest: DatasetManifest, split: str, horizon: int = 1) -> Windows:
    parts = []
    for path in manifest.split_files(split):
        for seg in load_segments(path, manifest.dt, manifest.max_gap):
            parts.append(make_windows(seg, manifest.in_len, horizon))
    return Windows.concat(parts, manifest.in_len)


def prepare_dataset(data_dir, dt: float = DEFAULT_DT, seed: int = 0,
                    max_gap: float = MAX_GAP_S, in_len: int = IN_LEN) -> DatasetManifest:
    """Parse, resample, split and window every ``*.plt`` file under ``data_dir``."""
    data_dir = Path(data_dir)
    paths = sorted(data_dir.rglob("*.plt"))
    if not paths:
        raise FileNotFoundError(f"no trajectories (*.plt) under {data_dir}")
    parsed, bad = {}, []
    for p in paths:
        rel = p.relative_to(data_dir).as_posix()
        try:
            traj = read_plt(p)
            segs = resample(traj, dt, max_gap)
        except (ValueError, OSError) as exc:
            log.warning("skipping %s: %s", rel, exc)
            bad.append(rel)
            continue
        parsed[rel] = (p, traj, segs)
    if not parsed:
        raise ValueError(f"no trajectories survived parsing under {data_dir}")
    splits = assign_splits(list(parsed), seed)
    m = DatasetManifest(str(data_dir), dt, max_gap, in_len, seed, unreadable=bad)
    train_parts = []
    for rel in sorted(parsed):
        p, traj, segs = parsed[rel]
        wins = [make_windows(s, in_len) for s in segs]
        m.files.append(FileEntry(rel, hashlib.sha256(p.read_bytes()).hexdigest(), splits[rel],
                                 len(traj), traj.dropped, len(segs), sum(len(w) for w in wins)))
        if splits[rel] == "train":
            train_parts.extend(wins)
    train = Windows.concat(train_parts, in_len)
    if len(train) == 0:
        raise ValueError("training split has no windows")
    _, rel_in, _ = anchor_offsets(train.inputs)
    m.stats = NormStats.fit(rel_in)
    return m
