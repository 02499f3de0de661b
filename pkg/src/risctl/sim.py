"""Scenario construction, the per-frame control loop and parameter sweeps."""

from __future__ import annotations

import csv
import io
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from . import control
from .channel import (LINK_DIRECT, LINK_PHASE, LINK_RIS_BS, LINK_USER_RIS, PathLossParams, link_rng,
                      pathloss_direct, pathloss_reflected, sample_cn01, unit_pathloss)
from .geom import GeoPoint, haversine_arrays, separation_angle, to_local_arrays
from .link import LinkBudget
from .ris import AngleAttenuation, angle_attenuation, build_codebook

log = logging.getLogger(__name__)

CSV_HEADER = ("method", "param", "frame", "gamma_db", "pred_err_m", "v_bits")
# "attenuation": independent interferer fading scaled by the angle law.
# "coherent": interferer fading shares the desired user's per-element phases
# with weight given by the angle law, so aligned phases also focus interferers
# arriving from nearby directions.
REFLECTION_MODELS = ("coherent", "attenuation")
# keeps path loss finite if a predicted position lands on top of a node
MIN_DISTANCE_M = 1.0


@dataclass
class ScenarioConfig:
    n_ris: int = 10
    ris_radius: float = 10.0
    n_elements: int = 600
    p_tx: float = 1.0
    noise: float = 1e-12
    n_interferers: int = 10
    bits: int = 2
    dt: float = 5.0
    horizon: float = 50.0
    lambda0_deg: float = 5.0
    seed: int = 0
    frames: int = 50
    frame_stride: int = 1
    in_len: int = 8
    region: tuple = (50.0, 500.0)
    interferer_spread_deg: float = 360.0
    freq: float = 2.4e9
    alpha_direct: float = 3.0
    alpha_reflected: float = 2.0
    reflection_model: str = "attenuation"

    def __post_init__(self):
        self.region = tuple(self.region)
        if self.n_ris < 1 or self.n_elements < 1 or self.n_interferers < 0:
            raise ValueError("need n_ris >= 1, n_elements >= 1, n_interferers >= 0")
        if self.p_tx <= 0 or self.noise <= 0:
            raise ValueError("powers must be positive")
        steps = self.horizon / self.dt
        if self.dt <= 0 or steps < 1 or abs(steps - round(steps)) > 1e-9:
            raise ValueError("horizon must be a positive multiple of dt")
        if not 0 < self.region[0] < self.region[1]:
            raise ValueError("region must be (inner, outer) radii with 0 < inner < outer")
        if self.reflection_model not in REFLECTION_MODELS:
            raise ValueError(f"reflection_model must be one of {REFLECTION_MODELS}")
        if self.region[0] <= self.ris_radius:
            raise ValueError("users must stay outside the RIS ring")

    @property
    def horizon_steps(self) -> int:
        return int(round(self.horizon / self.dt))

    @property
    def n_users(self) -> int:
        return 1 + self.n_interferers


def ris_positions(n_ris: int, radius: float) -> np.ndarray:
    ang = 2 * math.pi * np.arange(n_ris) / n_ris
    return radius * np.column_stack([np.cos(ang), np.sin(ang)])


@dataclass
class Scenario:
    """Geometry and user tracks, all in the BS-centred local plane.

    ``tracks_geo[u]`` holds (T, 2) (lat, lon) on the ``dt`` grid and
    ``to_plane(u, latlon)`` maps any geo point of user ``u`` into metres.
    ``scale[u]`` shrinks track ``u`` so it fits the user annulus.
    """

    config: ScenarioConfig
    ris_xy: np.ndarray
    tracks_geo: list
    names: list
    origin: GeoPoint
    centroids: np.ndarray
    anchors: np.ndarray
    scale: np.ndarray
    pl_direct: PathLossParams = field(default_factory=PathLossParams)
    pl_reflected: PathLossParams = field(default_factory=PathLossParams)

    def to_plane(self, user: int, latlon) -> np.ndarray:
        latlon = np.asarray(latlon, dtype=float).reshape(-1, 2)
        x, y = to_local_arrays(self.origin, latlon[:, 0], latlon[:, 1])
        xy = np.column_stack([x, y])
        return self.scale[user] * (xy - self.centroids[user]) + self.anchors[user]

    def frame_index(self, k: int) -> int:
        c = self.config
        return c.in_len - 1 + k * c.frame_stride

    def frame_count(self) -> int:
        return self.config.frames


def build_scenario(config: ScenarioConfig, tracks) -> Scenario:
    """Place ``1 + n_interferers`` resampled tracks around the BS.

    ``tracks`` are :class:`Trajectory` objects on the ``dt`` grid; the first is
    the desired user. Each track is centred on its centroid over the simulated
    window, shrunk if needed to fit a quarter of the annulus width, and translated to an anchor inside the
    user annulus.
    """
    c = config
    if len(tracks) < c.n_users:
        raise ValueError(f"need {c.n_users} trajectories, got {len(tracks)}")
    tracks = tracks[:c.n_users]
    span = c.in_len - 1 + (c.frames - 1) * c.frame_stride + c.horizon_steps + 1
    short = [t.name or str(i) for i, t in enumerate(tracks) if len(t) < c.in_len + c.horizon_steps]
    if short:
        raise ValueError(f"trajectories too short for a single frame: {short}")
    geo = [t.coords()[:span] for t in tracks]
    d0 = geo[0]
    origin = GeoPoint(float(d0[:, 0].mean()), float(d0[:, 1].mean()))
    local = []
    for g in geo:
        try:
            x, y = to_local_arrays(origin, g[:, 0], g[:, 1])
        except ValueError as exc:
            raise ValueError(f"user track outside projectable range: {exc}") from None
        local.append(np.column_stack([x, y]))
    centroids = np.array([p.mean(axis=0) for p in local])
    extent = np.array([float(np.max(np.hypot(*(p - m).T))) for p, m in zip(local, centroids)])
    r_in, r_out = c.region
    e_max = (r_out - r_in) / 4
    scale = np.minimum(1.0, e_max / np.maximum(extent, 1e-9))
    margin = float(np.max(scale * extent))
    rng = np.random.default_rng(np.random.SeedSequence([c.seed, 0x5CE7]))
    radii = rng.uniform(r_in + margin, r_out - margin, c.n_users)
    base = rng.uniform(0, 2 * math.pi)
    half = math.radians(c.interferer_spread_deg) / 2
    angles = np.concatenate([[base], base + rng.uniform(-half, half, c.n_interferers)])
    anchors = np.column_stack([radii * np.cos(angles), radii * np.sin(angles)])
    pl_d = PathLossParams(f=c.freq, alpha=c.alpha_direct)
    pl_r = PathLossParams(f=c.freq, alpha=c.alpha_reflected)
    return Scenario(c, ris_positions(c.n_ris, c.ris_radius), geo, [t.name for t in tracks],
                    origin, centroids, anchors, scale, pl_d, pl_r)


@dataclass
class FrameDraws:
    direct: np.ndarray     # (U,) CN(0,1) g_u
    to_bs: np.ndarray      # (R, N) h_i
    from_user: np.ndarray  # (U, R, N) h_ui
    common_phase: np.ndarray  # (U, R) phase offset of the coherent interferer part


def draw_fading(seed: int, frame: int, n_users: int, n_ris: int, n_elements: int) -> FrameDraws:
    g = np.array([sample_cn01(link_rng(seed, frame, LINK_DIRECT, u), 1)[0] for u in range(n_users)])
    h = np.stack([sample_cn01(link_rng(seed, frame, LINK_RIS_BS, i), n_elements) for i in range(n_ris)])
    hu = np.stack([np.stack([sample_cn01(link_rng(seed, frame, LINK_USER_RIS, u, i), n_elements)
                             for i in range(n_ris)]) for u in range(n_users)])
    psi = np.stack([link_rng(seed, frame, LINK_PHASE, u).uniform(0, 2 * math.pi, n_ris)
                    for u in range(n_users)])
    return FrameDraws(g, h, hu, psi)


def make_budget(config: ScenarioConfig, ris_xy: np.ndarray, users_xy: np.ndarray, draws: FrameDraws,
                pl_direct: PathLossParams, pl_reflected: PathLossParams,
                p_tx: float | None = None, n_elements: int | None = None) -> LinkBudget:
    """Link budget for users at ``users_xy`` (row 0 desired) and one set of draws."""
    N = config.n_elements if n_elements is None else n_elements
    d_u = np.maximum(np.hypot(*users_xy.T), MIN_DISTANCE_M)
    d_i = np.hypot(*ris_xy.T)
    d_ui = np.maximum(np.hypot(*(users_xy[:, None, :] - ris_xy[None, :, :]).transpose(2, 0, 1)),
                      MIN_DISTANCE_M)
    eta_u = pathloss_direct(unit_pathloss(pl_direct), d_u, pl_direct.alpha)
    eta_ui = pathloss_reflected(unit_pathloss(pl_reflected), d_i[None, :], d_ui, pl_reflected.alpha)
    model = AngleAttenuation(math.radians(config.lambda0_deg))
    atten = np.ones_like(d_ui)
    for i, r in enumerate(ris_xy):
        for u in range(1, users_xy.shape[0]):
            try:
                lam = separation_angle(r, users_xy[0], users_xy[u])
            except ValueError:
                lam = 0.0
            atten[u, i] = angle_attenuation(model, lam)
    from_user = draws.from_user[:, :, :N]
    if config.reflection_model == "coherent":
        rho = atten[:, :, None]
        shared = np.exp(1j * draws.common_phase)[:, :, None] * from_user[0][None]
        from_user = np.sqrt(rho) * shared + np.sqrt(1 - rho) * from_user
        from_user[0] = draws.from_user[0, :, :N]
        atten = np.ones_like(atten)
    return LinkBudget(config.p_tx if p_tx is None else p_tx, config.noise,
                      np.sqrt(np.atleast_1d(eta_u)) * draws.direct,
                      draws.to_bs[:, :N], from_user, np.sqrt(eta_ui), atten)


@dataclass
class FrameResult:
    frame: int
    true_xy: np.ndarray
    pred_xy: np.ndarray
    stale_xy: np.ndarray
    decisions: dict
    pred_err_m: float
    stale_err_m: float
    param: float | None = None

    def gamma_db(self, method: str) -> float:
        return 10 * math.log10(max(self.decisions[method].gamma, 1e-300))


@dataclass
class FramePlan:
    """Per-frame inputs that do not depend on the swept parameter."""

    frame: int
    true_xy: np.ndarray
    pred_xy: np.ndarray
    stale_xy: np.ndarray
    pred_err_m: float
    stale_err_m: float


def plan_frames(scenario: Scenario, step_fn, frames=None) -> tuple[list, list]:
    """Predict every user's position at ``t + horizon`` for each frame.

    Returns ``(plans, skipped)`` where ``skipped`` lists ``(frame, reason)``.
    """
    from .predictor import rollout
    c = scenario.config
    H = c.horizon_steps
    frames = range(c.frames) if frames is None else frames
    plans, skipped = [], []
    for k in frames:
        t = scenario.frame_index(k)
        short = [u for u, g in enumerate(scenario.tracks_geo) if t + H >= len(g)]
        if short:
            skipped.append((k, f"tracks {short} end before t + horizon"))
            continue
        hist = np.stack([g[t - c.in_len + 1:t + 1] for g in scenario.tracks_geo])
        pred_geo = rollout(step_fn, hist, H)[:, -1]
        true_geo = np.stack([g[t + H] for g in scenario.tracks_geo])
        stale_geo = hist[:, -1]
        U = len(scenario.tracks_geo)
        place = lambda pts: np.stack([scenario.to_plane(u, pts[u])[0] for u in range(U)])
        err = haversine_arrays(true_geo[0, 0], true_geo[0, 1], pred_geo[0, 0], pred_geo[0, 1])
        stale = haversine_arrays(true_geo[0, 0], true_geo[0, 1], stale_geo[0, 0], stale_geo[0, 1])
        plans.append(FramePlan(k, place(true_geo), place(pred_geo), place(stale_geo), float(err), float(stale)))
    for k, why in skipped:
        log.warning("frame %d skipped: %s", k, why)
    return plans, skipped


def run_frame(scenario: Scenario, plan: FramePlan, methods=control.METHODS, p_tx=None,
              n_elements=None, draws: FrameDraws | None = None) -> FrameResult:
    """Decide (V, Phi) with every method and score all of them on the true geometry.

    All methods share one set of fading draws; TPC decides on predicted
    positions, the reactive baseline on the positions at ``t``, oracle and
    always-on on the true positions at ``t + horizon``.
    """
    c = scenario.config
    N = c.n_elements if n_elements is None else n_elements
    if draws is None:
        draws = draw_fading(c.seed, plan.frame, c.n_users, c.n_ris, N)
    codebook = build_codebook(c.bits)
    mk = lambda xy: make_budget(c, scenario.ris_xy, xy, draws, scenario.pl_direct, scenario.pl_reflected,
                                p_tx, N)
    true_b = mk(plan.true_xy)
    configs = control.desired_phases(true_b, codebook)
    out = {}
    for m in methods:
        if m == "tpc":
            d = control.evaluate_on(control.tpc_onoff(mk(plan.pred_xy), codebook, configs), true_b)
        elif m == "reactive":
            d = control.reactive_onoff(mk(plan.stale_xy), codebook, true_b, configs)
        elif m in control.STRATEGIES:
            d = control.STRATEGIES[m](true_b, codebook, configs)
        else:
            raise ValueError(f"unknown method {m!r}; valid: {', '.join(control.METHODS)}")
        out[m] = d
    return FrameResult(plan.frame, plan.true_xy, plan.pred_xy, plan.stale_xy, out,
                       plan.pred_err_m, plan.stale_err_m, p_tx if n_elements is None else n_elements)


def _pred_err(res: FrameResult, method: str) -> float:
    return {"tpc": res.pred_err_m, "reactive": res.stale_err_m}.get(method, 0.0)


@dataclass
class SweepResult:
    kind: str
    params: list
    methods: list
    frames: list            # FrameResult per (param, frame), ordered by param then frame
    skipped: list

    def mean_db(self) -> dict:
        """``{method: [mean dB per param]}`` over evaluated frames."""
        out = {}
        for m in self.methods:
            out[m] = [float(np.mean([r.gamma_db(m) for r in self.frames if r.param == p]))
                      for p in self.params]
        return out

    def n_frames(self) -> int:
        return len({r.frame for r in self.frames})

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\r\n")
        w.writerow(CSV_HEADER)
        for r in self.frames:
            for m in self.methods:
                w.writerow([m, repr(float(r.param)), r.frame, f"{r.gamma_db(m):.12g}",
                            f"{_pred_err(r, m):.6f}", r.decisions[m].v_bits])
        return buf.getvalue()


def _run_job(args):
    scenario, plan, methods, values, kind = args
    c = scenario.config
    if kind == "power":
        draws = draw_fading(c.seed, plan.frame, c.n_users, c.n_ris, c.n_elements)
        return [run_frame(scenario, plan, methods, p_tx=p, draws=draws) for p in values]
    draws = draw_fading(c.seed, plan.frame, c.n_users, c.n_ris, max(values))
    return [run_frame(scenario, plan, methods, n_elements=n, draws=draws) for n in values]


def _sweep(kind, scenario, step_fn, values, methods, threads):
    if not values:
        raise ValueError("sweep needs at least one value")
    methods = list(methods)
    bad = [m for m in methods if m not in control.METHODS]
    if bad:
        raise ValueError(f"unknown methods {bad}; valid: {', '.join(control.METHODS)}")
    plans, skipped = plan_frames(scenario, step_fn)
    jobs = [(scenario, p, methods, list(values), kind) for p in plans]
    if threads and threads > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(threads) as pool:
            per_frame = list(pool.map(_run_job, jobs))
    else:
        per_frame = [_run_job(j) for j in jobs]
    # ordered merge: by parameter value, then frame index
    results = [per_frame[f][j] for j in range(len(values)) for f in range(len(plans))]
    return SweepResult(kind, list(values), methods, results, skipped)


def sweep_power(scenario, step_fn, powers=(0.1, 0.25, 0.5, 1.0, 2.0), methods=control.METHODS,
                threads=1) -> SweepResult:
    return _sweep("power", scenario, step_fn, [float(p) for p in powers], methods, threads)


def sweep_elements(scenario, step_fn, counts=(100, 200, 400, 600), methods=control.METHODS,
                   threads=1) -> SweepResult:
    counts = [int(n) for n in counts]
    if min(counts) < 1:
        raise ValueError("element counts must be >= 1")
    return _sweep("elements", scenario, step_fn, counts, methods, threads)


def required_points(config: ScenarioConfig) -> int:
    return config.in_len + (config.frames - 1) * config.frame_stride + config.horizon_steps


def select_tracks(paths, config: ScenarioConfig, max_gap: float = 60.0):
    """Pick ``1 + n_interferers`` tracks long enough for every frame.

    Each file contributes its longest gap-free segment; files are drawn in a
    seed-dependent order from the sorted candidate list.
    """
    from .trajectory import load_segments
    need = required_points(config)
    pool = []
    for p in sorted(paths, key=str):
        try:
            segs = load_segments(p, config.dt, max_gap)
        except ValueError as exc:
            log.warning("skipping %s: %s", p, exc)
            continue
        best = max(segs, key=len)
        if len(best) >= need:
            pool.append(best)
    if len(pool) < config.n_users:
        raise ValueError(f"only {len(pool)} trajectories cover {need} points; need {config.n_users}")
    order = np.random.default_rng(np.random.SeedSequence([config.seed, 0x7A4C])).permutation(len(pool))
    return [pool[i] for i in order[:config.n_users]]
