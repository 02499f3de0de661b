"""Command-line entry point: ``risctl <command> [options]``.

Exit codes: 0 success, 1 invalid configuration or input, 2 runtime failure,
3 verification failure.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__, config as cfgmod, control, plotting
from .config import ConfigError, RunConfig

log = logging.getLogger("risctl")

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME, EXIT_VERIFY = 0, 1, 2, 3


def _sha(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()[:16]


def _write_json(path, obj):
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True, default=str) + "\n")


def _load_config(args) -> RunConfig:
    cfg = cfgmod.load(args.config) if args.config else RunConfig()
    if getattr(args, "seed", None) is not None:
        cfg = cfgmod.override(cfg, "scenario", seed=args.seed)
        cfg = cfgmod.override(cfg, "train", seed=args.seed)
    if getattr(args, "out", None):
        cfg = cfgmod.override(cfg, "paths", out=args.out)
    if getattr(args, "methods", None):
        methods = [m.strip() for m in args.methods.split(",") if m.strip()]
        bad = [m for m in methods if m not in control.METHODS]
        if bad:
            raise ConfigError(f"unknown methods {bad}; valid: {', '.join(control.METHODS)}")
        cfg = cfgmod.override(cfg, "sweep", methods=methods)
    return cfg


def _out_dir(cfg: RunConfig) -> Path:
    out = Path(cfg.paths.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


# -- commands ----------------------------------------------------------------

def cmd_synth(args):
    from .synth import write_corpus
    paths = write_corpus(args.out_dir, args.files, args.seed if args.seed is not None else 0)
    print(f"wrote {len(paths)} synthetic PLT files to {args.out_dir}")
    return EXIT_OK


def cmd_prepare(args):
    from .trajectory import prepare_dataset
    cfg = _load_config(args)
    data_dir = cfgmod.require_dir(args.data_dir or cfg.paths.data_dir, "data directory")
    seed = args.seed if args.seed is not None else cfg.scenario.seed
    try:
        m = prepare_dataset(data_dir, cfg.scenario.dt, seed)
    except FileNotFoundError as exc:
        raise ConfigError(str(exc)) from None
    out = Path(args.manifest or cfg.paths.manifest or _out_dir(cfg) / "dataset.json")
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(m.to_json())
    counts = ", ".join(f"{k}={v['files']} files/{v['windows']} windows" for k, v in m.counts().items())
    print(f"{len(m.files)} files ({counts}); unreadable: {len(m.unreadable)}")
    for name in m.unreadable:
        print(f"  unreadable: {name}")
    print(f"manifest: {out}")
    return EXIT_OK


def cmd_train(args):
    from .evaluate import evaluate_segments
    from .predictor import Checkpoint, train
    from .trajectory import DatasetManifest, load_segments, split_windows
    cfg = _load_config(args)
    cfg = cfgmod.override(cfg, "train", epochs=args.epochs, hidden=args.hidden, lr=args.lr)
    mpath = cfgmod.require_file(args.manifest or cfg.paths.manifest, "dataset manifest")
    manifest = DatasetManifest.load(mpath)
    out = _out_dir(cfg)
    tr, va = split_windows(manifest, "train"), split_windows(manifest, "val")
    log.info("training on %d windows, validating on %d", len(tr), len(va))
    params, curve = train(tr, va, manifest.stats, cfg.train,
                          on_epoch=lambda e, a, b: log.info("epoch %d train %.5f val %.5f", e, a, b))
    ck = Checkpoint(params, manifest.stats, manifest.dt, cfg.train, manifest.digest(), curve)
    ck_path = Path(args.checkpoint or cfg.paths.checkpoint or out / "checkpoint.json")
    ck.save(ck_path)
    with open(out / "loss_curve.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\r\n")
        w.writerow(["epoch", "train_mse", "val_mse"])
        w.writerows(curve)
    plotting.plot_loss_curve(curve, out / "loss_curve.png")
    segs = [s for p in manifest.split_files("val") for s in load_segments(p, manifest.dt, manifest.max_gap)]
    steps = cfg.scenario.horizon_steps
    try:
        report, _ = evaluate_segments(ck.step_fn(), segs, steps, manifest.dt, "val", manifest.in_len)
        val_err = f"{report.mean_error_m:.2f} m"
    except ValueError:
        val_err = "n/a (no segment covers the horizon)"
    best = min(curve, key=lambda r: r[2])
    print(f"final train mse={curve[-1][1]:.6f} val mse={curve[-1][2]:.6f} (best val {best[2]:.6f} at epoch {best[0]})")
    print(f"validation mean haversine error at {steps * manifest.dt:g}s: {val_err}")
    print(f"checkpoint: {ck_path}")
    return EXIT_OK


def cmd_eval(args):
    from .evaluate import evaluate_segments
    from .predictor import Checkpoint
    from .trajectory import DatasetManifest, load_segments
    cfg = _load_config(args)
    ck = Checkpoint.load(cfgmod.require_file(args.checkpoint or cfg.paths.checkpoint, "checkpoint"))
    manifest = DatasetManifest.load(cfgmod.require_file(args.manifest or cfg.paths.manifest, "dataset manifest"))
    if manifest.stats.digest() != ck.stats.digest():
        raise ConfigError("manifest normalisation stats do not match the checkpoint")
    if manifest.dt != ck.dt:
        raise ConfigError(f"manifest dt={manifest.dt} but checkpoint dt={ck.dt}")
    out = _out_dir(cfg)
    segs = [s for p in manifest.split_files(args.split) for s in load_segments(p, manifest.dt, manifest.max_gap)]
    if not segs:
        raise ConfigError(f"split {args.split!r} has no trajectories")
    steps = cfg.scenario.horizon_steps
    report, parts = evaluate_segments(ck.step_fn(), segs, steps, manifest.dt, args.split, manifest.in_len)
    for line in report.lines():
        print(line)
    _write_json(out / f"eval_{args.split}.json", report.__dict__)
    if args.points:
        with open(out / f"eval_{args.split}_points.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\r\n")
            w.writerow(["trajectory", "window", "true_lat", "true_lon", "pred_lat", "pred_lon",
                        "lstm_err_m", "linear_err_m", "curved"])
            for h in parts:
                for i in range(len(h.model)):
                    w.writerow([h.name, i, f"{h.truth[i, 0]:.7f}", f"{h.truth[i, 1]:.7f}",
                                f"{h.predicted[i, 0]:.7f}", f"{h.predicted[i, 1]:.7f}",
                                f"{h.model[i]:.3f}", f"{h.baseline[i]:.3f}", int(h.curved[i])])
    longest = max(parts, key=lambda h: len(h.model))
    plotting.plot_trajectory(longest.truth, longest.predicted, out / f"eval_{args.split}_trajectory.png",
                             longest.linear)
    return EXIT_OK


def _step_fn(cfg: RunConfig, checkpoint):
    from .predictor import Checkpoint, linear_next
    if cfg.sweep.predictor == "linear":
        return linear_next, None
    if cfg.sweep.predictor != "lstm":
        raise ConfigError(f"predictor must be 'lstm' or 'linear', got {cfg.sweep.predictor!r}")
    path = cfgmod.require_file(checkpoint or cfg.paths.checkpoint, "checkpoint")
    ck = Checkpoint.load(path)
    if ck.dt != cfg.scenario.dt:
        raise ConfigError(f"checkpoint dt={ck.dt} but scenario dt={cfg.scenario.dt}")
    return ck.step_fn(), _sha(path)


def _track_pool(cfg: RunConfig, manifest_path, data_dir):
    """Candidate PLT files as ``(preferred, fallback)`` plus the manifest hash.

    With a dataset manifest the held-out (val and test) files are preferred so
    the predictor is not scored on its own training tracks.
    """
    from .trajectory import DatasetManifest
    if manifest_path or cfg.paths.manifest:
        mpath = cfgmod.require_file(manifest_path or cfg.paths.manifest, "dataset manifest")
        m = DatasetManifest.load(mpath)
        held_out = m.split_files("val") + m.split_files("test")
        return (held_out, held_out + m.split_files("train")), _sha(mpath)
    d = cfgmod.require_dir(data_dir or cfg.paths.data_dir, "data directory")
    paths = sorted(d.rglob("*.plt"))
    return (paths, paths), None


def _validate_sim(cfg: RunConfig, args):
    """Resolve every input up front so configuration errors surface before compute."""
    cfg = cfgmod.override(cfg, "sweep", predictor=args.predictor)
    step_fn, ck_hash = _step_fn(cfg, args.checkpoint)
    pool, m_hash = _track_pool(cfg, args.manifest, args.data_dir)
    if not pool[1]:
        raise ConfigError("no trajectory files available for the scenario")
    return cfg, step_fn, ck_hash, pool, m_hash


def _run_manifest(cfg, kind, seeds, ck_hash, m_hash, extra):
    return {"kind": kind, "version": __version__, "config": cfg.to_dict(), "seeds": list(seeds),
            "checkpoint_sha": ck_hash, "dataset_manifest_sha": m_hash, **extra}


def _scenario(cfg: RunConfig, seed: int, pool):
    import dataclasses
    from .sim import build_scenario, select_tracks
    sc_cfg = dataclasses.replace(cfg.scenario, seed=seed)
    preferred, fallback = pool
    try:
        tracks = select_tracks(preferred, sc_cfg)
    except ValueError as exc:
        if fallback == preferred:
            raise ConfigError(str(exc)) from None
        log.warning("held-out tracks insufficient (%s); drawing from all splits", exc)
        try:
            tracks = select_tracks(fallback, sc_cfg)
        except ValueError as exc2:
            raise ConfigError(str(exc2)) from None
    return build_scenario(sc_cfg, tracks)


def cmd_simulate(args):
    cfg = _load_config(args)
    args.kind = "power"
    cfg = cfgmod.override(cfg, "sweep", powers=[cfg.scenario.p_tx], seeds=[cfg.scenario.seed])
    return _sweep(cfg, args, "simulate")


def cmd_sweep(args):
    cfg = _load_config(args)
    if args.seeds:
        cfg = cfgmod.override(cfg, "sweep", seeds=[int(s) for s in args.seeds.split(",")])
    return _sweep(cfg, args, f"sweep_{args.kind}")


def _sweep(cfg: RunConfig, args, label):
    from .sim import sweep_elements, sweep_power
    cfg, step_fn, ck_hash, pool, m_hash = _validate_sim(cfg, args)
    out = _out_dir(cfg)
    threads = args.threads or os.cpu_count() or 1
    kind = args.kind
    values = cfg.sweep.powers if kind == "power" else cfg.sweep.elements
    per_seed, files, scales, skipped = [], [], {}, {}
    for seed in cfg.sweep.seeds:
        sc = _scenario(cfg, seed, pool)
        fn = sweep_power if kind == "power" else sweep_elements
        res = fn(sc, step_fn, values, cfg.sweep.methods, threads)
        path = out / f"{label}_seed{seed}.csv"
        path.write_text(res.to_csv(), newline="")
        files.append(path.name)
        per_seed.append(res)
        scales[seed] = [round(float(s), 6) for s in sc.scale]
        skipped[seed] = res.skipped
        log.info("seed %d: %d frames evaluated, %d skipped", seed, res.n_frames(), len(res.skipped))
    summary = _summarise(per_seed)
    with open(out / f"{label}_summary.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\r\n")
        w.writerow(["method", "param", "mean_gamma_db", "seeds", "frames"])
        for m, rows in summary.items():
            for p, mean, frames in rows:
                w.writerow([m, repr(float(p)), f"{mean:.6f}", len(per_seed), frames])
    if per_seed:
        agg = _Aggregate(per_seed[0].kind, per_seed[0].params, summary)
        plotting.plot_sweep(agg, out / f"{label}.png")
    _write_json(out / f"{label}_manifest.json",
                _run_manifest(cfg, label, cfg.sweep.seeds, ck_hash, m_hash,
                              {"files": files, "user_scale": scales, "skipped_frames": skipped}))
    for m, rows in summary.items():
        print(f"{m:<10} " + "  ".join(f"{p:g}:{mean:7.2f}dB" for p, mean, _ in rows))
    return EXIT_OK


class _Aggregate:
    """Adapter so multi-seed means can be fed to :func:`plotting.plot_sweep`."""

    def __init__(self, kind, params, summary):
        self.kind, self.params, self._summary = kind, params, summary

    def mean_db(self):
        return {m: [r[1] for r in rows] for m, rows in self._summary.items()}


def _summarise(results):
    out = {}
    for m in results[0].methods:
        rows = []
        for j, p in enumerate(results[0].params):
            vals = [r.gamma_db(m) for res in results for r in res.frames if r.param == p]
            rows.append((p, float(np.mean(vals)), len(vals)))
        out[m] = rows
    return out


def cmd_verify(args):
    from .verify import run_all
    checks = run_all()
    for c in checks:
        print(c.line())
    failed = [c for c in checks if not c.passed]
    print(f"{len(checks) - len(failed)}/{len(checks)} checks passed")
    return EXIT_VERIFY if failed else EXIT_OK


# -- parser ------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML run configuration")
    common.add_argument("--seed", type=int, help="master seed (overrides config)")
    common.add_argument("--threads", type=int, help="worker processes (default: all cores)")
    common.add_argument("--methods", help="comma-separated subset of " + ",".join(control.METHODS))
    common.add_argument("--out", help="output directory")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="risctl", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("synth", parents=[common], help="write synthetic Geolife-format tracks")
    s.add_argument("out_dir")
    s.add_argument("--files", type=int, default=71)
    s.set_defaults(func=cmd_synth)

    s = sub.add_parser("prepare", parents=[common], help="parse, split and window PLT files")
    s.add_argument("data_dir", nargs="?")
    s.add_argument("--manifest", help="output manifest path")
    s.set_defaults(func=cmd_prepare)

    s = sub.add_parser("train", parents=[common], help="train the LSTM predictor")
    s.add_argument("--manifest")
    s.add_argument("--checkpoint", help="output checkpoint path")
    s.add_argument("--epochs", type=int)
    s.add_argument("--hidden", type=int)
    s.add_argument("--lr", type=float)
    s.set_defaults(func=cmd_train)

    s = sub.add_parser("eval", parents=[common], help="horizon error of a checkpoint on a split")
    s.add_argument("--checkpoint")
    s.add_argument("--manifest")
    s.add_argument("--split", default="test", choices=["train", "val", "test"])
    s.add_argument("--points", action="store_true", help="also write per-window errors")
    s.set_defaults(func=cmd_eval)

    for name, func, helptext in (("simulate", cmd_simulate, "one scenario at the configured power"),
                                 ("sweep", cmd_sweep, "SINR sweep over power or RIS elements")):
        s = sub.add_parser(name, parents=[common], help=helptext)
        s.add_argument("--checkpoint")
        s.add_argument("--manifest")
        s.add_argument("--data-dir")
        s.add_argument("--predictor", choices=["lstm", "linear"],
                       help="position predictor for TPC (linear needs no checkpoint)")
        if name == "sweep":
            s.add_argument("--kind", choices=["power", "elements"], default="power")
            s.add_argument("--seeds", help="comma-separated seeds (overrides config)")
        s.set_defaults(func=func)

    s = sub.add_parser("verify", parents=[common], help="run the small-instance oracle checks")
    s.set_defaults(func=cmd_verify)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001
        log.debug("runtime failure", exc_info=True)
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
