"""Command-line front end: calibration, sweeps, PAPR, golden vectors.

Every output embeds the config hash and tool version; sweep subcommands
print one summary line per point.  `--workers N` fans a sweep out across
processes, one SNR point per task; results are identical to the serial
run because chunk seeds depend only on (master seed, chunk index).
"""

from __future__ import annotations

import argparse
import concurrent.futures
import dataclasses
import sys

import numpy as np

from . import __version__, channel, detection, frames, ldpc, metrics
from .config import ConfigError, RunConfig, config_hash, load_config


def _load_eta(args, cfg_n, preamble) -> float:
    if args.eta_file:
        return detection.load_threshold(args.eta_file).eta
    calib = detection.calibrate_threshold(cfg_n, preamble, args.far,
                                          args.calib_trials, args.calib_seed)
    return calib.eta


def _add_common(p):
    p.add_argument("--config", help="flat key=value run configuration")
    p.add_argument("--seed", type=int, help="override the config seed")
    p.add_argument("--out", help="override the config output path")
    p.add_argument("--eta-file", help="reuse a stored calibration sidecar")
    p.add_argument("--far", type=float, default=1e-3,
                   help="false-alarm target when calibrating inline")
    p.add_argument("--calib-trials", type=int, default=100_000)
    p.add_argument("--calib-seed", type=int, default=0)
    p.add_argument("--jsonl", action="store_true",
                   help="write JSON-lines next to the CSV")
    p.add_argument("--workers", type=int, default=1,
                   help="processes to fan SNR points across")


def _resolve_config(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    updates = {}
    if args.seed is not None:
        updates["seed"] = args.seed
    if args.out is not None:
        updates["output_path"] = args.out
    return dataclasses.replace(cfg, **updates) if updates else cfg


def _single_point(cfg: RunConfig, snr_db: float) -> RunConfig:
    return dataclasses.replace(cfg, snr_list=(snr_db,))


def _der_point(task):
    cfg, eta, snr_db, pool = task
    recs = metrics.der_sweep(_single_point(cfg, snr_db), eta,
                             system="baseline" if pool is None
                             else "phyae-import", message_pool=pool)
    return recs[0]


def _bler_point(task):
    cfg, eta, snr_db, stop = task
    recs, rerr, rbits = metrics.error_rate_sweep(
        _single_point(cfg, snr_db), eta, stop_block_errors=stop)
    return recs[0], rerr[0], rbits[0]


def _fan_out(fn, tasks, workers: int):
    if workers <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with concurrent.futures.ProcessPoolExecutor(
            max_workers=min(workers, len(tasks))) as ex:
        return list(ex.map(fn, tasks))


def _emit(records, cfg, out_default, jsonl, comment=""):
    path = cfg.output_path or out_default
    metrics.write_csv(path, records, __version__, extra_comment=comment)
    if jsonl:
        metrics.write_jsonl(path + ".jsonl", records, __version__)
    return path


def _restamp(rec, chash):
    # points computed under a single-point config carry the parent hash
    return dataclasses.replace(rec, config_hash=chash)


def _cmd_calibrate(args) -> int:
    n = args.n
    pre = frames.preamble_for_length(n)
    calib = detection.calibrate_threshold(n, pre, args.far, args.trials,
                                          args.seed)
    detection.save_threshold(args.out, calib)
    print(f"calibrate n={n} far<={args.far:g} trials={args.trials} "
          f"eta={calib.eta:.6f} -> {args.out}")
    return 0


def _cmd_sweep_der(args) -> int:
    cfg = _resolve_config(args)
    chash = config_hash(cfg)
    pool = None
    if getattr(args, "import_path", None):
        _, pool = metrics.load_message_jsonl(args.import_path)
        if pool.shape[1] != cfg.n:
            print(f"error: imported messages have length {pool.shape[1]}, "
                  f"config says n={cfg.n}", file=sys.stderr)
            return 2
    eta = _load_eta(args, cfg.n, cfg.preamble)
    tasks = [(cfg, eta, s, pool) for s in cfg.snr_list]
    recs = [_restamp(r, chash) for r in _fan_out(_der_point, tasks,
                                                 args.workers)]
    for r in recs:
        print(f"der snr={r.snr_db:g} der={r.der:.5f} far={r.far:.5f} "
              f"trials={r.trials}")
    path = _emit(recs, cfg, "der.csv", args.jsonl, comment=f"eta={eta!r}")
    print(f"wrote {path}")
    return 0


def _cmd_sweep_bler(args) -> int:
    cfg = _resolve_config(args)
    chash = config_hash(cfg)
    eta = _load_eta(args, cfg.n, cfg.preamble)
    stop = None if args.no_stop else metrics.STOP_BLOCK_ERRORS
    tasks = [(cfg, eta, s, stop) for s in cfg.snr_list]
    out = _fan_out(_bler_point, tasks, args.workers)
    recs = [_restamp(r, chash) for r, _, _ in out]
    for r in recs:
        print(f"bler snr={r.snr_db:g} bler={r.bler:.5f} ber={r.ber:.5f} "
              f"blocks={r.blocks}")
    path = _emit(recs, cfg, "bler.csv", args.jsonl,
                 comment=f"csi={cfg.receiver.csi_mode} eta={eta!r}")
    print(f"wrote {path}")
    return 0


def _cmd_sweep_length(args) -> int:
    lengths = tuple(int(v) for v in args.lengths.split(","))
    rows = metrics.length_sweep(lengths=lengths, snr_db=args.snr,
                                trials=args.trials, seed=args.seed,
                                far_target=args.far,
                                far_trials=args.calib_trials)
    lines = [f"# tool_version={__version__}",
             f"# snr_db={args.snr:g} trials={args.trials} seed={args.seed}",
             "n,bler,blocks,config_hash"]
    for n, rec in rows:
        print(f"length n={n} bler={rec.bler:.5f} blocks={rec.blocks}")
        lines.append(f"{n},{rec.bler:.6g},{rec.blocks},{rec.config_hash}")
    with open(args.out, "w", encoding="utf-8") as f:
        f.write("\n".join(lines) + "\n")
    print(f"wrote {args.out}")
    return 0


def _cmd_papr(args) -> int:
    chash = ""
    if getattr(args, "import_path", None):
        _, pool = metrics.load_message_jsonl(args.import_path)
        frames_in = pool
        src = args.import_path
    else:
        cfg = load_config(args.config) if args.config else RunConfig()
        if args.seed is not None:
            cfg = dataclasses.replace(cfg, seed=args.seed)
        chash = config_hash(cfg)
        code = ldpc.build_code(cfg.k, 2 * (cfg.n - cfg.preamble.length))
        rng = np.random.default_rng(cfg.seed)
        U = rng.integers(0, 2, (args.count, cfg.k))
        frames_in = np.stack([frames.build_frame(u, code, cfg.preamble)
                              for u in U])
        src = f"baseline n={cfg.n} count={args.count}"
    curve = metrics.papr_ccdf(frames_in, oversample=args.oversample)
    metrics.write_papr_csv(args.out, curve, __version__, chash)
    at = np.searchsorted(-curve.ccdf, -1e-2)
    level = curve.papr_db[at] if at < curve.papr_db.size else float("nan")
    print(f"papr source={src} frames={len(frames_in)} "
          f"ccdf1e-2@{level:.2f}dB -> {args.out}")
    return 0


def _cmd_golden(args) -> int:
    sigma2 = channel.snr_to_noise_var(args.snr)
    channel.export_golden(args.out, args.count, args.n, sigma2, args.seed)
    print(f"golden count={args.count} n={args.n} snr={args.snr:g} "
          f"seed={args.seed} -> {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="shortpacket",
        description="short-packet link simulator and receiver harness")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("calibrate", help="calibrate the detection threshold")
    p.add_argument("--n", type=int, default=64)
    p.add_argument("--far", type=float, default=1e-3)
    p.add_argument("--trials", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="eta.json")
    p.set_defaults(fn=_cmd_calibrate)

    p = sub.add_parser("sweep-der", help="detection error rate vs SNR")
    _add_common(p)
    p.add_argument("--import", dest="import_path",
                   help="JSON-lines message file to propagate instead of "
                        "coded frames")
    p.set_defaults(fn=_cmd_sweep_der)

    p = sub.add_parser("sweep-bler", help="BER/BLER vs SNR after detection")
    _add_common(p)
    p.add_argument("--no-stop", action="store_true",
                   help="disable the 200-block-error early stop")
    p.set_defaults(fn=_cmd_sweep_bler)

    p = sub.add_parser("sweep-length", help="BLER vs frame length at one SNR")
    p.add_argument("--lengths", default="40,48,56,64,96")
    p.add_argument("--snr", type=float, default=18.0)
    p.add_argument("--trials", type=int, default=4000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--far", type=float, default=1e-3)
    p.add_argument("--calib-trials", type=int, default=20_000)
    p.add_argument("--out", default="length.csv")
    p.set_defaults(fn=_cmd_sweep_length)

    p = sub.add_parser("papr", help="PAPR CCDF of a frame population")
    p.add_argument("--config")
    p.add_argument("--seed", type=int)
    p.add_argument("--import", dest="import_path",
                   help="JSON-lines message file (overrides --count)")
    p.add_argument("--count", type=int, default=2000)
    p.add_argument("--oversample", type=int, default=16)
    p.add_argument("--out", default="papr.csv")
    p.set_defaults(fn=_cmd_papr)

    p = sub.add_parser("golden", help="export channel golden vectors")
    p.add_argument("--count", type=int, default=100)
    p.add_argument("--n", type=int, default=64)
    p.add_argument("--snr", type=float, default=12.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="golden.jsonl")
    p.set_defaults(fn=_cmd_golden)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (ConfigError, OSError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
