"""Command-line entry point: ``irsvlc {channel,rate,optimize,experiment,validate}``."""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .channel import build_channel_taps, cfr
from .config import ConfigError, apply_overrides, from_dict, load_raw, make_manifest
from .experiments import export_results, run_experiment
from .optimizer import (SecrecyContext, TooLargeError, baselines, exhaustive_search, ga_optimize,
                        str_to_bits)
from .rate import SystemParams, snr_at

OUTPUT_ENV = "IRSVLC_OUTPUT_DIR"


def _xy(text: str):
    try:
        x, y = (float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected X,Y, got {text!r}") from None
    return [x, y]


def _powers(text: str):
    try:
        return [float(v) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated watts, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="irsvlc", description=__doc__)
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, scene_flag="--scene"):
        sp.add_argument(scene_flag, dest="config", metavar="FILE", help="JSON configuration file")
        sp.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override a config field, e.g. system.gap_db=3 (repeatable)")
        sp.add_argument("--out", metavar="DIR", help=f"output directory (default ${OUTPUT_ENV} or ./irsvlc-output)")
        sp.add_argument("--figures", action="store_true", help="also render PNG figures")

    def users(sp):
        sp.add_argument("--bob", type=_xy, metavar="X,Y", help="Bob's floor position")
        sp.add_argument("--eve", type=_xy, metavar="X,Y", help="Eve's floor position")

    sp = sub.add_parser("channel", help="dump the CFR and tap table of one user")
    common(sp)
    users(sp)
    sp.add_argument("--user", choices=["bob", "eve"], default="bob")
    sp.add_argument("--fmax", type=float, help="highest frequency in Hz (default 1/(2 T_s))")
    sp.add_argument("--points", type=int, default=1001)

    sp = sub.add_parser("rate", help="rates and secrecy capacity of one allocation")
    common(sp)
    users(sp)
    sp.add_argument("--alloc", default="ones", help="bitstring s (1 = Bob), or 'ones' / 'zeros'")
    sp.add_argument("--power", type=float, help="LED optical power in W")
    sp.add_argument("--snr-csv", action="store_true", help="write the per-frequency SNR of both users")

    sp = sub.add_parser("optimize", help="search the secrecy-maximising allocation")
    common(sp)
    users(sp)
    sp.add_argument("--mode", choices=["ga", "es", "baselines"], default="ga")
    sp.add_argument("--seed", type=int)
    sp.add_argument("--power", type=float, help="LED optical power in W")

    sp = sub.add_parser("experiment", help="Monte Carlo power sweep")
    common(sp, "--scenario")
    sp.add_argument("--seed", type=int, help="master seed")
    sp.add_argument("--trials", type=int)
    sp.add_argument("--placement", choices=["both_uniform", "eve_inner_bob_outer"])
    sp.add_argument("--optimizer", choices=["ga", "es"])
    sp.add_argument("--powers", type=_powers, metavar="P1,P2,...")
    sp.add_argument("--threads", type=int, help="worker processes (default: all CPUs)")

    sp = sub.add_parser("validate", help="run the invariant suite")
    sp.add_argument("--quick", action="store_true", help="smaller sample counts")
    sp.add_argument("--only", metavar="NAME", help="run one module's checks or one check")
    sp.add_argument("--out", metavar="DIR", help="also write validation.csv and manifest.json here")
    return p


def _load(args, extra: dict | None = None):
    raw = apply_overrides(load_raw(args.config), args.set)
    for key, value in (extra or {}).items():
        if value is not None:
            raw = apply_overrides(raw, [f"{key}={json.dumps(value)}"])
    return from_dict(raw)


def _out_dir(args) -> Path:
    out = Path(args.out or os.environ.get(OUTPUT_ENV) or "irsvlc-output")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_manifest(out: Path, command: str, cfg, **extra):
    with open(out / "manifest.json", "w") as fh:
        json.dump(make_manifest(command, cfg, **extra), fh, indent=2, sort_keys=True)
        fh.write("\n")


def _context(cfg, power):
    scene = cfg.scene
    tb = build_channel_taps(scene, scene.user("bob", *cfg.users["bob"]))
    te = build_channel_taps(scene, scene.user("eve", *cfg.users["eve"]))
    return SecrecyContext(tb, te, cfg.led_power if power is None else power, cfg.params)


def _writer(path):
    fh = open(path, "w", newline="")
    return fh, csv.writer(fh, lineterminator="\n")


def cmd_channel(args) -> int:
    cfg = _load(args, {"users.bob": args.bob, "users.eve": args.eve})
    out = _out_dir(args)
    scene = cfg.scene
    taps = build_channel_taps(scene, scene.user(args.user, *cfg.users[args.user]))
    fmax = cfg.params.bandwidth if args.fmax is None else args.fmax
    if fmax < 0 or args.points < 2:
        raise ConfigError("--fmax must be >= 0 and --points >= 2")
    f = np.linspace(0.0, fmax, args.points)
    q = cfr(taps, f)
    fh, w = _writer(out / f"cfr_{args.user}.csv")
    with fh:
        w.writerow(["f_Hz", "re_Q", "im_Q", "abs_Q2"])
        for fi, qi in zip(f, q):
            w.writerow([f"{fi:.6f}", f"{qi.real:.9e}", f"{qi.imag:.9e}", f"{abs(qi) ** 2:.9e}"])
    fh, w = _writer(out / f"taps_{args.user}.csv")
    with fh:
        w.writerow(["n", "gain", "delay_s"])  # n = 0 is the direct path
        w.writerow([0, f"{taps.los_gain:.9e}", f"{taps.los_delay:.9e}"])
        for n, (g, t) in enumerate(zip(taps.nlos_gains, taps.nlos_delays), start=1):
            w.writerow([n, f"{g:.9e}", f"{t:.9e}"])
    _write_manifest(out, "channel", cfg, user=args.user, fmax_hz=fmax, points=args.points)
    if args.figures:
        from .plotting import plot_cfr
        plot_cfr(f, np.abs(q) ** 2, out / f"cfr_{args.user}.png", label=f"({args.user})")
    print(f"{args.user}: LoS gain {taps.los_gain:.4e}, {taps.n_elements} reflected taps, "
          f"sum of reflected gains {taps.nlos_gains.sum():.4e}")
    print(f"wrote {out / f'cfr_{args.user}.csv'} and {out / f'taps_{args.user}.csv'}")
    return 0


def _parse_alloc(text: str, n: int) -> np.ndarray:
    if text == "ones":
        return np.ones(n, np.uint8)
    if text == "zeros":
        return np.zeros(n, np.uint8)
    s = str_to_bits(text)
    if s.size != n:
        raise ConfigError(f"--alloc has {s.size} bits but the panel has {n} elements")
    return s


def cmd_rate(args) -> int:
    cfg = _load(args, {"users.bob": args.bob, "users.eve": args.eve})
    ctx = _context(cfg, args.power)
    s = _parse_alloc(args.alloc, ctx.n_elements)
    r = ctx.rates(s)
    los = ctx.los_only()
    print(f"power      {ctx.led_power:g} W")
    print(f"R_B        {r.rate_bob / 1e6:.3f} Mbit/s   (LoS only {los.rate_bob / 1e6:.3f})")
    print(f"R_E        {r.rate_eve / 1e6:.3f} Mbit/s   (LoS only {los.rate_eve / 1e6:.3f})")
    print(f"C_s        {r.secrecy / 1e6:.3f} Mbit/s   (LoS only {los.secrecy / 1e6:.3f})")
    if args.snr_csv or args.figures or args.out:
        out = _out_dir(args)
        if args.snr_csv:
            f = cfg.params.frequency_grid()
            sb = snr_at(f, ctx.taps_bob, s, ctx.led_power, cfg.params)
            se = snr_at(f, ctx.taps_eve, 1 - s, ctx.led_power, cfg.params)
            fh, w = _writer(out / "snr.csv")
            with fh:
                w.writerow(["f_Hz", "snr_bob", "snr_eve"])
                for row in zip(f, sb, se):
                    w.writerow([f"{row[0]:.6f}", f"{row[1]:.9e}", f"{row[2]:.9e}"])
            print(f"wrote {out / 'snr.csv'}")
        _write_manifest(out, "rate", cfg, allocation="".join(map(str, s)), power_w=ctx.led_power)
    return 0


def cmd_optimize(args) -> int:
    cfg = _load(args, {"users.bob": args.bob, "users.eve": args.eve, "ga.seed": args.seed})
    ctx = _context(cfg, args.power)
    out = _out_dir(args)
    los = ctx.los_only()
    if args.mode == "baselines":
        rows = baselines(ctx, seed=cfg.ga.rng_seed)
        fh, w = _writer(out / "baselines.csv")
        with fh:
            w.writerow(["label", "allocation_bits", "RB_Mbps", "RE_Mbps", "Cs_Mbps"])
            for b in rows:
                bits = "" if b.allocation is None else "".join(map(str, b.allocation))
                w.writerow([b.label, bits, f"{b.rates.rate_bob / 1e6:.6f}",
                            f"{b.rates.rate_eve / 1e6:.6f}", f"{b.fitness / 1e6:.6f}"])
                print(f"{b.label:10s} C_s {b.fitness / 1e6:10.3f} Mbit/s")
        _write_manifest(out, "optimize", cfg, mode=args.mode, power_w=ctx.led_power)
        return 0
    if args.mode == "es":
        res = exhaustive_search(ctx)
    else:
        res = ga_optimize(cfg.ga, ctx)
    fh, w = _writer(out / "history.csv")
    with fh:
        w.writerow(["generation", "best_Cs_Mbps"])
        for g, v in enumerate(res.fitness_history):
            w.writerow([g, f"{v / 1e6:.6f}"])
    _write_manifest(out, "optimize", cfg, mode=args.mode, power_w=ctx.led_power)
    if args.figures:
        from .plotting import plot_convergence
        plot_convergence(res.fitness_history, out / "convergence.png", label=args.mode.upper())
    print(f"allocation {res.bits}")
    print(f"C_s        {res.best_fitness / 1e6:.3f} Mbit/s   (LoS only {los.secrecy / 1e6:.3f})")
    print(f"evaluations {res.evaluations}")
    return 0


def cmd_experiment(args) -> int:
    cfg = _load(args, {"experiment.master_seed": args.seed, "experiment.trials": args.trials,
                       "experiment.placement": args.placement, "experiment.optimizer": args.optimizer,
                       "experiment.power_sweep_w": args.powers})
    out = _out_dir(args)
    records, summary = run_experiment(cfg.scenario, threads=args.threads)
    files = export_results(records, summary, out, cfg.scenario)
    if args.figures:
        from .plotting import plot_experiment
        plot_experiment(summary, out)
    print(f"{'P [W]':>6} {'Cs_los':>10} {'Cs_opt':>10} {'RB_los':>10} {'RB_opt':>10} "
          f"{'RE_los':>10} {'RE_opt':>10}  (Mbit/s)")
    for r in summary.rows:
        print(f"{r.power:6g} {r.cs_los / 1e6:10.2f} {r.cs_opt / 1e6:10.2f} {r.rb_los / 1e6:10.2f} "
              f"{r.rb_opt / 1e6:10.2f} {r.re_los / 1e6:10.2f} {r.re_opt / 1e6:10.2f}")
    print(f"wrote {files['trials']}, {files['summary']}, {files['manifest']}")
    return 0


def cmd_validate(args) -> int:
    from .validation import run_validation
    results = run_validation(quick=args.quick, only=args.only)
    if not results:
        raise ConfigError(f"no check matches {args.only!r}")
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'}  {r.module:11s} {r.name:36s} {r.seconds:6.1f}s  {r.detail}")
    failed = sum(not r.passed for r in results)
    print(f"{len(results) - failed}/{len(results)} invariant checks passed")
    if args.out:
        out = _out_dir(args)
        fh, w = _writer(out / "validation.csv")
        with fh:
            w.writerow(["module", "check", "passed", "seconds", "detail"])
            for r in results:
                w.writerow([r.module, r.name, int(r.passed), f"{r.seconds:.2f}", r.detail])
        from .config import AppConfig
        _write_manifest(out, "validate", AppConfig(), quick=args.quick)
    return 1 if failed else 0


COMMANDS = {"channel": cmd_channel, "rate": cmd_rate, "optimize": cmd_optimize,
            "experiment": cmd_experiment, "validate": cmd_validate}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except TooLargeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (ConfigError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
