"""Seeded Monte Carlo harness: random placements, power sweeps, aggregation, CSV export."""

from __future__ import annotations

import csv
import enum
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from threadpoolctl import threadpool_limits

from .channel import build_channel_taps
from .geometry import Scene, Vec3, Zone, ZoneLabel, sample_position
from .optimizer import GaConfig, SecrecyContext, exhaustive_search, ga_optimize, random_allocation
from .rate import RateEvaluator, RatePair, SystemParams

DEFAULT_POWER_SWEEP = (0.5, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0)
ES_TRIAL_LIMIT = 15

TRIAL_COLUMNS = ["trial", "power_W", "bob_x", "bob_y", "eve_x", "eve_y",
                 "RB_los_Mbps", "RE_los_Mbps", "Cs_los_Mbps",
                 "RB_opt_Mbps", "RE_opt_Mbps", "Cs_opt_Mbps", "allocation_bits"]
SUMMARY_COLUMNS = ["power_W", "RB_los_Mbps", "RE_los_Mbps", "Cs_los_Mbps",
                   "RB_opt_Mbps", "RE_opt_Mbps", "Cs_opt_Mbps",
                   "Cs_los_se_Mbps", "Cs_opt_se_Mbps",
                   "RB_change_percent", "RE_change_percent", "enhancement_percent"]


class Placement(str, enum.Enum):
    BOTH_UNIFORM = "both_uniform"
    EVE_INNER_BOB_OUTER = "eve_inner_bob_outer"


class UndefinedEnhancement(ZeroDivisionError):
    pass


@dataclass(frozen=True)
class ScenarioConfig:
    scene: Scene = field(default_factory=Scene)
    params: SystemParams = field(default_factory=SystemParams)
    ga: GaConfig = field(default_factory=GaConfig)
    placement: Placement = Placement.BOTH_UNIFORM
    trials: int = 300
    power_sweep: tuple[float, ...] = DEFAULT_POWER_SWEEP
    optimizer: str = "ga"
    master_seed: int = 2024

    def __post_init__(self):
        object.__setattr__(self, "placement", Placement(self.placement))
        object.__setattr__(self, "power_sweep", tuple(float(p) for p in self.power_sweep))
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        ps = self.power_sweep
        if not ps or ps[0] <= 0 or any(b <= a for a, b in zip(ps, ps[1:])):
            raise ValueError(f"power sweep must be non-empty, positive and strictly ascending: {ps}")
        if self.optimizer not in ("ga", "es"):
            raise ValueError(f"optimizer must be 'ga' or 'es', got {self.optimizer!r}")
        if self.optimizer == "es" and self.scene.n_elements > ES_TRIAL_LIMIT:
            raise ValueError(f"exhaustive search per trial needs at most {ES_TRIAL_LIMIT} IRS elements, "
                             f"the scene has {self.scene.n_elements}")
        if not 0 <= self.master_seed < 2**64:
            raise ValueError("master seed must be a 64-bit unsigned integer")


@dataclass(frozen=True)
class PowerEntry:
    power: float
    los: RatePair
    opt: RatePair
    allocation: str


@dataclass(frozen=True)
class TrialRecord:
    trial: int
    bob: Vec3
    eve: Vec3
    entries: tuple[PowerEntry, ...]


@dataclass(frozen=True)
class SummaryRow:
    power: float
    rb_los: float
    re_los: float
    cs_los: float
    rb_opt: float
    re_opt: float
    cs_opt: float
    cs_los_se: float
    cs_opt_se: float
    rb_change_percent: float | None
    re_change_percent: float | None
    enhancement_percent: float | None


@dataclass(frozen=True)
class ExperimentSummary:
    rows: tuple[SummaryRow, ...]

    def at(self, power: float) -> SummaryRow:
        for r in self.rows:
            if math.isclose(r.power, power):
                return r
        raise KeyError(power)


def enhancement_percent(c_base: float, c_opt: float) -> float:
    """Signed relative change of ``c_opt`` with respect to ``|c_base|``, in percent."""
    if c_base == 0:
        raise UndefinedEnhancement("enhancement relative to a zero baseline is undefined")
    return 100.0 * (c_opt - c_base) / abs(c_base)


def trial_seeds(master_seed: int, trial: int, n: int) -> list[int]:
    """Independent 64-bit seeds for one trial, a pure function of (master_seed, trial)."""
    ss = np.random.SeedSequence(master_seed, spawn_key=(trial,))
    return [int(s) for s in ss.generate_state(n, dtype=np.uint64)]


def place_users(config: ScenarioConfig, rng: np.random.Generator):
    scene = config.scene
    kw = dict(height=scene.receiver_height, center=scene.led.position)
    if config.placement is Placement.BOTH_UNIFORM:
        bob = sample_position(scene.room, rng, **kw)
        eve = sample_position(scene.room, rng, **kw)
    else:
        eve = sample_position(scene.room, rng, zone=Zone(ZoneLabel.INNER, scene.zone_radius), **kw)
        bob = sample_position(scene.room, rng, zone=Zone(ZoneLabel.OUTER, scene.zone_radius), **kw)
    return bob, eve


def run_trial(config: ScenarioConfig, trial: int) -> TrialRecord:
    n_pow = len(config.power_sweep)
    seeds = trial_seeds(config.master_seed, trial, 2 + n_pow)
    # one BLAS thread: results must not depend on how trials are scheduled
    with threadpool_limits(limits=1):
        bob, eve = place_users(config, np.random.default_rng(seeds[0]))
        scene = config.scene
        ev_b = RateEvaluator(build_channel_taps(scene, scene.user("bob", bob.x, bob.y)), config.params)
        ev_e = RateEvaluator(build_channel_taps(scene, scene.user("eve", eve.x, eve.y)), config.params)
        extra = [random_allocation(scene.n_elements, seeds[1])]
        entries = []
        for power, seed in zip(config.power_sweep, seeds[2:]):
            ctx = SecrecyContext.from_evaluators(ev_b, ev_e, power)
            if config.optimizer == "es":
                res = exhaustive_search(ctx)
            else:
                res = ga_optimize(replace(config.ga, rng_seed=seed), ctx, inject=extra)
            entries.append(PowerEntry(power, ctx.los_only(), ctx.rates(res.best_allocation), res.bits))
    return TrialRecord(trial, bob, eve, tuple(entries))


def _trial_job(args):
    return run_trial(*args)


def summarize(records: list[TrialRecord], power_sweep) -> ExperimentSummary:
    rows = []
    for i, power in enumerate(power_sweep):
        e = [r.entries[i] for r in records]
        a = np.array([[x.los.rate_bob, x.los.rate_eve, x.los.secrecy,
                       x.opt.rate_bob, x.opt.rate_eve, x.opt.secrecy] for x in e]).reshape(-1, 6)
        if len(e) == 0:
            rows.append(SummaryRow(power, *([math.nan] * 8), None, None, None))
            continue
        m = a.mean(axis=0)
        se = a[:, [2, 5]].std(axis=0, ddof=1) / math.sqrt(len(e)) if len(e) > 1 else np.zeros(2)
        rows.append(SummaryRow(power, *m.tolist(), *se.tolist(),
                               _pct(m[0], m[3]), _pct(m[1], m[4]), _pct(m[2], m[5])))
    return ExperimentSummary(tuple(rows))


def _pct(base, new):
    try:
        return enhancement_percent(base, new)
    except UndefinedEnhancement:
        return None


def run_experiment(config: ScenarioConfig, threads: int | None = 1):
    """Run every trial and aggregate.

    ``threads`` caps the worker processes (None: one per CPU).  The output
    is identical for every value.
    """
    jobs = [(config, t) for t in range(config.trials)]
    workers = (os.cpu_count() or 1) if threads is None else max(1, int(threads))
    if workers == 1:
        records = [run_trial(c, t) for c, t in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(_trial_job, jobs, chunksize=max(1, len(jobs) // (4 * workers))))
    return records, summarize(records, config.power_sweep)


def _mbps(x: float) -> str:
    return f"{x / 1e6:.6f}"


def _opt(x: float | None) -> str:
    return "" if x is None else f"{x:.6f}"


def export_results(records, summary: ExperimentSummary, path, config: ScenarioConfig,
                   **manifest_extra) -> dict:
    """Write trials.csv, summary.csv and manifest.json into directory ``path``.

    The manifest echoes the full configuration, so feeding it back to
    ``irsvlc experiment --scenario`` reproduces both CSVs byte for byte.
    """
    from .config import make_manifest

    manifest = make_manifest("experiment", config, **manifest_extra)
    out = Path(path)
    try:
        out.mkdir(parents=True, exist_ok=True)
        files = {"trials": out / "trials.csv", "summary": out / "summary.csv",
                 "manifest": out / "manifest.json"}
        with open(files["trials"], "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(TRIAL_COLUMNS)
            for r in records:
                for e in r.entries:
                    w.writerow([r.trial, f"{e.power:g}", f"{r.bob.x:.6f}", f"{r.bob.y:.6f}",
                                f"{r.eve.x:.6f}", f"{r.eve.y:.6f}",
                                _mbps(e.los.rate_bob), _mbps(e.los.rate_eve), _mbps(e.los.secrecy),
                                _mbps(e.opt.rate_bob), _mbps(e.opt.rate_eve), _mbps(e.opt.secrecy),
                                e.allocation])
        with open(files["summary"], "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(SUMMARY_COLUMNS)
            for s in summary.rows:
                if not records:
                    continue
                w.writerow([f"{s.power:g}", _mbps(s.rb_los), _mbps(s.re_los), _mbps(s.cs_los),
                            _mbps(s.rb_opt), _mbps(s.re_opt), _mbps(s.cs_opt),
                            _mbps(s.cs_los_se), _mbps(s.cs_opt_se),
                            _opt(s.rb_change_percent), _opt(s.re_change_percent),
                            _opt(s.enhancement_percent)])
        with open(files["manifest"], "w") as fh:
            json.dump(manifest, fh, indent=2, sort_keys=True)
            fh.write("\n")
    except OSError as exc:
        raise OSError(f"could not write results to {out}: {exc}") from exc
    return files
