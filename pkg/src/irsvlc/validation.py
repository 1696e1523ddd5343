"""Executable invariant checks behind ``irsvlc validate``.

Every check raises AssertionError with a message on failure and returns a
short detail string on success.  ``quick`` shrinks sample counts so the
whole suite finishes in well under a minute.
"""

from __future__ import annotations

import contextlib
import io
import tempfile
import time
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Callable

import numpy as np

from .channel import (build_channel_taps, cfr, discretize_cir, dtft, los_gain, nlos_gain,
                      power_gain_two_path, ChannelTaps)
from .geometry import (Emitter, IrsPanel, Photodetector, Scene, UserTerminal, Vec3, Wall, Zone,
                       ZoneLabel, classify_zone, cos_angle, element_positions, sample_position)
from .optimizer import (GaConfig, SecrecyContext, baselines, exhaustive_search, ga_optimize,
                        random_allocation)
from .rate import SystemParams, achievable_rate, secrecy_capacity


@dataclass
class CheckResult:
    module: str
    name: str
    passed: bool
    detail: str
    seconds: float


CHECKS: list[tuple[str, str, Callable[[bool], str]]] = []


def check(module: str):
    def deco(fn):
        CHECKS.append((module, fn.__name__, fn))
        return fn
    return deco


def _random_user(scene: Scene, rng, role) -> UserTerminal:
    p = sample_position(scene.room, rng, height=scene.receiver_height, center=scene.led.position)
    return scene.user(role, p.x, p.y)


def _random_taps(scene: Scene, rng):
    return (build_channel_taps(scene, _random_user(scene, rng, "bob")),
            build_channel_taps(scene, _random_user(scene, rng, "eve")))


# -- geometry -----------------------------------------------------------------

@check("geometry")
def elements_on_wall_plane(quick):
    scene = Scene()
    worst = 0.0
    for wall, const_axis in ((Wall.Y0, 1), (Wall.Y_MAX, 1), (Wall.X0, 0), (Wall.X_MAX, 0)):
        c = {Wall.Y0: (2.5, 0, 1.5), Wall.Y_MAX: (2.5, 5, 1.5),
             Wall.X0: (0, 2.5, 1.5), Wall.X_MAX: (5, 2.5, 1.5)}[wall]
        pos = element_positions(IrsPanel(wall, (12, 12), (0.3, 0.3), 1.0, c), scene.room)
        worst = max(worst, float(np.max(np.abs(pos[:, const_axis] - c[const_axis]))))
        free = 1 - const_axis
        assert np.all((pos[:, free] > 0) & (pos[:, free] < 5)), f"{wall}: element outside wall width"
        assert np.all((pos[:, 2] > 0) & (pos[:, 2] < 3)), f"{wall}: element outside wall height"
    assert worst <= 1e-12, f"max off-plane distance {worst}"
    return f"max off-plane distance {worst:.1e} m on all four walls"


@check("geometry")
def cos_angle_scale_invariant(quick):
    rng = np.random.default_rng(1)
    worst = 0.0
    for _ in range(200 if quick else 2000):
        a, d, n = rng.normal(size=(3, 3))
        n /= np.linalg.norm(n)
        k = rng.uniform(1e-3, 1e3)
        worst = max(worst, abs(cos_angle(a, a + d, n) - cos_angle(a, a + k * d, n)))
    assert worst < 1e-12, f"max deviation {worst}"
    return f"max deviation {worst:.1e}"


@check("geometry")
def zones_partition_floor(quick):
    scene = Scene()
    rng = np.random.default_rng(2)
    n = 500 if quick else 5000
    for label in (ZoneLabel.INNER, ZoneLabel.OUTER):
        for _ in range(n):
            p = sample_position(scene.room, rng, height=scene.receiver_height,
                                zone=Zone(label, scene.zone_radius), center=scene.led.position)
            got = classify_zone(p, scene.led, scene.zone_radius)
            assert got is label, f"{label.value} sample {p} classified {got.value}"
            assert scene.room.contains(p)
    return f"{n} samples per zone, none in both"


@check("geometry")
def element_positions_deterministic(quick):
    scene = Scene()
    a = element_positions(scene.panel, scene.room)
    b = element_positions(scene.panel, scene.room)
    assert np.array_equal(a, b)
    return f"{len(a)} identical positions"


# -- channel ------------------------------------------------------------------

@check("channel")
def taps_invariants(quick):
    scene = Scene()
    rng = np.random.default_rng(3)
    n = 20 if quick else 200
    for _ in range(n):
        t, _ = _random_taps(scene, rng)
        assert t.los_gain >= 0 and np.all(t.nlos_gains >= 0)
        assert t.los_delay > 0 and np.all(t.nlos_delays >= t.los_delay)
    return f"{n} random users: gains >= 0, reflected delays >= direct delay"


@check("channel")
def conjugate_symmetry(quick):
    scene = Scene()
    rng = np.random.default_rng(4)
    worst = 0.0
    for _ in range(10 if quick else 100):
        t, _ = _random_taps(scene, rng)
        mask = rng.integers(0, 2, t.n_elements)
        f = rng.uniform(0, 5e8, 50)
        qp, qm = cfr(t, f, mask), cfr(t, -f, mask)
        worst = max(worst, float(np.max(np.abs(qm - np.conj(qp)) / np.abs(qp).max())))
    assert worst < 1e-12, f"max relative deviation {worst}"
    return f"max relative deviation {worst:.1e}"


@check("channel")
def cfr_bounded_by_dc(quick):
    scene = Scene()
    rng = np.random.default_rng(5)
    for _ in range(10 if quick else 100):
        t, _ = _random_taps(scene, rng)
        mask = rng.integers(0, 2, t.n_elements)
        bound = t.los_gain + float(t.nlos_gains @ mask)
        q = np.abs(cfr(t, np.linspace(0, 5e8, 2001), mask))
        assert np.all(q <= bound * (1 + 1e-12)), "|Q(f)| exceeds the DC bound"
        assert abs(q[0] - bound) <= 1e-12 * bound, "bound not attained at f = 0"
    return "|Q(f)| <= Q(0) everywhere, equality at f = 0"


@check("channel")
def two_path_identity(quick):
    rng = np.random.default_rng(6)
    n = 200 if quick else 1000
    worst = 0.0
    for _ in range(n):
        g1, g2 = rng.uniform(1e-7, 1e-4, 2)
        delay = rng.uniform(1e-9, 2e-8)
        extra_delay = rng.uniform(0, 3e-8)
        f = rng.uniform(0, 5e8)
        taps = ChannelTaps(g1, delay, np.array([g2]), np.array([delay + extra_delay]))
        a = abs(cfr(taps, f)) ** 2
        b = power_gain_two_path(g1, g2, extra_delay, f)
        worst = max(worst, abs(a - b) / b)
    assert worst < 1e-12, f"max relative deviation {worst}"
    return f"{n} draws, max relative deviation {worst:.1e}"


@check("channel")
def reflected_not_stronger_than_direct(quick):
    """Mirror construction: the reflected path to a user equals a direct path to the user's image."""
    led = Emitter()
    pd = Photodetector()
    rng = np.random.default_rng(7)
    for _ in range(20 if quick else 200):
        ux, uz = rng.uniform(0.3, 4.7), rng.uniform(0, 1.0)
        refl = rng.uniform(0, 1)
        user = UserTerminal("bob", (ux, 2.5, uz), pd)
        image = UserTerminal("bob", (-ux, 2.5, uz), pd)  # mirror through the wall x = 0
        lp = led.position.array()
        ip = np.array(image.position)
        s = lp[0] / (lp[0] - ip[0])
        elem = lp + s * (ip - lp)
        g_n = nlos_gain(led, elem, (1.0, 0.0, 0.0), user, refl)
        g_l = los_gain(led, image)
        assert g_n <= g_l * (1 + 1e-12), "reflected gain exceeds direct gain"
        assert abs(g_n - refl * g_l) <= 1e-12 * g_l, "reflected gain is not reflectivity times direct gain"
    return "reflected gain = reflectivity x direct gain of the equivalent image path"


@check("channel")
def fov_violations_give_zero(quick):
    led = Emitter()
    narrow = Photodetector(fov=30.0)
    user = UserTerminal("bob", (4.9, 4.9, 0.0), narrow)  # ~51 deg incidence
    assert los_gain(led, user) == 0.0
    below = UserTerminal("bob", (2.5, 2.5, 1.0), Photodetector())
    assert nlos_gain(led, (2.5, 0.0, 0.5), (0, 1, 0), below, 1.0) == 0.0
    outside = UserTerminal("bob", (2.5, 3.0, 0.0), narrow)  # 50 deg off the PD axis
    assert nlos_gain(led, (2.5, 0.0, 2.5), (0, 1, 0), outside, 1.0) == 0.0
    return "LoS and reflected gains are exactly 0 outside the FoV"


@check("channel")
def cir_matches_cfr(quick):
    scene = Scene()
    rng = np.random.default_rng(8)
    f = np.linspace(0, 5e8, 101)
    worst = 0.0
    n = 3 if quick else 20
    for _ in range(n):
        t, _ = _random_taps(scene, rng)
        mask = rng.integers(0, 2, t.n_elements)
        times, h = discretize_cir(t, mask)
        q = cfr(t, f, mask)
        worst = max(worst, float(np.max(np.abs(dtft(times, h, f) - q)) / np.max(np.abs(q))))
    assert worst < 0.01, f"relative deviation {worst}"
    return f"{n} scenes, max relative deviation {worst:.1e}"


# -- rate ---------------------------------------------------------------------

@check("rate")
def rate_monotone_in_power(quick):
    scene = Scene(panel=IrsPanel(counts=(4, 3)))
    params = SystemParams()
    rng = np.random.default_rng(9)
    for _ in range(5 if quick else 30):
        t, _ = _random_taps(scene, rng)
        mask = rng.integers(0, 2, t.n_elements)
        rates = [achievable_rate(t, mask, p, params) for p in (0.5, 1, 2, 3, 5, 7)]
        assert all(b >= a for a, b in zip(rates, rates[1:])), f"non-monotone rates {rates}"
    return "rate non-decreasing in LED power"


@check("rate")
def quadrature_converged(quick):
    scene = Scene()
    params = SystemParams()
    rng = np.random.default_rng(10)
    worst = 0.0
    n = 10 if quick else 100
    for _ in range(n):
        t, _ = _random_taps(scene, rng)
        mask = rng.integers(0, 2, t.n_elements)
        p = rng.uniform(0.5, 7)
        r1 = achievable_rate(t, mask, p, params)
        r2 = achievable_rate(t, mask, p, params.doubled())
        worst = max(worst, abs(r2 - r1) / r2)
    assert worst < 1e-3, f"relative change {worst}"
    return f"{n} triples, max relative change {worst:.1e} on doubling the grid"


@check("rate")
def dc_gain_grows_with_mask(quick):
    scene = Scene()
    rng = np.random.default_rng(11)
    for _ in range(10 if quick else 100):
        t, _ = _random_taps(scene, rng)
        mask = rng.integers(0, 2, t.n_elements)
        for n in np.flatnonzero(mask == 0)[:10]:
            more = mask.copy()
            more[n] = 1
            assert abs(cfr(t, 0.0, more)) >= abs(cfr(t, 0.0, mask))
    return "|Q(0)| never drops when an element is added"


@check("rate")
def secrecy_is_difference(quick):
    scene = Scene(panel=IrsPanel(counts=(3, 3)))
    rng = np.random.default_rng(12)
    for _ in range(5 if quick else 20):
        tb, te = _random_taps(scene, rng)
        r = secrecy_capacity(tb, te, rng.integers(0, 2, 9), 3.0, SystemParams())
        assert r.secrecy == r.rate_bob - r.rate_eve
    return "C_s == R_B - R_E bit-exactly"


@check("rate")
def role_swap_antisymmetry(quick):
    scene = Scene(panel=IrsPanel(counts=(4, 4)))
    params = SystemParams()
    rng = np.random.default_rng(13)
    worst = 0.0
    n = 10 if quick else 100
    for _ in range(n):
        tb, te = _random_taps(scene, rng)
        s = rng.integers(0, 2, tb.n_elements)
        p = rng.uniform(0.5, 7)
        a = secrecy_capacity(tb, te, s, p, params).secrecy
        b = secrecy_capacity(te, tb, 1 - s, p, params).secrecy
        worst = max(worst, abs(a + b) / max(abs(a), 1e-300))
    assert worst <= 1e-12, f"relative asymmetry {worst}"
    return f"{n} scenes, max relative asymmetry {worst:.1e}"


# -- optimizer ----------------------------------------------------------------

def _small_context(rng, counts=(3, 5), power=3.0):
    scene = Scene(panel=IrsPanel(counts=counts))
    tb, te = _random_taps(scene, rng)
    return SecrecyContext(tb, te, power, SystemParams())


@check("optimizer")
def elitist_history_monotone(quick):
    rng = np.random.default_rng(14)
    for i in range(3 if quick else 10):
        ctx = _small_context(rng, (6, 4))
        h = ga_optimize(GaConfig(rng_seed=i, generations=15), ctx).fitness_history
        assert all(b >= a for a, b in zip(h, h[1:])), "best fitness decreased between generations"
    return "per-generation best never decreases with 2 elites"


@check("optimizer")
def ga_matches_exhaustive(quick):
    rng = np.random.default_rng(15)
    counts = (3, 3) if quick else (3, 5)
    n = 10 if quick else 50
    hits = 0
    for i in range(n):
        ctx = _small_context(rng, counts)
        es = exhaustive_search(ctx)
        ga = ga_optimize(GaConfig(rng_seed=i), ctx)
        assert ga.best_fitness <= es.best_fitness + 1e-9 * abs(es.best_fitness), "GA beat ES"
        hits += abs(ga.best_fitness - es.best_fitness) <= 1e-9 * abs(es.best_fitness)
    assert hits >= 0.95 * n, f"GA reached the optimum in only {hits}/{n} scenes"
    return f"GA == ES in {hits}/{n} scenes with a {counts[0]}x{counts[1]} panel"


@check("optimizer")
def ga_dominates_baselines(quick):
    rng = np.random.default_rng(16)
    for i in range(3 if quick else 20):
        ctx = _small_context(rng, (12, 12) if i == 0 else (5, 4))
        base = baselines(ctx, seed=i)
        inject = [b.allocation for b in base if b.allocation is not None]
        res = ga_optimize(GaConfig(rng_seed=i, generations=5), ctx, inject=inject)
        best = max(b.fitness for b in base if b.allocation is not None)
        # batched and single-mask rate paths round differently in the last bits
        slack = 1e-12 * abs(best)
        assert res.best_fitness >= best - slack, f"GA {res.best_fitness} below baseline {best}"
    return "GA result >= every injected baseline"


@check("optimizer")
def evaluation_count(quick):
    rng = np.random.default_rng(17)
    ctx = _small_context(rng, (4, 3))
    cfg = GaConfig(population_size=20, generations=7, elite_count=3)
    res = ga_optimize(cfg, ctx)
    expected = cfg.population_size + cfg.generations * cfg.offspring_per_generation
    assert res.evaluations == expected, f"{res.evaluations} != {expected}"
    return f"{res.evaluations} evaluations = S_p + N_gen x offspring"


@check("optimizer")
def frozen_population(quick):
    rng = np.random.default_rng(18)
    ctx = _small_context(rng, (4, 3))
    res = ga_optimize(GaConfig(crossover_prob=0, mutation_prob=0, elite_count=50, generations=10), ctx)
    assert res.fitness_history[-1] == res.fitness_history[0] == res.best_fitness
    return "no crossover, no mutation, full elitism: best stays at the initial best"


# -- experiments ---------------------------------------------------------------

def _zoned(trials, powers=(1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0)):
    from .experiments import Placement, ScenarioConfig
    return ScenarioConfig(placement=Placement.EVE_INNER_BOB_OUTER, trials=trials,
                          power_sweep=powers, master_seed=99)


_cache: dict = {}


def _zoned_run(quick):
    from .experiments import run_experiment
    key = ("zoned", quick)
    if key not in _cache:
        _cache[key] = run_experiment(_zoned(10 if quick else 50))
    return _cache[key]


@check("experiments")
def determinism_across_workers(quick):
    from .experiments import Placement, ScenarioConfig, run_experiment
    cfg = ScenarioConfig(scene=Scene(panel=IrsPanel(counts=(4, 3))), trials=4,
                         power_sweep=(1.0, 3.0), placement=Placement.BOTH_UNIFORM,
                         ga=GaConfig(generations=5), master_seed=5)
    a, _ = run_experiment(cfg, threads=1)
    b, _ = run_experiment(cfg, threads=2)
    assert a == b, "records differ between 1 and 2 workers"
    return "identical records with 1 and 2 workers"


@check("experiments")
def optimum_dominates_baselines(quick):
    from .experiments import trial_seeds
    cfg = _zoned(3, powers=(1.0, 3.0, 7.0))
    from .experiments import run_experiment
    records, _ = run_experiment(cfg)
    scene = cfg.scene
    for r in records:
        seeds = trial_seeds(cfg.master_seed, r.trial, 2 + len(cfg.power_sweep))
        tb = build_channel_taps(scene, scene.user("bob", r.bob.x, r.bob.y))
        te = build_channel_taps(scene, scene.user("eve", r.eve.x, r.eve.y))
        rnd = random_allocation(scene.n_elements, seeds[1])
        for e in r.entries:
            ctx = SecrecyContext(tb, te, e.power, cfg.params)
            for s in (np.ones(scene.n_elements), np.zeros(scene.n_elements), rnd,
                      ctx.los_equivalent()):
                assert e.opt.secrecy >= ctx.rates(s).secrecy - 1e-6, "optimum below a baseline"
    return "C_s_opt >= all injected baselines for every trial and power"


@check("experiments")
def zoned_los_negative(quick):
    _, summary = _zoned_run(quick)
    for row in summary.rows:
        assert row.cs_los < 0, f"mean LoS secrecy {row.cs_los / 1e6:.1f} Mbit/s at {row.power} W"
    return "mean LoS secrecy < 0 at " + ", ".join(f"{r.power:g}" for r in summary.rows) + " W"


@check("experiments")
def zoned_optimum_positive_at_3w(quick):
    _, summary = _zoned_run(quick)
    row = summary.at(3.0)
    assert row.cs_opt > 0, f"mean optimised secrecy {row.cs_opt / 1e6:.1f} Mbit/s"
    return f"mean C_s: LoS {row.cs_los / 1e6:.1f}, optimised {row.cs_opt / 1e6:.1f} Mbit/s"


@check("experiments")
def uniform_bob_improves(quick):
    from .experiments import ScenarioConfig, run_experiment
    _, summary = run_experiment(ScenarioConfig(trials=10 if quick else 50, power_sweep=(3.0,),
                                               master_seed=123))
    row = summary.rows[0]
    assert row.rb_opt >= row.rb_los, "mean optimised Bob rate below the LoS-only rate"
    return f"mean R_B: LoS {row.rb_los / 1e6:.1f} -> optimised {row.rb_opt / 1e6:.1f} Mbit/s"


@check("experiments")
def means_within_trial_range(quick):
    records, summary = _zoned_run(quick)
    for i, row in enumerate(summary.rows):
        for attr, get in (("cs_los", lambda e: e.los.secrecy), ("cs_opt", lambda e: e.opt.secrecy),
                          ("rb_opt", lambda e: e.opt.rate_bob), ("re_opt", lambda e: e.opt.rate_eve)):
            vals = [get(r.entries[i]) for r in records]
            assert min(vals) <= getattr(row, attr) <= max(vals), f"{attr} mean outside range"
    return "every mean lies between the per-trial extremes"


# -- cli ----------------------------------------------------------------------

@check("cli")
def manifest_reproduces_run(quick):
    from .cli import main
    with tempfile.TemporaryDirectory() as tmp:
        a, b = Path(tmp, "a"), Path(tmp, "b")
        args = ["experiment", "--trials", "2", "--seed", "7", "--set", "irs.nx=4", "--set", "irs.ny=3",
                "--set", "experiment.power_sweep_w=[1,3]"]
        with contextlib.redirect_stdout(io.StringIO()):
            assert main(args + ["--out", str(a)]) == 0
            assert main(["experiment", "--scenario", str(a / "manifest.json"), "--out", str(b)]) == 0
        for name in ("trials.csv", "summary.csv"):
            assert (a / name).read_bytes() == (b / name).read_bytes(), f"{name} differs"
        written = {p.relative_to(tmp).parts[0] for p in Path(tmp).rglob("*") if p.is_file()}
        assert written == {"a", "b"}, f"files written outside the output directories: {written}"
    return "re-running from the manifest reproduces both CSVs byte for byte"


def run_validation(quick: bool = False, only: str | None = None) -> list[CheckResult]:
    out = []
    for module, name, fn in CHECKS:
        if only and only not in (module, name):
            continue
        t0 = time.perf_counter()
        try:
            detail, ok = fn(quick), True
        except AssertionError as exc:
            detail, ok = str(exc) or "assertion failed", False
        out.append(CheckResult(module, name, ok, detail, time.perf_counter() - t0))
    return out
