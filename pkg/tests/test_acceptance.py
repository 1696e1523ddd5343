"""The nine acceptance criteria, each at its stated tolerance.

A one-line PASS/FAIL summary per criterion is printed at the end of the
pytest run (see conftest.py).  The zoned Monte Carlo run is shared by
criteria 6 and 7; the whole module takes roughly 18 minutes on one core.
"""

import math
import statistics

import numpy as np
import pytest

from irsvlc.channel import (build_channel_taps, cfr, discretize_cir, dtft,
                            power_gain_two_path)
from irsvlc.cli import main
from irsvlc.experiments import Placement, ScenarioConfig, run_experiment, summarize
from irsvlc.geometry import IrsPanel, Scene, sample_position
from irsvlc.optimizer import GaConfig, SecrecyContext, exhaustive_search, ga_optimize
from irsvlc.rate import SystemParams, achievable_rate
from irsvlc.validation import run_validation

pytestmark = pytest.mark.slow
P = SystemParams()
ZONED_POWERS = (1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0)


def random_user(scene, rng, role="bob"):
    p = sample_position(scene.room, rng, height=scene.receiver_height)
    return scene.user(role, p.x, p.y)


def test_c1_ga_matches_exhaustive_search(record_acceptance):
    scene = Scene(panel=IrsPanel(counts=(3, 5)))
    rng = np.random.default_rng(11)
    hits, first_hit = 0, []
    for i in range(50):
        ctx = SecrecyContext(build_channel_taps(scene, random_user(scene, rng, "bob")),
                             build_channel_taps(scene, random_user(scene, rng, "eve")), 3.0, P)
        es = exhaustive_search(ctx)
        ga = ga_optimize(GaConfig(rng_seed=i), ctx)
        tol = 1e-9 * abs(es.best_fitness)
        assert ga.best_fitness <= es.best_fitness + tol
        if abs(ga.best_fitness - es.best_fitness) <= tol:
            hits += 1
            first_hit.append(next(g for g, v in enumerate(ga.fitness_history)
                                  if abs(v - es.best_fitness) <= tol))
    median = statistics.median(first_hit) if first_hit else math.inf
    ok = hits >= 48 and median <= 10
    record_acceptance(1, ok, f"GA == ES in {hits}/50 scenes (need >= 48), median first-hit generation {median}")
    assert ok


def test_c2_interference_identity(record_acceptance):
    rng = np.random.default_rng(21)
    worst = 0.0
    for _ in range(1000):
        center = (rng.uniform(0.2, 4.8), 0.0, rng.uniform(0.2, 2.8))
        scene = Scene(panel=IrsPanel(counts=(1, 1), center=center))
        taps = build_channel_taps(scene, random_user(scene, rng))
        f = rng.uniform(0, 5e8)
        a = abs(cfr(taps, f)) ** 2
        b = power_gain_two_path(taps.los_gain, taps.nlos_gains[0], taps.nlos_delays[0] - taps.los_delay, f)
        worst = max(worst, abs(a - b) / b)
    ok = worst < 1e-12
    record_acceptance(2, ok, f"1000 single-element scenes, max relative deviation {worst:.2e} (< 1e-12)")
    assert ok


def test_c3_cir_matches_cfr(record_acceptance):
    scene = Scene()
    rng = np.random.default_rng(31)
    f = np.linspace(0, 5e8, 501)
    worst, worst_pointwise = 0.0, 0.0
    for _ in range(20):
        taps = build_channel_taps(scene, random_user(scene, rng))
        mask = rng.integers(0, 2, taps.n_elements)
        times, h = discretize_cir(taps, mask)
        q = cfr(taps, f, mask)
        err = np.abs(dtft(times, h, f) - q)
        worst = max(worst, float(err.max() / np.abs(q).max()))
        worst_pointwise = max(worst_pointwise, float(np.max(err / np.abs(q))))
    ok = worst < 0.01
    record_acceptance(3, ok, f"20 scenes, max |error| / max |Q| = {worst:.2e} (< 1e-2); "
                             f"pointwise at spectral notches {worst_pointwise:.2e}")
    assert ok


def test_c4_quadrature_convergence(record_acceptance):
    scene = Scene()
    rng = np.random.default_rng(41)
    worst = 0.0
    for _ in range(100):
        taps = build_channel_taps(scene, random_user(scene, rng))
        mask = rng.integers(0, 2, taps.n_elements)
        power = rng.uniform(0.5, 7.0)
        r = achievable_rate(taps, mask, power, P)
        r2 = achievable_rate(taps, mask, power, P.doubled())
        worst = max(worst, abs(r2 - r) / r2)
    ok = worst < 1e-3
    record_acceptance(4, ok, f"100 triples, max relative change on doubling {worst:.2e} (< 1e-3)")
    assert ok


def test_c5_uniform_placement_null_secrecy(record_acceptance):
    _, summary = run_experiment(ScenarioConfig(trials=300, power_sweep=(3.0,)))
    row = summary.rows[0]
    ok = abs(row.cs_los) < 2 * row.cs_los_se
    record_acceptance(5, ok, f"mean C_s_los {row.cs_los / 1e6:.1f} Mbit/s, "
                             f"2 SE = {2 * row.cs_los_se / 1e6:.1f} Mbit/s")
    assert ok


@pytest.fixture(scope="module")
def zoned():
    cfg = ScenarioConfig(placement=Placement.EVE_INNER_BOB_OUTER, trials=300, power_sweep=ZONED_POWERS)
    records, summary = run_experiment(cfg, threads=None)
    return records, summary


def test_c6_zoned_sign_pattern(zoned, record_acceptance):
    records, summary = zoned
    # trial seeds depend only on (master seed, trial index), so the first 50
    # records are exactly what a 50-trial run produces
    quick = summarize(records[:50], ZONED_POWERS)
    checks = []
    for s in (summary, quick):
        checks.append(all(r.cs_los < 0 for r in s.rows) and s.at(3.0).cs_opt > 0)
    at3 = summary.at(3.0)
    magnitude = 1e8 <= abs(at3.cs_los) <= 1e10
    ok = all(checks) and magnitude
    los = ", ".join(f"{r.cs_los / 1e6:.0f}" for r in summary.rows)
    record_acceptance(6, ok, f"mean C_s_los over 1..7 W [{los}] Mbit/s; at 3 W C_s_opt "
                             f"{at3.cs_opt / 1e6:.1f} (300 trials), {quick.at(3.0).cs_opt / 1e6:.1f} (50 trials)")
    assert ok


def test_c7_directional_improvement(zoned, record_acceptance):
    _, summary = zoned
    r = summary.at(7.0)
    ok = r.rb_opt > r.rb_los and r.re_opt < r.re_los
    record_acceptance(7, ok, f"at 7 W: R_B {r.rb_los / 1e6:.1f} -> {r.rb_opt / 1e6:.1f} Mbit/s "
                             f"({r.rb_change_percent:+.2f}%), R_E {r.re_los / 1e6:.1f} -> "
                             f"{r.re_opt / 1e6:.1f} Mbit/s ({r.re_change_percent:+.3f}%)")
    assert ok


def test_c8_determinism_across_threads(tmp_path, capsys, record_acceptance):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["experiment", "--trials", "6", "--seed", "8", "--powers", "1,3,7",
                 "--threads", "1", "--out", str(a)]) == 0
    assert main(["experiment", "--scenario", str(a / "manifest.json"), "--threads", "3",
                 "--out", str(b)]) == 0
    same = [(a / n).read_bytes() == (b / n).read_bytes() for n in ("trials.csv", "summary.csv")]
    ok = all(same)
    record_acceptance(8, ok, "trials.csv and summary.csv byte-identical with 1 and 3 workers, "
                             "second run driven only by the first run's manifest")
    assert ok


def test_c9_invariant_suite(record_acceptance):
    results = run_validation(quick=False)
    failed = [r.name for r in results if not r.passed]
    modules = sorted({r.module for r in results})
    ok = not failed and len(results) >= 25
    record_acceptance(9, ok, f"{len(results) - len(failed)}/{len(results)} checks pass across "
                             f"{', '.join(modules)}" + (f"; failed: {failed}" if failed else ""))
    assert ok, failed
