import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from irsvlc.channel import (SPEED_OF_LIGHT, ChannelTaps, build_channel_taps, cfr, concentrator_gain,
                            discretize_cir, dtft, lambertian_order, los_gain, nlos_gain, path_delays,
                            power_gain_two_path)
from irsvlc.geometry import Emitter, IrsPanel, Photodetector, Scene, UserTerminal

LED = Emitter()
DESK = UserTerminal("bob", (2.5, 2.5, 0.85))
ELEMENT = np.array([2.5, 0.0, 1.5])


def test_lambertian_order():
    assert lambertian_order(60) == pytest.approx(1.0, rel=1e-15)
    assert lambertian_order(45) == pytest.approx(2.0, rel=1e-14)
    # ln 2 / -ln(cos 30 deg) evaluated independently
    assert lambertian_order(30) == pytest.approx(math.log(2) / -math.log(math.sqrt(3) / 2), rel=1e-14)
    assert lambertian_order(30) == pytest.approx(4.8188, abs=5e-5)


def test_concentrator_gain():
    assert concentrator_gain(0, 90, 1.5) == pytest.approx(2.25)
    assert concentrator_gain(91, 90, 1.5) == 0.0
    assert concentrator_gain(30, 60, 1.5) == pytest.approx(3.0)


def test_los_gain_directly_below():
    # (m+1) A / (2 pi d^2) * G_c with m = 1, d = 2.15, G_c = 2.25, both cosines 1
    expected = 2 * 1e-4 / (2 * math.pi * 2.15**2) * 2.25
    assert los_gain(LED, DESK) == pytest.approx(expected, rel=1e-13)
    assert expected == pytest.approx(1.5494e-5, rel=1e-4)


def test_los_gain_inverse_square():
    near = UserTerminal("bob", (2.5, 2.5, 2.0))
    far = UserTerminal("bob", (2.5, 2.5, 1.0))
    assert los_gain(LED, far) == pytest.approx(los_gain(LED, near) / 4, rel=1e-13)


def test_los_gain_outside_fov_is_zero():
    narrow = UserTerminal("bob", (4.9, 4.9, 0.0), Photodetector(fov=30))
    assert los_gain(LED, narrow) == 0.0


def test_nlos_gain_worked_example():
    d1 = math.sqrt(2.5**2 + 1.5**2)
    d2 = math.sqrt(2.5**2 + 0.65**2)
    cos_emit, cos_incident = 1.5 / d1, 0.65 / d2
    expected = 2 * 1e-4 / (2 * math.pi * (d1 + d2) ** 2) * cos_emit * cos_incident * 2.25
    got = nlos_gain(LED, ELEMENT, (0, 1, 0), DESK, 1.0)
    assert got == pytest.approx(expected, rel=1e-13)
    assert cos_incident == pytest.approx(0.25163, abs=5e-6)
    assert d1 + d2 == pytest.approx(5.4986, abs=5e-5)
    assert got == pytest.approx(3.07e-7, rel=5e-3)


def test_nlos_zero_cases():
    assert nlos_gain(LED, ELEMENT, (0, 1, 0), DESK, 0.0) == 0.0
    low = UserTerminal("bob", (2.5, 2.5, 1.0))
    assert nlos_gain(LED, (2.5, 0.0, 0.5), (0, 1, 0), low, 1.0) == 0.0
    # element facing away from the room never reflects
    assert nlos_gain(LED, ELEMENT, (0, -1, 0), DESK, 1.0) == 0.0


def test_delays():
    los, nlos = path_delays(LED, np.array([[2.5, 0.0, 1.5]]), DESK)
    assert 2.997924580 / SPEED_OF_LIGHT == pytest.approx(1e-8, rel=1e-15)
    assert los == pytest.approx(7.1716e-9, rel=1e-4)
    assert nlos[0] == pytest.approx(18.341e-9, rel=1e-4)
    assert nlos[0] - los == pytest.approx(11.17e-9, rel=1e-3)


def test_taps_shape_and_empty_panel():
    taps = build_channel_taps(Scene(), Scene().user("bob", 1.0, 2.0))
    assert taps.nlos_gains.shape == taps.nlos_delays.shape == (144,)
    empty = Scene(panel=None)
    t0 = build_channel_taps(empty, empty.user("bob", 1.0, 2.0))
    assert t0.n_elements == 0
    assert cfr(t0, 1e8) == pytest.approx(t0.los_gain * np.exp(-2j * np.pi * 1e8 * t0.los_delay))


def test_taps_reject_bad_values():
    with pytest.raises(ValueError):
        ChannelTaps(-1.0, 1e-8, np.zeros(1), np.ones(1) * 2e-8)
    with pytest.raises(ValueError):
        ChannelTaps(1.0, 1e-8, np.zeros(1), np.ones(1) * 0.5e-8)
    with pytest.raises(ValueError):
        ChannelTaps(1.0, 1e-8, np.zeros(2), np.ones(1) * 2e-8)


def test_cfr_at_zero_frequency_is_total_gain():
    scene = Scene()
    taps = build_channel_taps(scene, scene.user("eve", 3.1, 1.4))
    mask = np.random.default_rng(0).integers(0, 2, 144)
    q0 = cfr(taps, 0.0, mask)
    assert q0.imag == 0
    assert q0.real == pytest.approx(taps.los_gain + taps.nlos_gains @ mask, rel=1e-14)


def test_cfr_destructive_and_worked_two_path():
    g1, g2, delay = 2e-5, 1e-5, 7e-9
    dt = 11.17e-9
    taps = ChannelTaps(g1, delay, np.array([g2]), np.array([delay + dt]))
    f_pi = 1 / (2 * dt)
    assert abs(cfr(taps, f_pi)) ** 2 == pytest.approx((g1 - g2) ** 2, rel=1e-10)
    c = math.cos(2 * math.pi * 0.1e9 * dt)
    assert c == pytest.approx(0.742, abs=5e-4)
    expected = g1**2 + g2**2 + 2 * g1 * g2 * c
    assert abs(cfr(taps, 1e8)) ** 2 == pytest.approx(expected, rel=1e-12)
    assert power_gain_two_path(g1, g2, dt, 1e8) == pytest.approx(expected, rel=1e-12)


def test_two_path_special_phases():
    assert power_gain_two_path(3.0, 2.0, 1e-9, 0.0) == 25.0
    assert power_gain_two_path(3.0, 2.0, 1e-9, 0.25e9) == pytest.approx(13.0, rel=1e-12)


@settings(max_examples=300, deadline=None)
@given(g1=st.floats(1e-7, 1e-4), g2=st.floats(1e-7, 1e-4), delay=st.floats(1e-9, 2e-8),
       dt=st.floats(0, 3e-8), f=st.floats(0, 5e8))
def test_two_path_matches_complex_form(g1, g2, delay, dt, f):
    taps = ChannelTaps(g1, delay, np.array([g2]), np.array([delay + dt]))
    assert abs(cfr(taps, f)) ** 2 == pytest.approx(power_gain_two_path(g1, g2, dt, f), rel=1e-12)


@settings(max_examples=30, deadline=None)
@given(x=st.floats(0.05, 4.95), y=st.floats(0.05, 4.95), seed=st.integers(0, 2**32 - 1))
def test_conjugate_symmetry_and_dc_bound(x, y, seed):
    scene = Scene()
    taps = build_channel_taps(scene, scene.user("bob", x, y))
    rng = np.random.default_rng(seed)
    mask = rng.integers(0, 2, 144)
    f = rng.uniform(0, 5e8, 64)
    q = cfr(taps, f, mask)
    np.testing.assert_allclose(cfr(taps, -f, mask), np.conj(q), rtol=1e-12, atol=0)
    assert np.all(np.abs(q) <= cfr(taps, 0.0, mask).real * (1 + 1e-12))


def test_cir_energy_and_fourier_consistency():
    scene = Scene()
    taps = build_channel_taps(scene, scene.user("bob", 0.7, 3.9))
    mask = np.ones(144)
    times, h = discretize_cir(taps, mask)
    assert times.size == 2**16
    assert h.sum() == pytest.approx(taps.los_gain + taps.nlos_gains.sum(), rel=1e-12)
    f = np.linspace(0, 5e8, 51)
    q = cfr(taps, f, mask)
    assert np.max(np.abs(dtft(times, h, f) - q)) / np.max(np.abs(q)) < 0.01
