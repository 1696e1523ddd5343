"""LoS and IRS-reflected optical path gains, delays, CIR taps and the CFR."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.constants import speed_of_light as SPEED_OF_LIGHT  # exact SI value

from .geometry import DegenerateGeometryError, Emitter, Photodetector, Scene, UserTerminal


def lambertian_order(half_power_semiangle: float) -> float:
    """Lambertian mode number of an LED with the given half-power semi-angle (degrees)."""
    if not 0 < half_power_semiangle < 90:
        raise ValueError(f"half-power semi-angle must lie in (0, 90) degrees, got {half_power_semiangle}")
    return -1.0 / math.log2(math.cos(math.radians(half_power_semiangle)))


def concentrator_gain(incidence: float, fov: float, refractive_index: float) -> float:
    if refractive_index < 1:
        raise ValueError(f"refractive index must be >= 1, got {refractive_index}")
    if 0 <= incidence <= fov:
        return refractive_index**2 / math.sin(math.radians(fov)) ** 2
    return 0.0


def _receiver_factor(cos_incident: np.ndarray, pd: Photodetector) -> np.ndarray:
    """cos(incidence) * G_f * G_c with the FoV cutoff applied; cosines already clamped at 0."""
    incidence = np.degrees(np.arccos(np.clip(cos_incident, 0.0, 1.0)))
    gc = pd.refractive_index**2 / math.sin(math.radians(pd.fov)) ** 2
    return np.where(incidence <= pd.fov, cos_incident * pd.filter_gain * gc, 0.0)


def los_gain(led: Emitter, user: UserTerminal) -> float:
    tx = led.position.array()
    rx = user.position.array()
    v = rx - tx
    d = float(np.linalg.norm(v))
    if d == 0:
        raise DegenerateGeometryError("user coincides with the LED")
    m = lambertian_order(led.half_power_semiangle)
    cos_emit = max(0.0, float(v @ led.normal.array()) / d)
    cos_incident = max(0.0, float(-v @ user.pd.normal.array()) / d)
    rf = float(_receiver_factor(np.array(cos_incident), user.pd))
    return (m + 1) * user.pd.area / (2 * math.pi * d**2) * cos_emit**m * rf


def nlos_gains(led: Emitter, element_positions: np.ndarray, element_normal, user: UserTerminal,
               reflectivity: float) -> np.ndarray:
    """Specular LED -> element -> user gain for every element (vectorised).

    Each element is assumed steered toward ``user``; the element normal only
    decides visibility (LED and user must both be in front of the element).
    """
    pos = np.asarray(element_positions, dtype=float).reshape(-1, 3)
    if pos.shape[0] == 0:
        return np.zeros(0)
    if not 0 <= reflectivity <= 1:
        raise ValueError(f"reflectivity must lie in [0, 1], got {reflectivity}")
    tx = led.position.array()
    rx = user.position.array()
    v1 = pos - tx
    v2 = rx - pos
    d1 = np.linalg.norm(v1, axis=1)
    d2 = np.linalg.norm(v2, axis=1)
    if np.any(d1 == 0) or np.any(d2 == 0):
        raise DegenerateGeometryError("IRS element coincides with the LED or the user")
    m = lambertian_order(led.half_power_semiangle)
    cos_emit = np.maximum(0.0, v1 @ led.normal.array() / d1)
    cos_incident = np.maximum(0.0, -(v2 @ user.pd.normal.array()) / d2)
    nrm = np.asarray(element_normal, dtype=float)
    facing = ((-v1) @ nrm > 0) & (v2 @ nrm > 0)
    g = reflectivity * (m + 1) * user.pd.area / (2 * math.pi * (d1 + d2) ** 2)
    g = g * cos_emit**m * _receiver_factor(cos_incident, user.pd)
    return np.where(facing, g, 0.0)


def nlos_gain(led: Emitter, element_position, element_normal, user: UserTerminal,
              reflectivity: float) -> float:
    return float(nlos_gains(led, np.asarray(element_position, dtype=float)[None, :],
                            element_normal, user, reflectivity)[0])


def path_delays(led: Emitter, element_positions: np.ndarray, user: UserTerminal):
    """Propagation delays (seconds) of the direct path and of every reflected path."""
    tx = led.position.array()
    rx = user.position.array()
    pos = np.asarray(element_positions, dtype=float).reshape(-1, 3)
    los = float(np.linalg.norm(rx - tx)) / SPEED_OF_LIGHT
    nlos = (np.linalg.norm(pos - tx, axis=1) + np.linalg.norm(rx - pos, axis=1)) / SPEED_OF_LIGHT
    return los, nlos


@dataclass(frozen=True, eq=False)
class ChannelTaps:
    """Exact tap list of one user's impulse response.

    ``responsivity`` is carried along because every downstream SNR needs the
    receiving PD's responsivity and nothing else from the PD.
    """

    los_gain: float
    los_delay: float
    nlos_gains: np.ndarray
    nlos_delays: np.ndarray
    responsivity: float = 0.6

    def __post_init__(self):
        g = np.asarray(self.nlos_gains, dtype=float).reshape(-1)
        t = np.asarray(self.nlos_delays, dtype=float).reshape(-1)
        if g.shape != t.shape:
            raise ValueError("nlos gains and delays differ in length")
        if self.los_gain < 0 or np.any(g < 0):
            raise ValueError("channel gains must be non-negative")
        if self.los_delay <= 0 or np.any(t <= 0):
            raise ValueError("delays must be positive")
        # reflected paths can never beat the direct one (triangle inequality)
        if np.any(t < self.los_delay * (1 - 1e-12)):
            raise ValueError("a reflected path is shorter than the direct path")
        g.flags.writeable = False
        t.flags.writeable = False
        object.__setattr__(self, "nlos_gains", g)
        object.__setattr__(self, "nlos_delays", t)

    @property
    def n_elements(self) -> int:
        return self.nlos_gains.size

    def masked_gains(self, mask=None) -> np.ndarray:
        if mask is None:
            return self.nlos_gains
        mask = np.asarray(mask, dtype=float).reshape(-1)
        if mask.size != self.n_elements:
            raise ValueError(f"mask length {mask.size} != number of IRS elements {self.n_elements}")
        return self.nlos_gains * mask


def build_channel_taps(scene: Scene, user: UserTerminal) -> ChannelTaps:
    pos = scene.element_positions()
    if pos.shape[0]:
        gains = nlos_gains(scene.led, pos, scene.panel.normal, user, scene.panel.reflectivity)
    else:
        gains = np.zeros(0)
    los_d, nlos_d = path_delays(scene.led, pos, user)
    return ChannelTaps(los_gain(scene.led, user), los_d, gains, nlos_d, user.pd.responsivity)


def cfr(taps: ChannelTaps, f, mask=None):
    """Complex frequency response at ``f`` (scalar or array, Hz).

    ``mask`` weights the reflected taps (1 keeps, 0 drops); ``None`` keeps all.
    """
    f_arr = np.asarray(f, dtype=float)
    g = taps.masked_gains(mask)
    ph = -2j * np.pi * f_arr[..., None]
    q = taps.los_gain * np.exp(ph[..., 0] * taps.los_delay)
    if g.size:
        q = q + np.exp(ph * taps.nlos_delays) @ g
    return q[()] if q.ndim == 0 else q


def power_gain_two_path(g_los: float, g_nlos: float, delta_tau: float, f):
    """|Q(f)|^2 of a direct path plus one delayed copy, written out in real arithmetic."""
    return g_los**2 + g_nlos**2 + 2 * g_los * g_nlos * np.cos(2 * np.pi * np.asarray(f) * delta_tau)


def discretize_cir(taps: ChannelTaps, mask=None, n_bins: int = 2**16, t_max: float = 100e-9):
    """Accumulate every tap into the nearest bin of a uniform time grid over [0, t_max].

    Returns (bin times, bin weights).  Used only to cross-check ``cfr``.
    """
    dt = t_max / (n_bins - 1)
    h = np.zeros(n_bins)
    delays = np.concatenate(([taps.los_delay], taps.nlos_delays))
    gains = np.concatenate(([taps.los_gain], taps.masked_gains(mask)))
    if np.any(delays > t_max):
        raise ValueError("tap delay beyond the discretisation window")
    np.add.at(h, np.rint(delays / dt).astype(int), gains)
    return np.arange(n_bins) * dt, h


def dtft(times: np.ndarray, weights: np.ndarray, f):
    """Fourier sum of sampled impulses, evaluated directly at the frequencies ``f``."""
    nz = np.nonzero(weights)[0]
    f = np.atleast_1d(np.asarray(f, dtype=float))
    return np.exp(-2j * np.pi * np.outer(f, times[nz])) @ weights[nz]
