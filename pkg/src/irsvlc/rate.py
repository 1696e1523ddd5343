"""SNR spectrum, frequency-integrated DCO-OFDM rate and secrecy capacity."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import ChannelTaps, cfr

# masks per evaluation block; small blocks keep the work buffers cache-friendly
_BLOCK_ROWS = 64


class QuadratureError(RuntimeError):
    pass


@dataclass(frozen=True)
class SystemParams:
    symbol_period: float = 1e-9
    noise_psd: float = 1e-21
    gap_db: float = 2.0
    mod_scaling: float = 3.2
    power_allocation: float = 1.0
    integration_samples: int = 4097
    convergence_tol: float = 1e-3

    def __post_init__(self):
        if self.symbol_period <= 0:
            raise ValueError(f"symbol period must be > 0, got {self.symbol_period}")
        if self.noise_psd <= 0:
            raise ValueError(f"noise PSD must be > 0, got {self.noise_psd}")
        if self.mod_scaling <= 0:
            raise ValueError(f"modulation scaling factor must be > 0, got {self.mod_scaling}")
        if self.power_allocation != 1.0:
            raise ValueError("only uniform power allocation E(f) = 1 is supported")
        n = self.integration_samples
        if int(n) != n or n < 65 or n % 2 == 0:
            raise ValueError(f"integration_samples must be an odd integer >= 65, got {n}")
        if self.convergence_tol <= 0:
            raise ValueError("convergence tolerance must be > 0")

    @property
    def gap_linear(self) -> float:
        return 10 ** (self.gap_db / 10)

    @property
    def bandwidth(self) -> float:
        """Upper integration limit 1/(2 T_s) in Hz."""
        return 1 / (2 * self.symbol_period)

    def frequency_grid(self, n: int | None = None) -> np.ndarray:
        return np.linspace(0.0, self.bandwidth, n or self.integration_samples)

    def doubled(self) -> "SystemParams":
        """Same parameters with the quadrature interval count doubled."""
        from dataclasses import replace
        return replace(self, integration_samples=2 * self.integration_samples - 1)


def simpson_weights(n: int, upper: float) -> np.ndarray:
    """Composite Simpson weights for n (odd) equispaced nodes on [0, upper]."""
    if n % 2 == 0 or n < 3:
        raise ValueError("Simpson's rule needs an odd number of nodes >= 3")
    h = upper / (n - 1)
    w = np.full(n, 2.0)
    w[1::2] = 4.0
    w[0] = w[-1] = 1.0
    return w * h / 3


def snr_scale(led_power: float, responsivity: float, params: SystemParams) -> float:
    """gamma(f) / |Q(f)|^2."""
    return (2 * params.symbol_period * params.power_allocation * led_power**2 * responsivity**2
            / (params.gap_linear * params.mod_scaling**2 * params.noise_psd))


def snr_at(f, taps: ChannelTaps, mask, led_power: float, params: SystemParams):
    q = cfr(taps, f, mask)
    return snr_scale(led_power, taps.responsivity, params) * np.abs(q) ** 2


class RateEvaluator:
    """Achievable rate of one user for many allocation masks at once.

    The per-element phasors over the quadrature grid are precomputed, so a
    batch of masks costs one real matmul per quadrature component.
    """

    def __init__(self, taps: ChannelTaps, params: SystemParams, n_points: int | None = None):
        self.taps = taps
        self.params = params
        n = n_points or params.integration_samples
        self.freqs = params.frequency_grid(n)
        self.weights = simpson_weights(n, params.bandwidth)
        phase = -2 * np.pi * self.freqs
        self.los_re = taps.los_gain * np.cos(phase * taps.los_delay)
        self.los_im = taps.los_gain * np.sin(phase * taps.los_delay)
        arg = np.outer(taps.nlos_delays, phase)
        self.nlos_re = taps.nlos_gains[:, None] * np.cos(arg)
        self.nlos_im = taps.nlos_gains[:, None] * np.sin(arg)

    @property
    def n_elements(self) -> int:
        return self.taps.n_elements

    def power_gain(self, masks: np.ndarray, out: np.ndarray | None = None,
                   work: np.ndarray | None = None) -> np.ndarray:
        """|Q(f)|^2 on the grid for each row of ``masks``."""
        masks = np.asarray(masks, dtype=float)
        shape = (masks.shape[0], self.freqs.size)
        re = np.empty(shape) if out is None else out
        im = np.empty(shape) if work is None else work
        np.matmul(masks, self.nlos_re, out=re)
        re += self.los_re
        np.multiply(re, re, out=re)
        np.matmul(masks, self.nlos_im, out=im)
        im += self.los_im
        np.multiply(im, im, out=im)
        re += im
        return re

    def rates(self, masks, led_power: float) -> np.ndarray:
        """Rate in bit/s for each row of ``masks`` (shape (B, N))."""
        masks = np.atleast_2d(np.asarray(masks, dtype=float))
        if masks.shape[1] != self.n_elements:
            raise ValueError(f"mask length {masks.shape[1]} != number of IRS elements {self.n_elements}")
        scale = snr_scale(led_power, self.taps.responsivity, self.params)
        out = np.empty(masks.shape[0])
        block = min(masks.shape[0], _BLOCK_ROWS)
        buf = np.empty((block, self.freqs.size))
        work = np.empty_like(buf)
        for i in range(0, masks.shape[0], block):
            chunk = masks[i:i + block]
            k = chunk.shape[0]
            p = self.power_gain(chunk, buf[:k], work[:k])
            p *= scale
            np.log1p(p, out=p)
            out[i:i + k] = p @ self.weights
        return out / np.log(2)

    def rate(self, mask, led_power: float) -> float:
        if mask is None:
            mask = np.ones(self.n_elements)
        return float(self.rates(np.asarray(mask, dtype=float)[None, :], led_power)[0])


def achievable_rate(taps: ChannelTaps, mask, led_power: float, params: SystemParams,
                    check_convergence: bool = False) -> float:
    """Integral of log2(1 + gamma(f)) over [0, 1/(2 T_s)], in bit/s.

    ``mask=None`` keeps every reflected tap.  With ``check_convergence`` the
    rate is recomputed on a grid with twice as many intervals and a
    QuadratureError is raised if the two disagree by more than
    ``params.convergence_tol`` (relative).
    """
    r = RateEvaluator(taps, params).rate(mask, led_power)
    if check_convergence:
        r2 = RateEvaluator(taps, params.doubled()).rate(mask, led_power)
        if abs(r2 - r) > params.convergence_tol * max(abs(r2), 1e-300):
            raise QuadratureError(
                f"rate changed from {r:.6g} to {r2:.6g} bit/s when the grid was refined")
    return r


def rate_spectrum(taps: ChannelTaps, mask, led_power: float, params: SystemParams):
    """(frequencies, SNR) on the quadrature grid."""
    f = params.frequency_grid()
    return f, snr_at(f, taps, mask, led_power, params)


@dataclass(frozen=True)
class RatePair:
    rate_bob: float
    rate_eve: float

    def __post_init__(self):
        if self.rate_bob < 0 or self.rate_eve < 0:
            raise ValueError("rates must be non-negative")

    @property
    def secrecy(self) -> float:
        return self.rate_bob - self.rate_eve


def check_allocation(s, n: int) -> np.ndarray:
    s = np.asarray(s)
    if s.shape != (n,):
        raise ValueError(f"allocation must have length {n}, got shape {s.shape}")
    if not np.all((s == 0) | (s == 1)):
        raise ValueError("allocation entries must be 0 or 1")
    return s.astype(np.uint8)


def secrecy_capacity(taps_bob: ChannelTaps, taps_eve: ChannelTaps, s, led_power: float,
                     params: SystemParams) -> RatePair:
    """Bob gets the elements with s_n = 1, Eve those with s_n = 0."""
    if taps_bob.n_elements != taps_eve.n_elements:
        raise ValueError("Bob's and Eve's taps come from different panels")
    s = check_allocation(s, taps_bob.n_elements)
    rb = RateEvaluator(taps_bob, params).rate(s, led_power)
    re = RateEvaluator(taps_eve, params).rate(1 - s, led_power)
    return RatePair(rb, re)
