"""Optional PNG figures rendered next to the CSV outputs.

Uses the object-oriented matplotlib API with the Agg canvas, so nothing
touches global pyplot state and no display is needed.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
from matplotlib.figure import Figure

STYLE = {"figsize": (6.0, 4.0), "dpi": 120}


def _save(fig: Figure, path) -> Path:
    path = Path(path)
    fig.tight_layout()
    fig.savefig(path)
    return path


def plot_cfr(freqs, power_gain, path, label: str = "") -> Path:
    fig = Figure(**STYLE)
    ax = fig.add_subplot()
    ax.plot(np.asarray(freqs) / 1e6, 10 * np.log10(np.maximum(power_gain, 1e-300)), lw=1)
    ax.set_xlabel("Frequency [MHz]")
    ax.set_ylabel(r"$|Q(f)|^2$ [dB]")
    ax.set_title(f"Channel frequency response {label}".strip())
    ax.grid(True, alpha=0.3)
    return _save(fig, path)


def plot_convergence(history, path, label: str = "GA") -> Path:
    fig = Figure(**STYLE)
    ax = fig.add_subplot()
    ax.plot(np.arange(len(history)), np.asarray(history) / 1e6, marker="o", ms=3, label=label)
    ax.set_xlabel("Generation")
    ax.set_ylabel("Best secrecy capacity [Mbit/s]")
    ax.grid(True, alpha=0.3)
    ax.legend()
    return _save(fig, path)


def plot_experiment(summary, out_dir) -> list[Path]:
    out_dir = Path(out_dir)
    p = np.array([r.power for r in summary.rows])
    col = lambda a: np.array([getattr(r, a) for r in summary.rows]) / 1e6  # noqa: E731

    fig = Figure(**STYLE)
    ax = fig.add_subplot()
    ax.plot(p, col("rb_los"), "b--o", label="Bob, LoS only")
    ax.plot(p, col("rb_opt"), "b-o", label="Bob, with IRS")
    ax.plot(p, col("re_los"), "r--s", label="Eve, LoS only")
    ax.plot(p, col("re_opt"), "r-s", label="Eve, with IRS")
    ax.set_xlabel("LED optical power [W]")
    ax.set_ylabel("Average rate [Mbit/s]")
    ax.grid(True, alpha=0.3)
    ax.legend()
    rates = _save(fig, out_dir / "rates.png")

    fig = Figure(**STYLE)
    ax = fig.add_subplot()
    ax.errorbar(p, col("cs_los"), yerr=col("cs_los_se"), fmt="k--o", capsize=3, label="LoS only")
    ax.errorbar(p, col("cs_opt"), yerr=col("cs_opt_se"), fmt="g-o", capsize=3, label="with IRS")
    ax.axhline(0, color="0.5", lw=0.8)
    ax.set_xlabel("LED optical power [W]")
    ax.set_ylabel("Average secrecy capacity [Mbit/s]")
    ax.grid(True, alpha=0.3)
    ax.legend()
    secrecy = _save(fig, out_dir / "secrecy.png")
    return [rates, secrecy]
