"""JSON configuration: defaults, validation, round-tripping and run manifests.

Units at this boundary: meters, degrees, watts, seconds.  Every omitted
field falls back to the default below.
"""

from __future__ import annotations

import copy
import json
import math
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from . import __version__
from .experiments import ScenarioConfig
from .geometry import Emitter, IrsPanel, Photodetector, Room, Scene
from .optimizer import GaConfig
from .rate import SystemParams

DEFAULTS = {
    "room": {"width": 5.0, "depth": 5.0, "height": 3.0},
    "led": {
        "position": [2.5, 2.5, 3.0],
        "normal": [0.0, 0.0, -1.0],
        "half_power_semiangle_deg": 60.0,
        "optical_power_w": 3.0,
    },
    "photodetector": {
        "area_m2": 1e-4,
        "responsivity": 0.6,
        "fov_deg": 90.0,
        "refractive_index": 1.5,
        "filter_gain": 1.0,
        "normal": [0.0, 0.0, 1.0],
    },
    "irs": {
        "wall": "y0",
        "nx": 12,
        "ny": 12,
        "spacing_m": [0.3, 0.3],
        "reflectivity": 1.0,
        "center": [2.5, 0.0, 1.5],
    },
    # receivers on the floor plane; see README ("Receiver plane")
    "receiver_height_m": 0.0,
    "zone_radius_m": 1.0,
    "system": {
        "symbol_period_s": 1e-9,
        "noise_psd": 1e-21,
        "gap_db": 2.0,
        "mod_scaling": 3.2,
        "integration_samples": 4097,
        "convergence_tol": 1e-3,
    },
    "ga": {
        "population_size": 50,
        "generations": 30,
        "crossover_prob": 0.8,
        "mutation_prob": None,
        "tournament_size": 3,
        "elite_count": 2,
        "seed": 0,
    },
    "users": {"bob": [1.25, 0.75], "eve": [2.9, 2.8]},
    "experiment": {
        "placement": "both_uniform",
        "trials": 300,
        "power_sweep_w": [0.5, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0],
        "optimizer": "ga",
        "master_seed": 2024,
    },
}

_INT_FIELDS = {"nx", "ny", "integration_samples", "population_size", "generations",
               "tournament_size", "elite_count", "seed", "trials", "master_seed"}
_NULLABLE = {"mutation_prob"}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class AppConfig:
    scene: Scene = field(default_factory=Scene)
    params: SystemParams = field(default_factory=SystemParams)
    ga: GaConfig = field(default_factory=GaConfig)
    users: dict = field(default_factory=lambda: {"bob": (1.25, 0.75), "eve": (2.9, 2.8)})
    scenario: ScenarioConfig = field(default_factory=ScenarioConfig)

    @property
    def led_power(self) -> float:
        return self.scene.led.optical_power


def _check_leaf(value, default, path: str, key: str):
    if key in _NULLABLE and value is None:
        return None
    if isinstance(default, bool) or isinstance(value, bool):
        raise ConfigError(f"{path}: booleans are not accepted here")
    if isinstance(default, str):
        if not isinstance(value, str):
            raise ConfigError(f"{path}: expected a string, got {value!r}")
        return value
    if isinstance(default, list):
        if not isinstance(value, list) or not value:
            raise ConfigError(f"{path}: expected a non-empty list, got {value!r}")
        if len(default) in (2, 3) and key != "power_sweep_w" and len(value) != len(default):
            raise ConfigError(f"{path}: expected {len(default)} numbers, got {len(value)}")
        return [_check_leaf(v, 0.0, f"{path}[{i}]", "") for i, v in enumerate(value)]
    if key in _INT_FIELDS:
        if not isinstance(value, int) or isinstance(value, bool):
            if not (isinstance(value, float) and value.is_integer()):
                raise ConfigError(f"{path}: expected an integer, got {value!r}")
        return int(value)
    if not isinstance(value, (int, float)) or not math.isfinite(value):
        raise ConfigError(f"{path}: expected a finite number, got {value!r}")
    return float(value)


def _merge(defaults: dict, given: dict, path: str = "") -> dict:
    if not isinstance(given, dict):
        raise ConfigError(f"{path or '<root>'}: expected an object, got {type(given).__name__}")
    unknown = set(given) - set(defaults)
    if unknown:
        raise ConfigError(f"{path + '.' if path else ''}{sorted(unknown)[0]}: unknown field")
    out = {}
    for key, dv in defaults.items():
        p = f"{path}.{key}" if path else key
        if key not in given:
            out[key] = copy.deepcopy(dv)
        elif isinstance(dv, dict) and key != "users":
            out[key] = _merge(dv, given[key], p)
        elif key == "users":
            out[key] = _merge({"bob": dv["bob"], "eve": dv["eve"]}, given[key], p)
        else:
            out[key] = _check_leaf(given[key], dv, p, key)
    return out


def _build(section: str, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except ConfigError:
        raise
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"{section}: {exc}") from exc


def from_dict(raw: dict) -> AppConfig:
    d = _merge(DEFAULTS, raw)
    room = _build("room", Room, **d["room"])
    lc = d["led"]
    led = _build("led", Emitter, lc["position"], lc["normal"], lc["half_power_semiangle_deg"],
                 lc["optical_power_w"])
    pc = d["photodetector"]
    pd = _build("photodetector", Photodetector, pc["area_m2"], pc["responsivity"], pc["fov_deg"],
                pc["refractive_index"], pc["filter_gain"], pc["normal"])
    ic = d["irs"]
    panel = _build("irs", IrsPanel, ic["wall"], (ic["nx"], ic["ny"]), tuple(ic["spacing_m"]),
                   ic["reflectivity"], ic["center"])
    scene = _build("scene", Scene, room, led, pd, panel, d["receiver_height_m"], d["zone_radius_m"])
    _build("irs", scene.element_positions)
    sc = d["system"]
    params = _build("system", SystemParams, sc["symbol_period_s"], sc["noise_psd"], sc["gap_db"],
                    sc["mod_scaling"], 1.0, sc["integration_samples"], sc["convergence_tol"])
    gc = d["ga"]
    ga = _build("ga", GaConfig, gc["population_size"], gc["generations"], gc["crossover_prob"],
                gc["mutation_prob"], gc["tournament_size"], gc["elite_count"], gc["seed"])
    users = {}
    for role in ("bob", "eve"):
        xy = d["users"][role]
        _build(f"users.{role}", scene.user, role, *xy)
        users[role] = tuple(xy)
    ec = d["experiment"]
    scenario = _build("experiment", ScenarioConfig, scene, params, ga, ec["placement"], ec["trials"],
                      tuple(ec["power_sweep_w"]), ec["optimizer"], ec["master_seed"])
    return AppConfig(scene, params, ga, users, scenario)


def to_dict(cfg: AppConfig) -> dict:
    s = cfg.scene
    panel = s.panel or IrsPanel(counts=(0, 0))
    ga = cfg.ga
    sc = cfg.scenario
    return {
        "room": {"width": s.room.width, "depth": s.room.depth, "height": s.room.height},
        "led": {"position": list(s.led.position), "normal": list(s.led.normal),
                "half_power_semiangle_deg": s.led.half_power_semiangle,
                "optical_power_w": s.led.optical_power},
        "photodetector": {"area_m2": s.pd.area, "responsivity": s.pd.responsivity,
                          "fov_deg": s.pd.fov, "refractive_index": s.pd.refractive_index,
                          "filter_gain": s.pd.filter_gain, "normal": list(s.pd.normal)},
        "irs": {"wall": panel.wall.value, "nx": panel.counts[0], "ny": panel.counts[1],
                "spacing_m": list(panel.spacing), "reflectivity": panel.reflectivity,
                "center": list(panel.center)},
        "receiver_height_m": s.receiver_height,
        "zone_radius_m": s.zone_radius,
        "system": {"symbol_period_s": cfg.params.symbol_period, "noise_psd": cfg.params.noise_psd,
                   "gap_db": cfg.params.gap_db, "mod_scaling": cfg.params.mod_scaling,
                   "integration_samples": cfg.params.integration_samples,
                   "convergence_tol": cfg.params.convergence_tol},
        "ga": {"population_size": ga.population_size, "generations": ga.generations,
               "crossover_prob": ga.crossover_prob, "mutation_prob": ga.mutation_prob,
               "tournament_size": ga.tournament_size, "elite_count": ga.elite_count,
               "seed": ga.rng_seed},
        "users": {k: list(v) for k, v in cfg.users.items()},
        "experiment": {"placement": sc.placement.value, "trials": sc.trials,
                       "power_sweep_w": list(sc.power_sweep), "optimizer": sc.optimizer,
                       "master_seed": sc.master_seed},
    }


def scenario_to_dict(sc: ScenarioConfig) -> dict:
    return to_dict(AppConfig(sc.scene, sc.params, sc.ga, scenario=sc))


def apply_overrides(raw: dict, overrides) -> dict:
    """Apply ``dotted.key=value`` overrides; the value is parsed as JSON when possible."""
    raw = copy.deepcopy(raw)
    for item in overrides or ():
        key, sep, text = item.partition("=")
        if not sep:
            raise ConfigError(f"override {item!r} is not of the form key=value")
        try:
            value = json.loads(text)
        except json.JSONDecodeError:
            value = text
        node = raw
        parts = key.strip().split(".")
        for p in parts[:-1]:
            node = node.setdefault(p, {})
            if not isinstance(node, dict):
                raise ConfigError(f"{key}: cannot descend into a scalar")
        node[parts[-1]] = value
    return raw


def load_raw(path) -> dict:
    """Read a config file; a run manifest is accepted and its embedded config used."""
    if path is None:
        return {}
    p = Path(path)
    try:
        raw = json.loads(p.read_text())
    except FileNotFoundError:
        raise ConfigError(f"{p}: file not found") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{p}: malformed JSON ({exc})") from None
    if isinstance(raw, dict) and "manifest_version" in raw:
        raw = raw["config"]
    return raw


def parse_config(path=None, overrides=None) -> AppConfig:
    return from_dict(apply_overrides(load_raw(path), overrides))


def make_manifest(subcommand: str, config, **extra) -> dict:
    if isinstance(config, ScenarioConfig):
        cfg = scenario_to_dict(config)
        seed = config.master_seed
    else:
        cfg = to_dict(config)
        seed = config.scenario.master_seed
    m = {
        "manifest_version": 1,
        "tool": "irsvlc",
        "version": __version__,
        "subcommand": subcommand,
        "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        "master_seed": seed,
        "config": cfg,
        "assumptions": [
            "Eve is a passive eavesdropper whose position is known to the allocator.",
            "IRS elements are ideally steered toward the user they are allocated to.",
        ],
    }
    m.update(extra)
    return m
