import json

import pytest

from irsvlc.config import (DEFAULTS, ConfigError, apply_overrides, from_dict, load_raw, make_manifest,
                           parse_config, to_dict)
from irsvlc.geometry import Scene
from irsvlc.optimizer import GaConfig
from irsvlc.rate import SystemParams


def test_empty_object_gives_default_scene():
    cfg = from_dict({})
    assert cfg.scene == Scene()
    assert cfg.params == SystemParams()
    assert cfg.ga == GaConfig()
    s = cfg.scene
    assert (s.led.half_power_semiangle, s.pd.responsivity, s.pd.area, s.pd.fov) == (60, 0.6, 1e-4, 90)
    assert (s.pd.refractive_index, s.panel.reflectivity, s.panel.counts, s.panel.spacing) == \
        (1.5, 1.0, (12, 12), (0.3, 0.3))
    p = cfg.params
    assert (p.symbol_period, p.noise_psd, p.mod_scaling, p.gap_db) == (1e-9, 1e-21, 3.2, 2.0)
    g = cfg.ga
    assert (g.population_size, g.generations, g.crossover_prob) == (50, 30, 0.8)
    assert g.mutation_rate(144) == pytest.approx(1 / 144)


def test_domain_violations_rejected_with_path():
    with pytest.raises(ConfigError, match="led"):
        from_dict({"led": {"half_power_semiangle_deg": 120}})
    with pytest.raises(ConfigError, match="photodetector"):
        from_dict({"photodetector": {"fov_deg": 95}})
    with pytest.raises(ConfigError, match="irs.nx"):
        from_dict({"irs": {"nx": "twelve"}})
    with pytest.raises(ConfigError, match="room.colour"):
        from_dict({"room": {"colour": "white"}})
    with pytest.raises(ConfigError, match="led.position"):
        from_dict({"led": {"position": [1, 2]}})
    with pytest.raises(ConfigError, match="irs"):
        from_dict({"irs": {"nx": 30}})


def test_round_trip_is_identity():
    raw = {"irs": {"nx": 3, "ny": 5, "wall": "x_max", "center": [5, 2.5, 1.5]},
           "ga": {"seed": 9, "mutation_prob": 0.05}, "experiment": {"trials": 7}}
    once = from_dict(raw)
    twice = from_dict(json.loads(json.dumps(to_dict(once))))
    assert to_dict(twice) == to_dict(once)
    assert twice.scene == once.scene and twice.ga == once.ga and twice.scenario == once.scenario
    assert set(to_dict(once)) == set(DEFAULTS)


def test_overrides():
    raw = apply_overrides({}, ["system.gap_db=3", "users.bob=[1,2]", "experiment.placement=eve_inner_bob_outer"])
    cfg = from_dict(raw)
    assert cfg.params.gap_db == 3.0
    assert cfg.users["bob"] == (1, 2)
    assert cfg.scenario.placement.value == "eve_inner_bob_outer"
    with pytest.raises(ConfigError):
        apply_overrides({}, ["novalue"])


def test_load_raw_and_manifest(tmp_path):
    assert load_raw(None) == {}
    with pytest.raises(ConfigError, match="not found"):
        load_raw(tmp_path / "missing.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{nope")
    with pytest.raises(ConfigError, match="malformed"):
        load_raw(bad)
    cfg = parse_config(overrides=["experiment.master_seed=77"])
    m = make_manifest("rate", cfg)
    assert m["master_seed"] == 77 and m["subcommand"] == "rate"
    path = tmp_path / "manifest.json"
    path.write_text(json.dumps(m))
    assert to_dict(parse_config(path)) == to_dict(cfg)
