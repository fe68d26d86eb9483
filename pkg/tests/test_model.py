import dataclasses
import json

import numpy as np
import pytest

from conftest import one_bus_net, three_bus_net
from sdekit.demo import demo_config, demo_network
from sdekit.model import (Bus, ConfigError, Generator, Network, Scenario, StorageSystem,
                          TransmissionLine, apply_scenario, flex_category, network_from_dict,
                          network_to_dict, read_config, validate_network)


def test_demo_network_is_valid():
    net = demo_network()
    assert validate_network(net) == []
    assert len(net.buses) == 3
    assert {b.country for b in net.buses} == {"NO", "CE"}


def test_scenario_defaults_match_method_constants():
    s = Scenario()
    assert s.sde_threshold_C == 1e11
    assert s.sde_window_T == 336
    assert s.load_shedding_cost == 1e5
    assert s.co2_reduction == 1.0


def test_flex_categories():
    net = one_bus_net()
    cats = {a.id: flex_category(a) for a in (*net.generators, *net.storage_systems)}
    assert cats["bat"] == "daily-balancing"
    assert cats["h2"] == "resilience-backup"
    assert cats["legacy"] == "existing-dispatch"
    assert flex_category(StorageSystem("ph", "a", "pumped-hydro")) == "existing-dispatch"


def test_unknown_bus_reported_by_id():
    net = Network([Bus("a", "X")], [Generator("g", "zz", "renewable")])
    problems = validate_network(net)
    assert any("'g'" in p and "'zz'" in p for p in problems)


def test_duplicate_ids():
    net = Network([Bus("a", "X"), Bus("a", "X")],
                  [Generator("g", "a", "renewable"), Generator("g", "a", "renewable")])
    problems = validate_network(net)
    assert any("bus 'a': duplicate" in p for p in problems)
    assert any("asset 'g': duplicate" in p for p in problems)


@pytest.mark.parametrize("eta", [0.0, -0.1, 1.2])
def test_efficiency_bounds(eta):
    net = Network([Bus("a", "X")], storage_systems=[StorageSystem("s", "a", "battery", eta_charge=eta)])
    assert any("eta_charge" in p for p in validate_network(net))


def test_efficiency_of_one_is_fine():
    net = Network([Bus("a", "X")], storage_systems=[StorageSystem("s", "a", "battery", eta_charge=1.0)])
    assert validate_network(net) == []


def test_line_rules():
    net = Network([Bus("a", "X"), Bus("b", "X")],
                  lines=[TransmissionLine("l", "a", "a", -1, 0)])
    problems = validate_network(net)
    assert any("bus0 and bus1 must differ" in p for p in problems)
    assert any("p_nom_existing" in p for p in problems)
    assert any("length" in p for p in problems)
    assert any("not connected" in p for p in problems)


def test_existing_dispatch_not_extendable():
    net = Network([Bus("a", "X")], [Generator("g", "a", "existing-dispatch", extendable=True)])
    assert any("extendable" in p for p in validate_network(net))


def test_hydro_storage_not_extendable():
    net = Network([Bus("a", "X")], storage_systems=[StorageSystem("r", "a", "reservoir", extendable=True)])
    assert any("reservoir" in p for p in validate_network(net))


def test_unknown_profile_reported():
    net = one_bus_net()
    problems = validate_network(net, profile_ids={"wind"})
    assert any("'solar'" in p for p in problems)


def test_apply_scenario_returns_copy():
    net = three_bus_net()
    new = apply_scenario(net, {"transmission_expansion": 0.25})
    assert new.scenario.transmission_expansion == 0.25
    assert net.scenario.transmission_expansion == 0.0
    assert new.generators is net.generators
    assert apply_scenario(net, {}) is net


def test_apply_scenario_co2_relaxation_keeps_gas():
    net = three_bus_net()
    relaxed = apply_scenario(net, {"co2_reduction": 0.99})
    gas = [g for g in relaxed.generators if g.emission_factor > 0]
    assert gas and gas[0].p_nom_fixed == 800


@pytest.mark.parametrize("override", [{"co2_reduction": 1.5}, {"transmission_expansion": -0.1},
                                      {"equity_share": 2.0}, {"sde_window_T": 0}, {"nope": 1}])
def test_apply_scenario_rejects_bad_values(override):
    with pytest.raises(ConfigError):
        apply_scenario(three_bus_net(), override)


def test_config_round_trip(tmp_path):
    cfg = network_to_dict(demo_network())
    path = tmp_path / "net.json"
    path.write_text(json.dumps(cfg))
    again = network_from_dict(read_config(path))
    assert again == demo_network()


def test_toml_config(tmp_path):
    path = tmp_path / "c.toml"
    path.write_text('[scenario]\nco2_reduction = 0.95\n\n[[network.buses]]\nid = "a"\ncountry = "X"\n')
    net = network_from_dict(read_config(path))
    assert net.scenario.co2_reduction == 0.95
    assert net.bus_ids == ["a"]


def test_unknown_field_is_config_error():
    cfg = demo_config()
    cfg["network"]["generators"][0]["colour"] = "red"
    with pytest.raises(ConfigError, match="colour"):
        network_from_dict(cfg)


def test_network_is_frozen():
    net = demo_network()
    with pytest.raises(dataclasses.FrozenInstanceError):
        net.buses = ()
    assert isinstance(net.generators, tuple)
