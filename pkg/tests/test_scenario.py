from dronerem.scenario import (DEFAULT_SEED, Scenario, build_scenario, default_scenario,
                               load_scenario, scenario_json)


def test_bundled_scenario_matches_its_generator():
    assert default_scenario() == build_scenario(DEFAULT_SEED, "default")


def test_default_scenario_shape(default_mission):
    scenario, ds, log = default_mission
    assert len(scenario.environment.aps) == 73
    assert sum(len(r.waypoints) for r in scenario.routes()) == 72
    assert len({s.mac for s in ds}) <= 73
    assert len(ds) > 1000


def test_scenario_file_round_trip(tmp_path):
    sc = build_scenario(4, n_aps=5)
    path = tmp_path / "s.json"
    path.write_text(scenario_json(sc))
    assert load_scenario(path) == sc
