"""End-to-end smoke checks for the compiled bindings."""

import json

import evwarn


def test_network_budget_defaults():
    b = evwarn.network_budget()
    assert b["feasible"] is True
    assert abs(b["t_tot_ms"] - 150.0) < 1e-9
    assert abs(b["compute_ms"] - 99.59) < 1e-9
    assert abs(b["network_allowance_ms"] - 50.41) < 1e-9
    assert abs(b["t_eval_ms"] - 25.205) < 1e-9
    assert abs(b["t_exe_ms"] - 25.205) < 1e-9

    tight = evwarn.network_budget(t_tot=90.0)
    assert tight["feasible"] is False
    assert abs(tight["deficit_ms"] - 9.59) < 1e-9


def test_impact_and_braking():
    mps, kmh = evwarn.impact_velocity(200.0)
    assert abs(mps - 1.526) < 1e-9
    assert abs(kmh - 3.6 * mps) < 1e-12

    assert abs(evwarn.braking_distance() - 20.0**2 / (2 * 8.53)) < 1e-9
    assert abs(evwarn.stopping_time() - 20.0 / 8.53) < 1e-9


def test_ray_intersection():
    user = evwarn.Trajectory.from_bearing(evwarn.CartPoint(1100, 3200), 90.0, 20.0)
    obj = evwarn.Trajectory.from_bearing(evwarn.CartPoint(1500, 3250), 180.0, 20.0)
    r = evwarn.intersect(user, obj)
    assert r.intersects()
    assert r.kind == "intersection"
    assert abs(r.solution.point.x - 1500.0) < 1e-9
    assert abs(r.solution.point.y - 3200.0) < 1e-9
    assert abs(r.solution.eta_u - 20.0) < 1e-9

    parallel = evwarn.intersect(user, evwarn.Trajectory.from_bearing(
        evwarn.CartPoint(1500, 3250), 90.0, 10.0))
    assert not parallel.intersects()
    assert parallel.kind == "parallel"


def test_grid_cells():
    cell = evwarn.cell_of(evwarn.CartPoint(1500, 3200))
    assert evwarn.cell_name(cell) == "B3"
    assert evwarn.parse_cell_name("B3") == cell

    names = evwarn.neighborhood_names(cell)
    assert len(names) == 8
    assert "A2" in names and "C4" in names
    assert "B3" not in names  # the center is not its own neighbor

    corner = evwarn.neighborhood_names(evwarn.cell_of(evwarn.CartPoint(5, 5)))
    assert sorted(corner) == ["A1", "B0", "B1"]


def test_classify_alarm():
    user = evwarn.UserState(
        "v2", evwarn.Trajectory.from_bearing(evwarn.CartPoint(1100, 3200), 90.0, 20.0))
    sensor = evwarn.SensorState(
        "s-01",
        evwarn.Trajectory.from_bearing(evwarn.CartPoint(1500, 3250), 180.0, 20.0),
        event_active=True)
    verdict = evwarn.classify(user, sensor)
    assert verdict.level == "Alarm"
    assert verdict.intersection is not None
    assert abs(verdict.intersection.point.x - 1500.0) < 1e-9
    assert verdict.rationale
    assert evwarn.applicability(user, sensor) == "intersection"


def test_direction_vote():
    zones = [
        ([(0, 0), (960, 0), (960, 1080), (0, 1080)], 1),
        ([(960, 0), (1920, 0), (1920, 1080), (960, 1080)], -1),
    ]
    approaching = evwarn.BoundingBox(432, 259.2, 96, 86.4, "emergency", "front")
    departing = evwarn.BoundingBox(1392, 918, 96, 86.4, "emergency", "rear")
    assert evwarn.vote_heading(approaching, zones, 1080.0) == "toward"
    assert evwarn.vote_heading(departing, zones, 1080.0) == "away"


def test_run_simulation_default_scenario():
    out = evwarn.run_simulation(evwarn.default_scenario_json())
    assert out["records"] == 50

    summary = json.loads(out["summary_json"])
    assert summary["records"] == 50
    assert abs(summary["stages"]["total"]["mean"] - 149.99) < 1e-9
    assert summary["verdicts"] == {"Alarm": 25, "Warning2": 25}
    assert summary["deadline_misses"] == 0

    lines = out["csv"].splitlines()
    assert lines[0].startswith("run,event_id,t_s,")
    assert len(lines) == 51
