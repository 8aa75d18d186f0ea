import json

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from stmon.geometry import Region, region_is_subset
from stmon.scenarios import (DEFAULT_DEBRIS, TAN30, DomainExit, InputOutOfBounds, ScenarioFile,
                             build_drone_model, build_spacecraft_model, builtin_scenario, cw_matrices,
                             load_scenario, mean_motion, simulate_plant)
from stmon.stl import G, U
from stmon.trace_io import read_trace_csv, write_trace_csv

FIXTURES = __import__("pathlib").Path(__file__).parent / "fixtures"


def same(a, b):
    return region_is_subset(a, b) and region_is_subset(b, a)


def test_drone_model():
    sys, spec = build_drone_model()
    assert np.array_equal(sys.A, [[1, 0.5], [0, 1]]) and np.array_equal(sys.B, [[0.5], [1]])
    assert not sys.c.any()
    assert same(sys.input_set, Region.box([[-2.5, 2.5]]))
    assert same(sys.domain, Region.box([[0, 100], [-5, 5]]))
    assert spec.n == 3 and spec.horizon == 50
    assert [(f.a, f.b) for f in spec.subformulae] == [(0, 20), (0, 20), (40, 50)]
    assert np.allclose(sys.step([50, 0], [2.5]), [51.25, 2.5], atol=0, rtol=0)


def test_spacecraft_constants():
    # sqrt(3.698e14 * 3600 / 42164000**3) in rad/min
    assert mean_motion() == pytest.approx(0.004214266509065585, rel=1e-12)
    assert TAN30 == pytest.approx(1 / np.sqrt(3), rel=1e-15)


def test_spacecraft_model():
    sys, spec = build_spacecraft_model()
    assert sys.n == 4 and sys.m == 2 and spec.horizon == 50
    assert same(sys.input_set, Region.box([[-3, 3], [-3, 3]]))
    assert same(sys.domain, Region.box([[-100, 0], [-70, 70], [0, 10], [0, 10]]))
    ops = sorted((f.op, f.a, f.b) for f in spec.subformulae)
    assert ops == [(G, 0, 50), (G, 0, 50), (U, 0, 50)]
    goal = next(f for f in spec.subformulae if f.op == U).h2
    assert same(goal, Region.box([[-6, 0], [-2, 2], [0, 3], [0, 3]]))
    # clause order of the formula: Goal, Debris avoidance, line-of-sight cone
    debris, cone = spec[2].h1, spec[3].h1
    assert cone.contains([-10, 10 * TAN30 - 1e-6, 0, 0]) and not cone.contains([-10, 10 * TAN30 + 1e-6, 0, 0])
    assert not cone.contains([-10, -10 * TAN30 - 1e-6, 0, 0])
    assert not debris.contains([-18.8, -8.0, 1, 1]) and debris.contains([-10, 0, 0, 0])


def test_cw_discretization_matches_integration():
    n = mean_motion()
    A, B = cw_matrices()
    x0 = np.array([-30.0, -14.0, 1.1, 0.66])
    u = np.array([1.2, -0.7])

    def rhs(_t, s):
        x, y, vx, vy = s
        return [vx, vy, 3 * n * n * x + 2 * n * vy + u[0] / 500.0, -2 * n * vx + u[1] / 500.0]

    sol = solve_ivp(rhs, (0, 0.5), x0, rtol=1e-12, atol=1e-12)
    assert np.allclose(A @ x0 + B @ u, sol.y[:, -1], rtol=1e-9, atol=1e-9)


def test_simulate_examples():
    sys = build_drone_model()[0]
    ident = type(sys)(np.eye(2), np.zeros((2, 1)), None, sys.input_set, sys.domain)
    tr = simulate_plant(ident, [3.0, 1.0], np.zeros((7, 1)))
    assert np.all(tr.states == [3.0, 1.0])
    tr = simulate_plant(sys, [50, 2], np.zeros((10, 1)))
    assert np.array_equal(tr.states[:, 0], 50 + 1.0 * np.arange(11))
    tr = simulate_plant(sys, [50, 0], lambda t, x: [2.5], horizon=1)
    assert np.array_equal(tr.states[1], [51.25, 2.5])


def test_simulate_errors():
    sys = build_drone_model()[0]
    with pytest.raises(InputOutOfBounds):
        simulate_plant(sys, [50, 0], [[3.0]])
    with pytest.raises(DomainExit) as e:
        simulate_plant(sys, [99, 4], [[0.0], [0.0]])
    assert e.value.instant == 1 and len(e.value.trace) == 2
    with pytest.raises(ValueError):
        simulate_plant(sys, [50, 0], np.zeros((60, 1)), horizon=50)


def test_reference_trace_matches_golden_csv(tmp_path):
    sc = builtin_scenario("spacecraft")
    tr = sc.trace()
    golden, names = read_trace_csv(FIXTURES / "spacecraft_reference.csv")
    assert names == ["x", "y", "vx", "vy"]
    assert np.allclose(tr.states, golden.states, rtol=1e-12, atol=1e-12)
    out = tmp_path / "t.csv"
    write_trace_csv(tr, out, sc.variables)
    back, _ = read_trace_csv(out)
    assert np.array_equal(back.states, tr.states)


@pytest.mark.parametrize("name", ["drone-reference", "drone-hover", "spacecraft"])
def test_scenario_round_trip(name, tmp_path):
    sc = builtin_scenario(name)
    p1, p2 = tmp_path / "a.json", tmp_path / "b.json"
    sc.save(p1)
    again = ScenarioFile.load(p1)
    again.save(p2)
    assert p1.read_text() == p2.read_text()
    assert json.loads(p1.read_text()) == sc.to_json()
    assert load_scenario(str(p1)).name == name


def test_spacecraft_scenario_tags_configuration():
    sc = builtin_scenario("spacecraft")
    assert "configuration" in sc.notes["debris"]
    debris = sc.regions["Debris"]
    assert same(debris, Region.box([*DEFAULT_DEBRIS, [-np.inf, np.inf], [-np.inf, np.inf]]))
    assert sc.approx is not None


def test_scenario_validation():
    sc = builtin_scenario("drone-reference")
    with pytest.raises(ValueError):
        ScenarioFile("x", sc.system, sc.formula, ["z"], 10, [0, 0])
    with pytest.raises(Exception):
        ScenarioFile("x", sc.system, "G[0,5] Nowhere", ["z", "v"], 3, [0, 0])
    with pytest.raises(KeyError):
        builtin_scenario("no-such-scenario")
    with pytest.raises(ValueError):
        ScenarioFile("x", sc.system, sc.formula, ["z", "v"], 10, [2, 0]).trace()
