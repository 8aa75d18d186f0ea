import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from stmon.feasible import classify_prefix, compute_feasible_table
from stmon.geometry import AffineSystem, Region, region_is_subset
from stmon.monitor import (ALARM, COMPLETED, DECISION_ALARM, EXHAUSTED, FAULT, Belief, MonitorConfig,
                           MonitorError, ObservationHistory, SelfTriggeredMonitor, belief_is_determined,
                           belief_is_safe, belief_predict, belief_refine, initial_belief, run_periodic,
                           run_self_triggered, trigger_detail, trigger_time)
from stmon.oracle import _explicit_successors, random_config
from stmon.parser import parse_spec
from stmon.stl import Trace, induced_sequence_semantic


def same(a, b):
    return region_is_subset(a, b) and region_is_subset(b, a)


def fs(*i):
    return frozenset(i)


def line_system(a=1.0, b=1.0, box=10.0):
    return AffineSystem(np.array([[a]]), np.array([[b]]), None, Region.box([[-1, 1]]), Region.box([[-box, box]]))


def config(text, sys, t_max):
    spec = parse_spec(text, sys.n)
    return MonitorConfig(spec, sys, compute_feasible_table(spec, sys), t_max)


@pytest.fixture(scope="module")
def drone_cfg(drone, drone_table):
    sys, spec = drone
    return MonitorConfig(spec, sys, drone_table, 10)


# -- refinement ------------------------------------------------------------------

def test_refine_examples():
    x = np.array([1.0])
    b = Belief(3, ((Region.point(x), fs(1)),))
    r = belief_refine(b, x)
    assert len(r) == 1 and r.pairs[0][1] == {1} and r.pairs[0][0].contains(x)
    b = Belief(3, ((Region.box([[0, 2]]), fs(1)), (Region.box([[5, 6]]), fs(2))))
    r = belief_refine(b, x)
    assert r.index_sets == [fs(1)] and same(r.pairs[0][0], Region.point(x))
    assert belief_refine(b, [3.0]).is_empty()


# -- prediction ----------------------------------------------------------------

def test_predict_identity_without_active_formulas():
    sys = AffineSystem(np.eye(1), np.zeros((1, 1)), None, Region.box([[-1, 1]]), Region.box([[-10, 10]]))
    cfg = config("G[6,8] (x1 in [-5,5])", sys, 3)
    b = Belief(0, ((Region.box([[1, 2]]), fs(1)),))
    p = belief_predict(cfg, b, 0, 3)
    assert p.t == 3 and p.index_sets == [fs(1)] and same(p.pairs[0][0], Region.box([[1, 2]]))


def test_predict_singleton(drone_cfg):
    x = np.array([18.0, 0.0])
    b = Belief(5, ((Region.point(x), drone_cfg.spec.all_indices),))
    p = belief_predict(drone_cfg, b, 5, 1)
    assert p.index_sets == [fs(3)]
    from stmon.geometry import post_image

    assert same(p.pairs[0][0], post_image(drone_cfg.system, Region.point(x)))


def test_predict_errors(drone_cfg):
    b = initial_belief(drone_cfg, [2.0, 0.0])
    with pytest.raises(MonitorError):
        belief_predict(drone_cfg, b, 1, 1)
    with pytest.raises(MonitorError):
        belief_predict(drone_cfg, b, 0, 51)


@pytest.mark.parametrize("seed", range(10))
def test_grid_prediction_matches_enumeration(seed):
    grid, cfg = random_config(seed)
    b = initial_belief(cfg, grid.points[grid.initial])
    cur = {(grid.initial, cfg.spec.all_indices)}
    for t in range(min(4, cfg.horizon)):
        b = belief_predict(cfg, b, t, 1)
        cur = _explicit_successors(cfg.spec, grid, cur, t)
        assert {(c, I) for s, I in b.pairs for c in s} == cur


# -- safety and determinacy ----------------------------------------------------

def test_safety_examples(drone_cfg):
    assert belief_is_safe(drone_cfg, Belief(49, ()), 49)
    b = Belief(49, ((Region.point([31, 0]), fs(3)),))
    assert not belief_is_safe(drone_cfg, b, 49)
    b = Belief(49, ((Region.point([58, 0]), fs(3)),))
    assert belief_is_safe(drone_cfg, b, 49)


def test_determinacy_examples():
    sys = line_system()
    cfg = config("TRUE U[0,5] (x1 in [0,4]) && TRUE U[0,5] (x1 in [2,6])", sys, 2)
    R = Region.box([[2, 4]])
    assert belief_is_determined(cfg, Belief(1, ((R, fs(1)), (R, fs(2)))), 1)
    R = Region.box([[0, 4]])
    assert not belief_is_determined(cfg, Belief(1, ((R, fs(1)), (R, fs(2)))), 1)
    assert belief_is_determined(cfg, Belief(1, ((Region.point([1.0]), fs(1, 2)),)), 1)
    apart = Belief(1, ((Region.box([[-9, -8]]), fs(1)), (Region.box([[8, 9]]), fs(2))))
    assert belief_is_determined(cfg, apart, 1)


# -- trigger time ----------------------------------------------------------------

def test_trigger_falls_back_to_one():
    # two explanations of the same observed state; one step ahead they overlap with
    # different index updates (undetermined) and the first task cannot be met (unsafe)
    sys = AffineSystem(np.zeros((1, 1)), np.eye(1), None, Region.box([[-1, 1]]), Region.box([[-1, 1]]))
    cfg = config("TRUE U[0,1] (x1 >= 0.5) && TRUE U[0,3] (x1 <= -0.5)", sys, 2)
    x = Region.point([0.0])
    b = Belief(0, ((x, fs(1)), (x, fs(2))))
    trig = trigger_detail(cfg, b, 0)
    nxt = trig.predictions[0]
    assert not belief_is_determined(cfg, nxt, 1) and not belief_is_safe(cfg, nxt, 1)
    assert trig.tau == 1 and trig.fallback and trig.stop == "unsafe"
    assert trigger_time(cfg, b, 0) == 1


def test_tautology_sleeps_as_long_as_allowed():
    sys = line_system()
    cfg = config("G[0,12] TRUE", sys, 5)
    tr = Trace(np.zeros(13))
    log = run_self_triggered(cfg, tr)
    assert log.status == COMPLETED and log.instants == [0, 5, 10, 12]
    assert [r.tau for r in log.records] == [5, 5, 2, None]
    assert trigger_time(cfg, belief_refine(initial_belief(cfg, [0.0]), [0.0]), 0) == 5


# -- runs ------------------------------------------------------------------------

def test_periodic_feasible_run(drone_cfg):
    from stmon.scenarios import builtin_scenario

    tr = builtin_scenario("drone-reference").trace()
    log = run_periodic(drone_cfg, tr)
    assert log.status == COMPLETED and log.n_observations == 51
    st_log = run_self_triggered(drone_cfg, tr)
    assert st_log.status == COMPLETED and st_log.n_observations < 51


def test_alarm_is_last_record(drone_cfg):
    log = run_self_triggered(drone_cfg, Trace(np.zeros((51, 2))))
    assert log.status == ALARM
    assert [r.decision for r in log.records][-1] == DECISION_ALARM
    assert all(r.decision == 0 for r in log.records[:-1])


def test_fault_and_exhaustion(drone_cfg):
    mon = SelfTriggeredMonitor(drone_cfg)
    d, tau = mon.observe([2.0, 0.0])
    assert d == 0 and tau >= 1
    assert mon.observe([90.0, 0.0]) == (None, None)
    assert mon.log.status == FAULT
    with pytest.raises(MonitorError):
        mon.observe([2.0, 0.0])
    log = run_self_triggered(drone_cfg, Trace(np.array([[2.0, 0.0]])))
    assert log.status == EXHAUSTED


def test_config_validation(drone, drone_table):
    sys, spec = drone
    with pytest.raises(ValueError):
        MonitorConfig(spec, sys, drone_table, 50)
    with pytest.raises(ValueError):
        MonitorConfig(spec, sys, drone_table, 0)


def test_history_instants():
    h = ObservationHistory([(np.zeros(1), 3), (np.zeros(1), 2)], np.zeros(1))
    assert h.instants == [0, 3, 5]


# -- properties on random grid instances ---------------------------------------

def _random_path(grid, T, rng):
    path = [grid.initial]
    for _ in range(T):
        path.append(int(rng.choice(grid.successors[path[-1]])))
    return Trace(grid.points[path])


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**6))
def test_monitor_properties_on_grids(seed):
    grid, cfg = random_config(seed % 400)
    spec = cfg.spec
    rng = np.random.default_rng(seed)
    tr = _random_path(grid, spec.horizon, rng)
    log = run_self_triggered(cfg, tr)
    per = run_periodic(cfg, tr)
    assert log.n_observations <= per.n_observations
    seq = induced_sequence_semantic(spec, tr)
    for r in log.records:
        # trigger bounds
        if r.tau is not None:
            assert 1 <= r.tau <= min(cfg.t_max, spec.horizon - r.instant)
        # the true augmented state is explained by the prediction
        trig = r.trigger
        if trig is not None and not trig.fallback:
            nxt = trig.predictions[trig.tau - 1]
            assert belief_is_determined(cfg, nxt, r.instant + trig.tau)
    # the prediction carried into each observation holds the true state
    mon = SelfTriggeredMonitor(cfg)
    while not mon.done:
        t = mon.next_instant
        if mon.predicted is not None:
            x, I = seq[t]
            assert any(I == J and cfg.backend.contains(s, x) for s, J in mon.predicted.pairs)
        mon.observe(tr.at(t))
    # alarms are correct and timely
    verdict = classify_prefix(spec, grid, cfg.table, tr)
    if log.status == ALARM:
        assert classify_prefix(spec, grid, cfg.table, tr.prefix(log.alarm_instant)).violated
    if verdict.violated:
        assert log.status == ALARM
        assert log.alarm_instant <= min(verdict.instant + cfg.t_max, spec.horizon)
        assert per.alarm_instant == verdict.instant
    else:
        assert log.status == COMPLETED and per.n_observations == spec.horizon + 1
