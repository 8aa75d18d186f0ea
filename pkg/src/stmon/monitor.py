"""Belief states, trigger-time selection and the online monitors.

A belief is a list of ``(set, I)`` pairs: the states the system may be in,
grouped by the index set of sub-formulae still pending.  The self-triggered
monitor keeps a predicted belief between observations and schedules the next
observation as late as it can while the prediction stays safe.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .backend import as_backend
from .feasible import outcome_cells
from .geometry import Region
from .stl import update_index_set

DECISION_OK = 0
DECISION_ALARM = 1

ALARM = "violated-alarm"
COMPLETED = "completed"
EXHAUSTED = "exhausted"
FAULT = "fault"


class MonitorError(RuntimeError):
    pass


@dataclass(frozen=True)
class Belief:
    t: int
    pairs: tuple

    def __len__(self):
        return len(self.pairs)

    def is_empty(self):
        return not self.pairs

    @property
    def index_sets(self):
        return [I for _, I in self.pairs]

    def region(self, I):
        for s, J in self.pairs:
            if J == I:
                return s
        return None


def _merge(backend, t, items):
    """Collapse ``(set, I)`` items into one pair per index set."""
    acc = {}
    for s, I in items:
        if backend.is_empty(s):
            continue
        acc[I] = backend.union(acc[I], s) if I in acc else s
    pairs = tuple((backend.simplify(s), I) for I, s in sorted(acc.items(), key=lambda kv: sorted(kv[0])))
    return Belief(t, pairs)


@dataclass
class MonitorConfig:
    spec: object
    system: object
    table: object
    t_max: int
    backend: object = None

    def __post_init__(self):
        if self.backend is None:
            self.backend = self.table.backend if self.table is not None else as_backend(self.system)
        T = self.spec.horizon
        if not 1 <= self.t_max:
            raise ValueError("T_max must be at least 1")
        if self.t_max >= T:
            raise ValueError(f"T_max={self.t_max} must be below the horizon {T}")

    @property
    def horizon(self):
        return self.spec.horizon


def initial_belief(cfg, x0):
    be = cfg.backend
    return Belief(0, ((be.singleton(x0), cfg.spec.all_indices),))


def belief_refine(b, x, backend=None):
    """Keep the pairs whose set contains ``x``, each shrunk to ``{x}``."""
    if backend is None:
        pairs = tuple((Region.point(x), I) for s, I in b.pairs if s.contains(x))
    else:
        pairs = tuple((backend.singleton(x), I) for s, I in b.pairs if backend.contains(s, x))
    return Belief(b.t, pairs)


def _predict_once(cfg, b):
    be, spec, t = cfg.backend, cfg.spec, b.t
    items = []
    for s, I in b.pairs:
        for cell, I2 in outcome_cells(be, spec, I, t):
            piece = be.intersect(s, cell)
            if be.is_empty(piece):
                continue
            items.append((be.post(piece), I2))
    return _merge(be, t + 1, items)


def belief_predict(cfg, b, t, k):
    """Belief ``k`` instants after ``t`` without observations."""
    if b.t != t:
        raise MonitorError(f"belief refers to instant {b.t}, not {t}")
    if t + k > cfg.horizon:
        raise MonitorError(f"prediction to {t + k} overruns the horizon {cfg.horizon}")
    for _ in range(k):
        b = _predict_once(cfg, b)
    return b


def belief_is_safe(cfg, b, t):
    be = cfg.backend
    return all(be.is_subset(s, cfg.table.get(t, I)) for s, I in b.pairs)


def belief_is_determined(cfg, b, t):
    """No state of the belief carries two index sets that update differently."""
    be, spec = cfg.backend, cfg.spec
    pairs = b.pairs
    for j in range(len(pairs)):
        for k in range(j + 1, len(pairs)):
            (Rj, Ij), (Rk, Ik) = pairs[j], pairs[k]
            both = be.intersect(Rj, Rk)
            if be.is_empty(both):
                continue
            for Cj, Oj in outcome_cells(be, spec, Ij, t):
                shared = be.intersect(both, Cj)
                if be.is_empty(shared):
                    continue
                for Ck, Ok in outcome_cells(be, spec, Ik, t):
                    if Oj != Ok and not be.is_empty(be.intersect(shared, Ck)):
                        return False
    return True


@dataclass
class TriggerResult:
    tau: int
    predictions: list
    fallback: bool
    stop: str
    unsafe_belief: Belief | None = None


def trigger_detail(cfg, b, t):
    """Trigger-time search with the predicted beliefs it visited.

    ``fallback`` is set when no visited prediction was determined, in which
    case the interval falls back to one.
    """
    K = min(cfg.t_max, cfg.horizon - t)
    k, tau, found = 1, 1, False
    preds = []
    cur = b
    while k <= K:
        cur = _predict_once(cfg, cur)
        preds.append(cur)
        if belief_is_determined(cfg, cur, t + k):
            tau, found = k, True
        if belief_is_safe(cfg, cur, t + k):
            k += 1
        else:
            return TriggerResult(tau, preds, not found, "unsafe", cur)
    return TriggerResult(tau, preds, not found, "horizon")


def trigger_time(cfg, b, t):
    return trigger_detail(cfg, b, t).tau


@dataclass
class ObservationRecord:
    instant: int
    state: np.ndarray
    decision: int | None
    tau: int | None
    belief_pairs: int
    belief_size: int
    wall_time: float
    fallback: bool = False
    stop: str | None = None
    trigger: TriggerResult | None = field(default=None, repr=False)

    def to_json(self):
        return {"instant": self.instant, "state": np.asarray(self.state).tolist(),
                "decision": self.decision, "tau": self.tau, "belief_pairs": self.belief_pairs,
                "belief_size": self.belief_size, "wall_time": self.wall_time,
                "fallback": self.fallback, "stop": self.stop}


@dataclass
class ObservationHistory:
    """Observed states with the interval waited after each; the last has none."""

    samples: list
    final: np.ndarray | None = None

    @property
    def instants(self):
        out, t = [], 0
        for _, tau in self.samples:
            out.append(t)
            t += tau
        if self.final is not None:
            out.append(t)
        return out


@dataclass
class MonitorLog:
    mode: str
    records: list = field(default_factory=list)
    status: str | None = None

    @property
    def n_observations(self):
        return len(self.records)

    @property
    def alarm_instant(self):
        if self.records and self.records[-1].decision == DECISION_ALARM:
            return self.records[-1].instant
        return None

    @property
    def instants(self):
        return [r.instant for r in self.records]

    def history(self):
        recs = self.records
        samples = [(r.state, r.tau) for r in recs if r.tau]
        final = recs[-1].state if recs and not recs[-1].tau else None
        return ObservationHistory(samples, final)

    def to_json(self):
        return {"mode": self.mode, "status": self.status, "n_observations": self.n_observations,
                "alarm_instant": self.alarm_instant, "records": [r.to_json() for r in self.records]}


def _as_plant(plant):
    if callable(plant):
        return plant
    states = plant.states if hasattr(plant, "states") else np.asarray(plant, dtype=float)
    states = np.asarray(states, dtype=float)
    if states.ndim == 1:
        states = states[:, None]

    def observe(t):
        return states[t] if t < len(states) else None

    return observe


class SelfTriggeredMonitor:
    """Step-wise form of the self-triggered monitor.

    Call :meth:`observe` with the state at :attr:`next_instant`; it returns
    ``(decision, tau)``, where ``tau`` is ``None`` once monitoring stops.
    """

    def __init__(self, cfg):
        self.cfg = cfg
        self.predicted = None
        self.next_instant = 0
        self.log = MonitorLog("self-triggered")
        self.done = False

    def observe(self, x):
        if self.done:
            raise MonitorError("monitoring already terminated")
        cfg, be = self.cfg, self.cfg.backend
        t = self.next_instant
        x = np.asarray(x, dtype=float).ravel()
        t0 = time.perf_counter()
        if self.predicted is None:
            self.predicted = initial_belief(cfg, x)
        size = sum(be.size(s) for s, _ in self.predicted.pairs)
        b = belief_refine(self.predicted, x, be)
        if b.is_empty():
            # the observation contradicts every prediction: a model fault, not a verdict
            self._finish(t, x, None, None, b, size, t0, FAULT)
            return None, None
        if not belief_is_safe(cfg, b, t):
            self._finish(t, x, DECISION_ALARM, None, b, size, t0, ALARM)
            return DECISION_ALARM, None
        if t >= cfg.horizon:
            self._finish(t, x, DECISION_OK, None, b, size, t0, COMPLETED)
            return DECISION_OK, None
        trig = trigger_detail(cfg, b, t)
        self.predicted = trig.predictions[trig.tau - 1]
        self.log.records.append(ObservationRecord(t, x, DECISION_OK, trig.tau, len(b), size,
                                                  time.perf_counter() - t0, trig.fallback,
                                                  trig.stop, trig))
        self.next_instant = t + trig.tau
        return DECISION_OK, trig.tau

    def _finish(self, t, x, decision, tau, b, size, t0, status):
        self.log.records.append(ObservationRecord(t, x, decision, tau, len(b), size,
                                                  time.perf_counter() - t0))
        self.log.status = status
        self.done = True

    def exhaust(self):
        self.log.status = EXHAUSTED
        self.done = True


def run_self_triggered(cfg, plant):
    """Observe only at the instants chosen by the trigger-time search."""
    observe = _as_plant(plant)
    mon = SelfTriggeredMonitor(cfg)
    while not mon.done:
        x = observe(mon.next_instant)
        if x is None:
            mon.exhaust()
            break
        mon.observe(x)
    return mon.log


def run_periodic(cfg, plant):
    """Observe every instant and check ``x_t`` against ``X_t^{I_t}``."""
    observe = _as_plant(plant)
    spec = cfg.spec
    log = MonitorLog("periodic")
    I = spec.all_indices
    for t in range(cfg.horizon + 1):
        x = observe(t)
        if x is None:
            log.status = EXHAUSTED
            return log
        x = np.asarray(x, dtype=float).ravel()
        t0 = time.perf_counter()
        ok = cfg.table.contains(t, I, x)
        last = t == cfg.horizon
        log.records.append(ObservationRecord(t, x, DECISION_OK if ok else DECISION_ALARM,
                                             None if (last or not ok) else 1, 1, 1,
                                             time.perf_counter() - t0))
        if not ok:
            log.status = ALARM
            return log
        I = update_index_set(spec, I, t, x)
    log.status = COMPLETED
    return log
