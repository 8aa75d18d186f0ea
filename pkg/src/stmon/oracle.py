"""Exhaustive reference computations on finite grid systems.

Nothing here uses the index-update function or the feasible-set recursion.
Satisfaction is tracked directly from the semantics with one status per
sub-formula, and feasibility is decided by depth-first search over paths.
These results are the ground truth for the recursion and the monitor.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .backend import GridSystem
from .feasible import compute_feasible_table
from .geometry import Region
from .monitor import (MonitorConfig, belief_is_safe, belief_refine,
                      initial_belief, trigger_detail)
from .stl import G, U, StlSpec, SubFormula, Trace, induced_sequence_semantic, remaining_formula

OPEN, DONE = 0, 1
DEFAULT_BUDGET = 3 ** 12


class OracleBudgetError(RuntimeError):
    """Enumeration exceeded its node budget."""


class _Semantics:
    """Per-cell membership tables and the status transition of each sub-formula."""

    def __init__(self, subs, grid):
        self.subs = list(subs)
        P = grid.points
        self.hold = [f.h1.contains_points(P) for f in self.subs]
        self.goal = [(f.h1 & f.h2).contains_points(P) if f.op == U else None for f in self.subs]

    def initial(self):
        return tuple(OPEN for _ in self.subs)

    def step(self, status, k, c):
        """Status after visiting cell ``c`` at instant ``k``; ``None`` once failed."""
        out = list(status)
        for j, f in enumerate(self.subs):
            if k < f.a or k > f.b:
                continue
            if f.op == G:
                if not self.hold[j][c]:
                    return None
                continue
            if out[j] == DONE:
                continue
            if self.goal[j][c]:
                out[j] = DONE
            elif not self.hold[j][c] or k == f.b:
                return None
        return tuple(out)

    def accepting(self, status):
        return all(s == DONE or f.op == G for s, f in zip(status, self.subs))


class _Search:
    """Memoised existence of a satisfying continuation."""

    def __init__(self, sem, grid, horizon):
        self.sem, self.grid, self.T = sem, grid, horizon
        self.memo = {}

    def exists(self, k, c, status):
        """Some path visiting ``c`` at ``k`` (status before ``k``) satisfies everything."""
        key = (k, c, status)
        hit = self.memo.get(key)
        if hit is not None:
            return hit
        new = self.sem.step(status, k, c)
        if new is None:
            res = False
        elif k >= self.T:
            res = self.sem.accepting(new)
        else:
            res = any(self.exists(k + 1, c2, new) for c2 in self.grid.successors[c])
        self.memo[key] = res
        return res


def oracle_feasible(spec, grid, t, I):
    """Cells at instant ``t`` from which some path satisfies the ``I``-remaining formula."""
    I = frozenset(I)
    if any(spec[i].b < t for i in I):
        return frozenset()
    rem = remaining_formula(spec, I, t)
    if rem is None:
        return frozenset(range(grid.n_cells))
    search = _Search(_Semantics(rem.subformulae, grid), grid, spec.horizon)
    init = search.sem.initial()
    return frozenset(c for c in range(grid.n_cells) if search.exists(t, c, init))


def _prefix_status(sem, grid, states):
    status = sem.initial()
    cells = [grid.cell_of(x) for x in states]
    for k, c in enumerate(cells):
        status = sem.step(status, k, c)
        if status is None:
            return None, cells
    return status, cells


def oracle_classify_prefix(spec, grid, trace, search=None):
    """``"violated"`` iff no continuation of the prefix satisfies the specification."""
    sem = search.sem if search is not None else _Semantics(spec.subformulae, grid)
    search = search or _Search(sem, grid, spec.horizon)
    status, cells = _prefix_status(sem, grid, trace.states)
    t = len(cells) - 1
    if status is None:
        return "violated"
    if t >= spec.horizon:
        return "feasible" if sem.accepting(status) else "violated"
    ok = any(search.exists(t + 1, c2, status) for c2 in grid.successors[cells[-1]])
    return "feasible" if ok else "violated"


# -- consistent histories ------------------------------------------------------

@dataclass
class _Classes:
    """Consistent prefixes grouped by (cell, pending set, satisfaction status)."""

    t: int
    reps: dict = field(default_factory=dict)

    def beliefs(self):
        return frozenset((c, I) for (c, I, _) in self.reps)

    def cells(self):
        return frozenset(c for (c, _, _) in self.reps)


class _Enumerator:
    def __init__(self, spec, grid, budget=DEFAULT_BUDGET):
        self.spec, self.grid = spec, grid
        self.sem = _Semantics(spec.subformulae, grid)
        self.budget = budget
        self.expanded = 0

    def _key(self, path, status):
        tr = Trace(self.grid.points[path])
        I = induced_sequence_semantic(self.spec, tr)[-1][1]
        return (path[-1], I, status)

    def start(self, c0):
        path = [c0]
        status = self.sem.step(self.sem.initial(), 0, c0)
        return _Classes(0, {self._key(path, status): (path, status)})

    def advance(self, classes, steps, observed=None):
        """Extend every class by ``steps`` transitions; keep those ending at ``observed``."""
        cur = classes
        for s in range(steps):
            nxt = _Classes(cur.t + 1)
            last = s == steps - 1
            for (c, _, _), (path, status) in cur.reps.items():
                for c2 in self.grid.successors[c]:
                    if last and observed is not None and c2 != observed:
                        continue
                    self.expanded += 1
                    if self.expanded > self.budget:
                        raise OracleBudgetError(f"more than {self.budget} path extensions")
                    p2 = path + [c2]
                    st2 = self.sem.step(status, cur.t + 1, c2) if status is not None else None
                    key = self._key(p2, st2)
                    if key not in nxt.reps:
                        nxt.reps[key] = (p2, st2)
            cur = nxt
        return cur


def oracle_consistent_beliefs(cfg, grid, history, budget=DEFAULT_BUDGET):
    """``{(cell, I_t)}`` over all paths that agree with ``history`` at its observation instants.

    ``I_t`` is the pending set of the semantic induced sequence of each path.
    """
    en = _Enumerator(cfg.spec, grid, budget)
    samples = list(history.samples)
    if not samples and history.final is None:
        raise ValueError("empty history")
    first = samples[0][0] if samples else history.final
    cls = en.start(grid.cell_of(first))
    observed = [x for x, _ in samples[1:]] + ([history.final] if samples and history.final is not None else [])
    for (_, tau), x in zip(samples, observed):
        cls = en.advance(cls, tau, grid.cell_of(x))
    return cls.beliefs()


# -- random instances ----------------------------------------------------------

@dataclass(frozen=True)
class InstanceParams:
    max_cells: int = 64
    max_branching: int = 3
    max_formulas: int = 3
    max_horizon: int = 12
    max_t_max: int = 4


def _random_box(rng, w, h):
    """Axis-aligned box covering at least about half of each lattice side."""
    def side(n):
        span = int(rng.integers((n + 1) // 2, n + 1))
        lo = int(rng.integers(0, n - span + 1))
        return [lo, lo + span - 1]
    return Region.box([side(w), side(h)])


def random_instance(seed, params=None):
    """Random grid system and specification (2-D lattice cells, boxes as predicates)."""
    p = params or InstanceParams()
    rng = np.random.default_rng(seed)
    while True:
        w = int(rng.integers(3, 9))
        h = int(rng.integers(2, 9))
        if w * h <= p.max_cells:
            break
    pts = np.array([(i, j) for i in range(w) for j in range(h)], dtype=float)
    index = {(i, j): k for k, (i, j) in enumerate(pts.astype(int).tolist())}
    moves = [(di, dj) for di in (-1, 0, 1) for dj in (-1, 0, 1)]
    succ = []
    for i, j in pts.astype(int):
        cand = [index[(i + di, j + dj)] for di, dj in moves if (i + di, j + dj) in index]
        k = int(rng.integers(1, p.max_branching + 1))
        succ.append(rng.choice(cand, size=min(k, len(cand)), replace=False).tolist())
    grid = GridSystem(pts, succ, initial=int(rng.integers(0, len(pts))))
    T = int(rng.integers(4, p.max_horizon + 1))
    N = int(rng.integers(1, p.max_formulas + 1))
    ops = [U, G] + [str(rng.choice([G, U])) for _ in range(N - 2)] if N >= 2 else [str(rng.choice([G, U]))]
    subs = []
    for k, op in enumerate(ops):
        a = int(rng.integers(0, T + 1))
        b = int(rng.integers(a, T + 1))
        if k == 0:
            b = T
            a = int(rng.integers(0, T + 1))
        if op == G:
            subs.append(SubFormula(G, a, b, _random_box(rng, w, h)))
        else:
            hold = Region.full(2) if rng.random() < 0.4 else _random_box(rng, w, h)
            subs.append(SubFormula(U, a, b, hold, _random_box(rng, w, h)))
    spec = StlSpec(tuple(subs), 2)
    if rng.random() < 0.8:
        good = sorted(oracle_feasible(spec, grid, 0, spec.all_indices))
        if good:
            grid = GridSystem(pts, succ, initial=int(rng.choice(good)))
    return grid, spec


def random_t_max(seed, spec, params=None):
    p = params or InstanceParams()
    rng = np.random.default_rng([seed, 7])
    return int(rng.integers(1, min(p.max_t_max, spec.horizon - 1) + 1))


def random_config(seed, params=None):
    grid, spec = random_instance(seed, params)
    table = compute_feasible_table(spec, grid)
    cfg = MonitorConfig(spec, grid, table, random_t_max(seed, spec, params))
    return grid, cfg


# -- exhaustive monitor exploration -------------------------------------------

@dataclass
class ExplorationReport:
    nodes: int = 0
    leaves: int = 0
    alarms: int = 0
    theorem_failures: list = field(default_factory=list)
    belief_failures: list = field(default_factory=list)
    prediction_failures: list = field(default_factory=list)
    trigger_failures: list = field(default_factory=list)
    trigger_checks: int = 0
    fallbacks: int = 0
    has_violating: bool = False
    has_feasible: bool = False

    @property
    def ok(self):
        return not (self.theorem_failures or self.belief_failures or self.prediction_failures
                    or self.trigger_failures)


def _explicit_successors(spec, grid, pairs, t):
    """Augmented-state successors listed one cell at a time."""
    from .stl import update_index_set

    out = set()
    for c, I in pairs:
        I2 = update_index_set(spec, I, t, grid.points[c])
        for c2 in grid.successors[c]:
            out.add((c2, I2))
    return out


def exhaustive_trigger_time(cfg, grid, pairs, t, feasible):
    """Largest determined horizon up to the first unsafe prediction (falls back to 1)."""
    from .stl import update_index_set

    spec = cfg.spec
    K = min(cfg.t_max, spec.horizon - t)
    cur = set(pairs)
    safe, det = [], []
    for k in range(1, K + 1):
        cur = _explicit_successors(spec, grid, cur, t + k - 1)
        safe.append(all(c in feasible(t + k, I) for c, I in cur))
        by_cell = {}
        for c, I in cur:
            by_cell.setdefault(c, set()).add(update_index_set(spec, I, t + k, grid.points[c]))
        det.append(all(len(v) == 1 for v in by_cell.values()))
    tau1 = next((k for k in range(1, K + 1) if not safe[k - 1]), K)
    cands = [k for k in range(1, tau1 + 1) if det[k - 1]]
    return (max(cands) if cands else 1), bool(cands)


def explore_monitor(cfg, grid, budget=DEFAULT_BUDGET, max_nodes=20000):
    """Run the self-triggered monitor on every path of ``grid`` at once.

    Each node of the exploration is an observation: the monitor's belief is
    compared with the enumerated consistent beliefs, its decision with the
    ground-truth classification of every consistent prefix, its trigger
    interval with a brute-force search, and its prediction with the cells
    actually reachable.
    """
    spec = cfg.spec
    be = cfg.backend
    rep = ExplorationReport()
    en = _Enumerator(spec, grid, budget)
    search = _Search(en.sem, grid, spec.horizon)
    feas_cache = {}

    def feasible(t, I):
        key = (t, I)
        if key not in feas_cache:
            feas_cache[key] = oracle_feasible(spec, grid, t, I)
        return feas_cache[key]

    def violated(path):
        return oracle_classify_prefix(spec, grid, Trace(grid.points[path]), search) == "violated"

    c0 = grid.initial
    stack = [(0, None, en.start(c0), c0)]
    seen = set()
    while stack:
        t, predicted, classes, c = stack.pop()
        rep.nodes += 1
        if rep.nodes > max_nodes:
            raise OracleBudgetError(f"more than {max_nodes} monitor nodes")
        x = grid.points[c]
        if predicted is None:
            predicted = initial_belief(cfg, x)
        b = belief_refine(predicted, x, be)
        mon = frozenset((cell, I) for s, I in b.pairs for cell in s)
        truth = classes.beliefs()
        if mon != truth:
            rep.belief_failures.append((t, c, sorted(map(str, mon ^ truth))))
        safe = belief_is_safe(cfg, b, t)
        verdicts = {violated(path) for path, _ in classes.reps.values()}
        rep.has_violating |= True in verdicts
        rep.has_feasible |= False in verdicts
        if verdicts != {not safe}:
            rep.theorem_failures.append((t, c, safe, sorted(verdicts)))
        if not safe:
            rep.alarms += 1
            rep.leaves += 1
            continue
        if t >= spec.horizon:
            rep.leaves += 1
            continue
        trig = trigger_detail(cfg, b, t)
        rep.fallbacks += int(trig.fallback)
        tau_ref, _ = exhaustive_trigger_time(cfg, grid, mon, t, feasible)
        rep.trigger_checks += 1
        if tau_ref != trig.tau:
            rep.trigger_failures.append((t, c, trig.tau, tau_ref))
        nxt_pred = trig.predictions[trig.tau - 1]
        en.expanded = 0
        ahead = en.advance(classes, trig.tau)
        pred_cells = frozenset(cell for s, _ in nxt_pred.pairs for cell in s)
        if pred_cells != ahead.cells():
            rep.prediction_failures.append((t, c, trig.tau))
        for c2 in sorted(ahead.cells()):
            sub = _Classes(ahead.t, {k: v for k, v in ahead.reps.items() if k[0] == c2})
            key = (ahead.t, c2, frozenset(sub.reps), nxt_pred.pairs)
            if key in seen:
                continue
            seen.add(key)
            stack.append((ahead.t, nxt_pred, sub, c2))
    return rep


# -- per-seed checks -----------------------------------------------------------

def parse_seeds(text):
    """``"0..99"`` (inclusive), ``"3,5,8"`` or a mix of both."""
    seeds = []
    for chunk in str(text).split(","):
        chunk = chunk.strip()
        if ".." in chunk:
            lo, hi = chunk.split("..")
            seeds.extend(range(int(lo), int(hi) + 1))
        elif chunk:
            seeds.append(int(chunk))
    return seeds


def check_feasible(seed, params=None):
    """Compare every reachable table entry of a random instance with :func:`oracle_feasible`."""
    grid, spec = random_instance(seed, params)
    table = compute_feasible_table(spec, grid)
    bad = [(t, sorted(I)) for (t, I), cells in table.entries.items()
           if frozenset(cells) != oracle_feasible(spec, grid, t, I)]
    return {"seed": seed, "pass": not bad, "entries": len(table.entries), "mismatches": bad}


def check_monitor(seed, params=None, budget=DEFAULT_BUDGET):
    """Exhaustive monitor exploration of a random instance.

    Returns a JSON-ready summary and the full :class:`ExplorationReport`.
    """
    grid, cfg = random_config(seed, params)
    rep = explore_monitor(cfg, grid, budget)
    return {"seed": seed, "t_max": cfg.t_max, "nodes": rep.nodes, "alarms": rep.alarms,
            "theorem_failures": len(rep.theorem_failures),
            "belief_failures": len(rep.belief_failures),
            "prediction_failures": len(rep.prediction_failures),
            "trigger_checks": rep.trigger_checks, "trigger_failures": len(rep.trigger_failures),
            "fallbacks": rep.fallbacks, "has_violating": rep.has_violating,
            "has_feasible": rep.has_feasible}, rep
