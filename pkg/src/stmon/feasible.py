"""Offline feasible-set table ``X_t^I`` and prefix classification.

``X_t^I`` is the set of states at instant ``t`` from which some input
sequence satisfies every sub-formula still pending in ``I``.  It is computed
backwards from the horizon by a first-step case analysis on which active
untils are discharged at ``t``.
"""
from __future__ import annotations

import itertools
import json
import time
from dataclasses import dataclass

from .backend import as_backend
from .stl import (FailedTaskError, U, effective_indices, expired_g, induced_sequence_semantic,
                  pending_u, spec_hash)

VIOLATED = "violated"
FEASIBLE = "feasible"


class TableMismatchError(ValueError):
    """A table was built for a different specification or system."""


class MissingEntryError(KeyError):
    pass


def _is_failed(spec, I, t):
    return any(spec[i].b < t for i in I)


def outcome_cells(backend, spec, I, t):
    """Disjoint cells of the domain keyed by the value of the index update.

    Returns ``[(cell, I')]`` where ``cell`` is a backend set; cells are
    cached on the backend per ``(t, I)``.
    """
    cache = backend.__dict__.setdefault("_outcome_cache", {})
    key = (id(spec), t, frozenset(I))
    hit = cache.get(key)
    if hit is not None and hit[0] is spec:
        return hit[1]
    I = frozenset(I)
    base = I - expired_g(spec, I, t)
    act = pending_u(spec, I, t)
    out = []
    for pattern in itertools.product((True, False), repeat=len(act)):
        cell = backend.full()
        for i, hit_i in zip(act, pattern):
            tgt = backend.lift(spec.target(i))
            cell = backend.intersect(cell, tgt) if hit_i else backend.difference(cell, tgt)
            if backend.is_empty(cell):
                break
        if backend.is_empty(cell):
            continue
        out.append((cell, base - frozenset(i for i, h in zip(act, pattern) if h)))
    cache[key] = (spec, out)
    return out


def reachable_layers(spec, system=None):
    """Index sets reachable at every instant, as a list of sorted lists.

    The closure follows ``update_index_set`` through non-empty outcome cells
    (cells are taken inside the system's domain when a system is given).
    Sets that already failed stay listed; their feasible set is empty.
    """
    if system is None:
        layer = {spec.all_indices}
        out = []
        for t in range(spec.horizon + 1):
            out.append(sorted(layer, key=lambda s: (len(s), sorted(s))))
            nxt = set()
            for I in layer:
                base = I - expired_g(spec, I, t)
                act = pending_u(spec, I, t)
                for r in range(len(act) + 1):
                    for S in itertools.combinations(act, r):
                        nxt.add(base - frozenset(S))
            layer = nxt
        return out
    be = as_backend(system)
    layer = {spec.all_indices}
    out = []
    for t in range(spec.horizon + 1):
        out.append(sorted(layer, key=lambda s: (len(s), sorted(s))))
        layer = {I2 for I in layer for _, I2 in outcome_cells(be, spec, I, t)}
    return out


def reachable_index_sets(spec, t, system=None):
    if not 0 <= t <= spec.horizon:
        raise ValueError(f"instant {t} outside [0, {spec.horizon}]")
    return reachable_layers(spec, system)[t]


def table_hash(spec, backend):
    return spec_hash(spec, json.dumps(backend.describe(), sort_keys=True))


class FeasibleSetTable:
    """Map ``(t, I) -> X_t^I`` over a backend's set type."""

    def __init__(self, spec, backend, entries, spec_hash, stats=None):
        self.spec = spec
        self.backend = backend
        self.entries = dict(entries)
        self.spec_hash = spec_hash
        self.stats = stats or {}

    @property
    def horizon(self):
        return self.spec.horizon

    def get(self, t, I):
        I = frozenset(I)
        hit = self.entries.get((t, I))
        if hit is not None:
            return hit
        if _is_failed(self.spec, I, t):
            return self.backend.empty()
        raise MissingEntryError((t, tuple(sorted(I))))

    def contains(self, t, I, x):
        return self.backend.contains(self.get(t, I), x)

    def check(self, spec, system):
        expected = table_hash(spec, as_backend(system))
        if expected != self.spec_hash:
            raise TableMismatchError("feasible-set table does not match the specification/system")

    def to_json(self):
        ents = {f"{t}|{','.join(map(str, sorted(I)))}": self.backend.to_json(s)
                for (t, I), s in sorted(self.entries.items(), key=lambda kv: (kv[0][0], sorted(kv[0][1])))}
        return {"spec_hash": self.spec_hash, "horizon": self.horizon, "backend": self.backend.kind,
                "entries": ents}

    @classmethod
    def from_json(cls, obj, spec, system):
        be = as_backend(system)
        h = table_hash(spec, be)
        if obj.get("spec_hash") != h:
            raise TableMismatchError("feasible-set table does not match the specification/system")
        entries = {}
        for key, val in obj["entries"].items():
            t, members = key.split("|")
            I = frozenset(int(m) for m in members.split(",") if m)
            entries[(int(t), I)] = be.from_json(val)
        return cls(spec, be, entries, h)

    def save(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_json(), fh)

    @classmethod
    def load(cls, path, spec, system):
        with open(path) as fh:
            return cls.from_json(json.load(fh), spec, system)


def compute_feasible_table(spec, system, max_parts=None, progress=None):
    """Backward recursion for ``X_t^I`` over every reachable ``(t, I)``.

    For an active until left pending at ``t`` the cell used is ``H1`` rather
    than ``H1 minus H2``: the extra states lead to a superset of obligations,
    whose feasible set is already contained in the discharged branch, so the
    union is unchanged and no complement is needed.
    """
    be = as_backend(system)
    if max_parts is not None and hasattr(be, "max_parts"):
        be.max_parts = max_parts
    if be.n != spec.state_dim:
        raise ValueError(f"system dimension {be.n} != spec dimension {spec.state_dim}")
    T = spec.horizon
    memo = {}
    t0 = time.perf_counter()

    def X(t, I):
        key = (t, I)
        if key in memo:
            return memo[key]
        if _is_failed(spec, I, t):
            return be.empty()
        part = effective_indices(spec, t)
        g = be.full()
        for i in sorted(I & part.active_g):
            g = be.intersect(g, be.lift(spec[i].h1))
        res = be.empty()
        if not be.is_empty(g):
            act = pending_u(spec, I, t)
            exp = expired_g(spec, I, t)
            terms = []
            for r in range(len(act), -1, -1):
                for S in itertools.combinations(act, r):
                    cell = g
                    for i in act:
                        cell = be.intersect(cell, be.lift(spec.target(i) if i in S else spec[i].h1))
                        if be.is_empty(cell):
                            break
                    if be.is_empty(cell):
                        continue
                    I2 = I - frozenset(S) - exp
                    if t == T:
                        if I2:
                            continue
                        terms.append(cell)
                        continue
                    if _is_failed(spec, I2, t + 1):
                        continue
                    nxt = X(t + 1, I2)
                    if be.is_empty(nxt):
                        continue
                    term = be.intersect(cell, be.pre(nxt))
                    if not be.is_empty(term):
                        terms.append(term)
            for term in terms:
                res = be.union(res, term)
            res = be.simplify(res, context=(t, tuple(sorted(I))))
        memo[key] = res
        return res

    layers = reachable_layers(spec, be)
    for t in range(T, -1, -1):
        for I in layers[t]:
            X(t, I)
        if progress is not None:
            progress(t, time.perf_counter() - t0)
    entries = {k: v for k, v in memo.items()}
    stats = {"seconds": time.perf_counter() - t0, "entries": len(entries),
             "max_size": max((be.size(v) for v in entries.values()), default=0),
             "exact": be.exact}
    return FeasibleSetTable(spec, be, entries, table_hash(spec, be), stats)


@dataclass(frozen=True)
class Classification:
    status: str
    instant: int | None = None

    @property
    def violated(self):
        return self.status == VIOLATED


def classify_prefix(spec, system, table, trace):
    """Violated iff some ``x_k`` of the prefix lies outside ``X_k^{I_k}``.

    ``I_k`` comes from the semantic induced sequence; the first offending
    instant is reported.
    """
    if trace.start_instant != 0:
        raise ValueError("prefix must start at instant 0")
    table.check(spec, system)
    for k, (x, I) in enumerate(induced_sequence_semantic(spec, trace)):
        if k > spec.horizon:
            break
        if not table.contains(k, I, x):
            return Classification(VIOLATED, k)
    return Classification(FEASIBLE, None)


__all__ = ["FeasibleSetTable", "compute_feasible_table", "classify_prefix", "reachable_index_sets",
           "reachable_layers", "outcome_cells", "Classification", "VIOLATED", "FEASIBLE",
           "TableMismatchError", "MissingEntryError", "FailedTaskError", "U"]
