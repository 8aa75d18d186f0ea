"""Set backends shared by the feasible-set recursion and the monitor.

Both algorithms are written against a small interface (lift a predicate
region, boolean operations, emptiness, inclusion, one-step pre/post images).
``PolytopeBackend`` realises it exactly on unions of polytopes for affine
systems, or through an :class:`OuterApproximation` when one is given;
``GridBackend`` on finite transition systems, where sets are frozensets of
cell ids.
"""
from __future__ import annotations

import numpy as np

from .geometry import (AffineSystem, Region, post_image, pre_image,
                       region_from_json, region_to_json)


class PartBudgetError(RuntimeError):
    """A set exceeded the configured number of convex parts."""


class PolytopeBackend:
    kind = "polytope"

    def __init__(self, system, max_parts=256, merge=True, approx=None):
        self.system = system
        self.max_parts = max_parts
        self.merge = merge
        self.approx = approx
        self._lift = {}
        self._pre = {}

    @property
    def n(self):
        return self.system.n

    def full(self):
        return self.system.domain

    def empty(self):
        return Region.empty(self.n)

    def lift(self, region):
        hit = self._lift.get(id(region))
        if hit is None or hit[0] is not region:
            hit = (region, region & self.system.domain)
            self._lift[id(region)] = hit
        return hit[1]

    def intersect(self, a, b):
        return a & b

    def union(self, a, b):
        return a | b

    def difference(self, a, b):
        return a - b

    def is_empty(self, s):
        return s.is_empty()

    def is_subset(self, a, b):
        return a.is_subset(b)

    def contains(self, s, x):
        return s.contains(x)

    def singleton(self, x):
        return Region.point(x)

    def pre(self, s):
        hit = self._pre.get(id(s))
        if hit is None or hit[0] is not s:
            img = pre_image(self.system, s) if self.approx is None else self.approx.pre(self.system, s)
            hit = (s, img)
            self._pre[id(s)] = hit
        return hit[1]

    def post(self, s):
        if self.approx is not None:
            return self.approx.post(self.system, s)
        return post_image(self.system, s)

    @property
    def exact(self):
        return self.approx is None

    def simplify(self, s, context=None):
        if self.approx is None:
            out = s.simplify(merge=self.merge)
        else:
            # overlapping parts are harmless here and pruning them costs quadratic LP work
            out = s.simplify(merge=False, subsume=False)
        if len(out.parts) > self.max_parts:
            where = f" at {context}" if context is not None else ""
            raise PartBudgetError(f"{len(out.parts)} parts exceed the budget of {self.max_parts}{where}")
        return out

    def size(self, s):
        return len(s.parts)

    def bounding_box(self, s):
        return s.bounding_box()

    def contains_points(self, s, X):
        return s.contains_points(X)

    def to_json(self, s):
        return region_to_json(s)

    def from_json(self, obj):
        return region_from_json(obj, self.n)

    def describe(self):
        d = {"kind": self.kind, "system": self.system.to_json()}
        if self.approx is not None:
            d["approx"] = self.approx.describe()
        return d


class GridSystem:
    """Finite transition system whose states are labelled points of ``R^n``.

    ``successors[c]`` lists the cells reachable in one step from cell ``c``.
    """

    def __init__(self, points, successors, initial=0):
        self.points = np.atleast_2d(np.asarray(points, dtype=float))
        self.successors = tuple(tuple(sorted(set(int(j) for j in s))) for s in successors)
        if len(self.successors) != self.points.shape[0]:
            raise ValueError("one successor list per cell is required")
        for c, s in enumerate(self.successors):
            if not s:
                raise ValueError(f"cell {c} has no successor")
            if min(s) < 0 or max(s) >= len(self.successors):
                raise ValueError(f"cell {c} has an out-of-range successor")
        self.initial = int(initial)
        self._index = {tuple(p): k for k, p in enumerate(self.points)}
        if len(self._index) != len(self.successors):
            raise ValueError("cell points must be distinct")
        preds = [[] for _ in self.successors]
        for c, s in enumerate(self.successors):
            for j in s:
                preds[j].append(c)
        self.predecessors = tuple(tuple(p) for p in preds)

    @property
    def n(self):
        return self.points.shape[1]

    @property
    def n_cells(self):
        return self.points.shape[0]

    def cell_of(self, x):
        k = self._index.get(tuple(np.asarray(x, dtype=float).ravel()))
        if k is None:
            raise KeyError(f"state {x} is not a grid cell")
        return k

    def to_json(self):
        return {"points": self.points.tolist(), "successors": [list(s) for s in self.successors],
                "initial": self.initial}

    @classmethod
    def from_json(cls, obj):
        return cls(obj["points"], obj["successors"], obj.get("initial", 0))


class GridBackend:
    kind = "grid"

    def __init__(self, grid):
        self.system = grid
        self._full = frozenset(range(grid.n_cells))
        self._lift = {}

    @property
    def n(self):
        return self.system.n

    def full(self):
        return self._full

    def empty(self):
        return frozenset()

    def lift(self, region):
        hit = self._lift.get(id(region))
        if hit is None or hit[0] is not region:
            mask = region.contains_points(self.system.points)
            hit = (region, frozenset(np.flatnonzero(mask).tolist()))
            self._lift[id(region)] = hit
        return hit[1]

    def intersect(self, a, b):
        return a & b

    def union(self, a, b):
        return a | b

    def difference(self, a, b):
        return a - b

    def is_empty(self, s):
        return not s

    def is_subset(self, a, b):
        return a <= b

    def contains(self, s, x):
        try:
            return self.system.cell_of(x) in s
        except KeyError:
            return False

    def singleton(self, x):
        return frozenset([self.system.cell_of(x)])

    def pre(self, s):
        preds = self.system.predecessors
        return frozenset(p for c in s for p in preds[c])

    def post(self, s):
        succ = self.system.successors
        return frozenset(j for c in s for j in succ[c])

    def simplify(self, s, context=None):
        return s

    def size(self, s):
        return len(s)

    def bounding_box(self, s):
        if not s:
            return None
        pts = self.system.points[sorted(s)]
        return np.column_stack([pts.min(axis=0), pts.max(axis=0)])

    def contains_points(self, s, X):
        return np.array([self.contains(s, x) for x in np.atleast_2d(X)], dtype=bool)

    def to_json(self, s):
        return sorted(s)

    def from_json(self, obj):
        return frozenset(obj)

    exact = True

    def describe(self):
        return {"kind": self.kind, "system": self.system.to_json()}


def as_backend(system):
    """Backend for an :class:`AffineSystem`, a :class:`GridSystem` or a backend."""
    if isinstance(system, (PolytopeBackend, GridBackend)):
        return system
    if isinstance(system, AffineSystem):
        return PolytopeBackend(system)
    if isinstance(system, GridSystem):
        return GridBackend(system)
    raise TypeError(f"no set backend for {type(system).__name__}")
