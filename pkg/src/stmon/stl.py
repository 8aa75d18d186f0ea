"""Formula types, index-set bookkeeping and trace semantics for the STL fragment.

A specification is a conjunction of sub-formulae ``G[a,b] H`` and
``H1 U[a,b] H2``.  The until is the variant whose witness instant must lie in
``H1`` as well as in ``H2``.  Index sets are frozensets of 1-based positions.
"""
from __future__ import annotations

import hashlib
import itertools
from dataclasses import dataclass, field

import numpy as np

from .geometry import Region

G = "G"
U = "U"


class SpecError(ValueError):
    """Malformed formula or inconsistent dimensions."""


class FailedTaskError(SpecError):
    """A remaining formula was requested for an index set that already failed."""


@dataclass(frozen=True)
class LinearPredicate:
    """Affine predicate ``normal . x >= offset``."""

    normal: tuple
    offset: float

    def __post_init__(self):
        normal = tuple(float(v) for v in np.ravel(self.normal))
        if not any(normal):
            raise SpecError("predicate normal must be non-zero")
        object.__setattr__(self, "normal", normal)
        object.__setattr__(self, "offset", float(self.offset))

    @property
    def dim(self):
        return len(self.normal)

    def holds(self, x):
        return float(np.dot(self.normal, x)) >= self.offset

    def region(self):
        return Region.halfspace(-np.array(self.normal), -self.offset)


@dataclass(frozen=True)
class SubFormula:
    op: str
    a: int
    b: int
    h1: Region
    h2: Region | None = None

    def __post_init__(self):
        if self.op not in (G, U):
            raise SpecError(f"unknown operator {self.op!r}")
        if (self.op == G) != (self.h2 is None):
            raise SpecError("G takes one region, U takes two")
        if not (0 <= self.a <= self.b):
            raise SpecError(f"bad interval [{self.a},{self.b}]")

    @property
    def target(self):
        """Set whose visit discharges an until: ``H1 & H2``."""
        return self.h1 & self.h2 if self.op == U else self.h1

    def shifted(self, start):
        return SubFormula(self.op, start, self.b, self.h1, self.h2)


@dataclass(frozen=True)
class StlSpec:
    subformulae: tuple
    state_dim: int
    variables: tuple = field(default=None, compare=False)

    def __post_init__(self):
        subs = tuple(sorted(self.subformulae, key=lambda f: f.a))
        if not subs:
            raise SpecError("a specification needs at least one sub-formula")
        for f in subs:
            for r in (f.h1, f.h2):
                if r is not None and r.dim != self.state_dim:
                    raise SpecError(f"region dimension {r.dim} != state dimension {self.state_dim}")
        object.__setattr__(self, "subformulae", subs)
        names = self.variables or tuple(f"x{k + 1}" for k in range(self.state_dim))
        if len(names) != self.state_dim:
            raise SpecError("one variable name per state coordinate is required")
        object.__setattr__(self, "variables", tuple(names))

    @property
    def n(self):
        return len(self.subformulae)

    @property
    def horizon(self):
        return max(f.b for f in self.subformulae)

    @property
    def all_indices(self):
        return frozenset(range(1, self.n + 1))

    def __getitem__(self, i):
        """Sub-formula by 1-based index."""
        return self.subformulae[i - 1]

    def _targets(self):
        cache = self.__dict__.get("_target_cache")
        if cache is None:
            cache = [f.target for f in self.subformulae]
            object.__setattr__(self, "_target_cache", cache)
        return cache

    def target(self, i):
        return self._targets()[i - 1]


@dataclass(frozen=True)
class IndexPartition:
    active: frozenset
    past: frozenset
    future: frozenset
    active_u: frozenset
    active_g: frozenset


@dataclass(frozen=True)
class Trace:
    states: np.ndarray
    start_instant: int = 0

    def __post_init__(self):
        X = np.asarray(self.states, dtype=float)
        if X.ndim == 1:
            X = X[:, None]
        if X.shape[0] == 0:
            raise SpecError("a trace needs at least one state")
        object.__setattr__(self, "states", X)

    def __len__(self):
        return self.states.shape[0]

    @property
    def end_instant(self):
        return self.start_instant + len(self) - 1

    def at(self, t):
        return self.states[t - self.start_instant]

    def prefix(self, t):
        """States up to and including instant ``t``."""
        return Trace(self.states[: t - self.start_instant + 1], self.start_instant)


def _check_t(spec, t):
    if not 0 <= t <= spec.horizon:
        raise SpecError(f"instant {t} outside [0, {spec.horizon}]")


def effective_indices(spec, t):
    _check_t(spec, t)
    active, past, future, au, ag = set(), set(), set(), set(), set()
    for i, f in enumerate(spec.subformulae, start=1):
        if t < f.a:
            future.add(i)
        elif t > f.b:
            past.add(i)
        else:
            active.add(i)
            (au if f.op == U else ag).add(i)
    fz = frozenset
    return IndexPartition(fz(active), fz(past), fz(future), fz(au), fz(ag))


def _check_x(spec, x):
    x = np.asarray(x, dtype=float).ravel()
    if x.size != spec.state_dim:
        raise SpecError(f"state has dimension {x.size}, expected {spec.state_dim}")
    return x


def update_index_set(spec, I, t, x):
    """Indices still owed after observing ``x`` at instant ``t``."""
    x = _check_x(spec, x)
    keep = set()
    for i in I:
        f = spec[i]
        if not f.a <= t <= f.b:
            keep.add(i)
        elif f.op == U:
            if not spec.target(i).contains(x):
                keep.add(i)
        elif t != f.b:
            keep.add(i)
    return frozenset(keep)


def expired_g(spec, I, t):
    return frozenset(i for i in I if spec[i].op == G and spec[i].b == t)


def pending_u(spec, I, t):
    return sorted(i for i in I if spec[i].op == U and spec[i].a <= t <= spec[i].b)


def update_outcome_cells(spec, I, t, domain=None):
    """Partition of the state space by the value of ``update_index_set``.

    Returns ``[(cell, I')]`` with pairwise disjoint cells covering ``domain``
    (all of ``R^n`` by default); empty cells are dropped.
    """
    _check_t(spec, t)
    I = frozenset(I)
    full = domain if domain is not None else Region.full(spec.state_dim)
    base = I - expired_g(spec, I, t)
    act = pending_u(spec, I, t)
    cells = []
    for pattern in itertools.product((True, False), repeat=len(act)):
        cell = full
        for i, hit in zip(act, pattern):
            cell = cell & spec.target(i) if hit else cell - spec.target(i)
            if cell.is_empty():
                break
        if cell.is_empty():
            continue
        hit = frozenset(i for i, h in zip(act, pattern) if h)
        cells.append((cell, base - hit))
    return cells


def remaining_formula(spec, I, t):
    """Sub-formulae still owed from instant ``t`` given the pending set ``I``.

    Active members have their window start moved to ``t``; members not yet
    started are kept as they are.  Raises ``FailedTaskError`` if a member's
    window already closed.
    """
    _check_t(spec, t)
    subs = []
    for i in sorted(I):
        f = spec[i]
        if t > f.b:
            raise FailedTaskError(f"index {i} expired before instant {t}")
        subs.append(f.shifted(t) if f.a <= t else f)
    if not subs:
        return None
    return StlSpec(tuple(subs), spec.state_dim, spec.variables)


def _sat_window(f, trace):
    """Whether ``trace`` satisfies the single sub-formula ``f``."""
    for t in range(f.a, f.b + 1):
        x = trace.at(t)
        if f.op == G:
            if not f.h1.contains(x):
                return False
        else:
            if not f.h1.contains(x):
                return False
            if f.h2.contains(x):
                return True
    return f.op == G


def evaluate_trace(spec, trace):
    if trace.start_instant > min(f.a for f in spec.subformulae):
        raise SpecError("trace starts after the first window opens")
    if trace.end_instant < spec.horizon:
        raise SpecError(f"trace ends at {trace.end_instant}, horizon is {spec.horizon}")
    return all(_sat_window(f, trace) for f in spec.subformulae)


def evaluate_original_until(h1, h2, a, b, trace):
    """Standard until: ``h2`` at some ``t'`` in ``[a,b]`` and ``h1`` on ``[0,t']``."""
    for t in range(0, b + 1):
        x = trace.at(t)
        if t >= a and h1.contains(x) and h2.contains(x):
            return True
        if not h1.contains(x):
            return False
    return False


def induced_sequence_semantic(spec, trace):
    """Pairs ``(x_k, I_k)`` where ``I_k`` lists indices the prefix before ``k`` has not settled.

    An until index is settled once some earlier instant in its window visits
    ``H1 & H2`` (the shortest hold run, starting at that instant, suffices).
    A globally index is settled once its window has closed.
    """
    start = trace.start_instant
    out = []
    for k in range(start, trace.end_instant + 1):
        I = set()
        for i, f in enumerate(spec.subformulae, start=1):
            if f.op == G:
                if k <= f.b:
                    I.add(i)
                continue
            lo, hi = f.a, min(f.b, k - 1)
            settled = False
            for s in range(max(lo, start), hi + 1):
                # the prefix satisfies the sub-formula with its window started at s
                if _sat_window(SubFormula(U, s, hi, f.h1, f.h2), trace):
                    settled = True
                    break
            if not settled:
                I.add(i)
        out.append((trace.at(k), frozenset(I)))
    return out


def induced_sequence_update(spec, trace):
    I = spec.all_indices
    out = []
    for k in range(trace.start_instant, trace.end_instant + 1):
        x = trace.at(k)
        out.append((x, I))
        if k <= spec.horizon:
            I = update_index_set(spec, I, k, x)
    return out


def spec_hash(spec, extra=""):
    """Stable digest of a specification (and optional extra context)."""
    from .parser import format_spec

    h = hashlib.sha256(format_spec(spec).encode())
    h.update(str(spec.state_dim).encode())
    h.update(extra.encode())
    return h.hexdigest()
