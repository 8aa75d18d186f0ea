"""Set algebra over finite unions of convex polytopes.

Every set is kept in half-space form.  A row may be strict (``a.x < d``) so
that complements, and hence set differences, are exact rather than closures.
Rows are scaled so their largest coefficient has magnitude one; that scaling
is idempotent, which keeps printed and re-parsed sets bit-identical.
"""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field

import numpy as np

from .lp import EPS_FEAS, OPTIMAL, UNBOUNDED, feasible_point, lp_max

_RED_TOL = 1e-10
_DUP_DECIMALS = 12


class GeometryError(ValueError):
    """Dimension mismatch or malformed set literal."""


def _check_dim(d1, d2):
    if d1 != d2:
        raise GeometryError(f"dimension mismatch: {d1} vs {d2}")


def _scale_rows(A, b):
    scale = np.abs(A).max(axis=1) if A.shape[1] else np.zeros(A.shape[0])
    zero = scale == 0.0
    scale = np.where(zero, 1.0, scale)
    # adding 0.0 turns negative zeros into positive ones
    return A / scale[:, None] + 0.0, b / scale + 0.0, zero


class Halfspace:
    """The set ``{x : normal . x <= offset}`` (``<`` when ``strict``)."""

    __slots__ = ("normal", "offset", "strict")

    def __init__(self, normal, offset, strict=False):
        normal = np.asarray(normal, dtype=float).ravel()
        if not np.any(normal):
            raise GeometryError("halfspace normal must be non-zero")
        self.normal = normal
        self.offset = float(offset)
        self.strict = bool(strict)

    @property
    def dim(self):
        return self.normal.size

    def contains(self, x, tol=EPS_FEAS):
        slack = self.offset - self.normal @ np.asarray(x, dtype=float)
        return slack > tol if self.strict else slack >= -tol

    def complement(self):
        return Halfspace(-self.normal, -self.offset, not self.strict)

    def __repr__(self):
        op = "<" if self.strict else "<="
        return f"Halfspace({self.normal.tolist()} . x {op} {self.offset})"


class ConvexPolytope:
    """Intersection of finitely many half-spaces in ``R^dim``.

    No rows means the whole space.  Instances are treated as immutable.
    """

    __slots__ = ("A", "b", "strict", "dim", "_point", "_empty", "_reduced", "_bbox")

    def __init__(self, A, b, strict=None, dim=None):
        A = np.asarray(A, dtype=float)
        if dim is None:
            if A.ndim != 2:
                raise GeometryError("dim required for an unconstrained polytope")
            dim = A.shape[1]
        A = A.reshape(-1, dim)
        b = np.asarray(b, dtype=float).reshape(-1)
        if b.size != A.shape[0]:
            raise GeometryError("A and b disagree on the number of rows")
        strict = (np.zeros(b.size, dtype=bool) if strict is None
                  else np.asarray(strict, dtype=bool).reshape(-1))
        A, b, zero = _scale_rows(A, b)
        infeasible = False
        if zero.any():
            bad = (b[zero] < 0) | (strict[zero] & (b[zero] <= 0))
            infeasible = bool(bad.any())
            A, b, strict = A[~zero], b[~zero], strict[~zero]
        if infeasible:
            A = np.zeros((1, dim))
            b = np.array([-1.0])
            strict = np.zeros(1, dtype=bool)
        for arr in (A, b, strict):
            arr.setflags(write=False)
        self.A, self.b, self.strict, self.dim = A, b, strict, int(dim)
        self._point = None
        self._empty = True if infeasible else None
        self._reduced = None
        self._bbox = None

    # -- constructors -----------------------------------------------------
    @classmethod
    def full(cls, dim):
        return cls(np.zeros((0, dim)), np.zeros(0), dim=dim)

    @classmethod
    def box(cls, bounds):
        bounds = np.asarray(bounds, dtype=float).reshape(-1, 2)
        n = bounds.shape[0]
        rows, rhs = [], []
        for k, (lo, hi) in enumerate(bounds):
            if np.isfinite(hi):
                rows.append(np.eye(n)[k])
                rhs.append(hi)
            if np.isfinite(lo):
                rows.append(-np.eye(n)[k])
                rhs.append(-lo)
        return cls(np.array(rows).reshape(-1, n), np.array(rhs), dim=n)

    @classmethod
    def point(cls, x):
        x = np.asarray(x, dtype=float).ravel()
        return cls.box(np.column_stack([x, x]))

    @classmethod
    def from_halfspaces(cls, halfspaces, dim):
        hs = list(halfspaces)
        if not hs:
            return cls.full(dim)
        return cls(np.array([h.normal for h in hs]), np.array([h.offset for h in hs]),
                   np.array([h.strict for h in hs]), dim=dim)

    # -- queries ----------------------------------------------------------
    @property
    def halfspaces(self):
        return [Halfspace(a, d, s) for a, d, s in zip(self.A, self.b, self.strict)]

    @property
    def n_rows(self):
        return self.b.size

    def contains(self, x, tol=EPS_FEAS):
        x = np.asarray(x, dtype=float).ravel()
        _check_dim(x.size, self.dim)
        if self.b.size == 0:
            return True
        slack = self.b - self.A @ x
        return bool(np.all(slack[~self.strict] >= -tol) and np.all(slack[self.strict] > tol))

    def contains_points(self, X, tol=EPS_FEAS):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if self.b.size == 0:
            return np.ones(X.shape[0], dtype=bool)
        slack = self.b[None, :] - X @ self.A.T
        ok = np.where(self.strict[None, :], slack > tol, slack >= -tol)
        return ok.all(axis=1)

    def feasible_point(self):
        if self._empty is None:
            self._point = feasible_point(self.A, self.b, self.strict)
            self._empty = self._point is None
        return self._point

    def is_empty(self):
        if self._empty is None:
            self.feasible_point()
        return self._empty

    def intersect(self, other):
        _check_dim(self.dim, other.dim)
        if self.b.size == 0:
            return other
        if other.b.size == 0:
            return self
        return ConvexPolytope(np.vstack([self.A, other.A]), np.concatenate([self.b, other.b]),
                              np.concatenate([self.strict, other.strict]), dim=self.dim)

    def add_rows(self, A, b, strict=None):
        A = np.asarray(A, dtype=float).reshape(-1, self.dim)
        b = np.asarray(b, dtype=float).reshape(-1)
        s = np.zeros(b.size, dtype=bool) if strict is None else np.asarray(strict, dtype=bool)
        return ConvexPolytope(np.vstack([self.A, A]), np.concatenate([self.b, b]),
                              np.concatenate([self.strict, s]), dim=self.dim)

    def support(self, c):
        """``sup c.x`` over the closure; ``+inf`` when unbounded, ``-inf`` when empty."""
        if self.is_empty():
            return -np.inf
        status, val, _ = lp_max(c, self.A, self.b, x0=self._point)
        return np.inf if status == UNBOUNDED else val

    def bounding_box(self):
        if self._bbox is None:
            lo = np.array([-self.support(-e) for e in np.eye(self.dim)])
            hi = np.array([self.support(e) for e in np.eye(self.dim)])
            self._bbox = np.column_stack([lo, hi])
        return self._bbox

    def excludes_row(self, a, d, strict):
        """True iff the polytope lies inside the row ``a.x <= d`` (``<`` if strict)."""
        return self.add_rows(-np.asarray(a)[None, :], [-d], [not strict]).is_empty()

    def is_subset(self, other):
        _check_dim(self.dim, other.dim)
        if self.is_empty():
            return True
        # a witness point clearly outside ``other`` settles it without LPs
        x = self._point
        if other.b.size and np.any(other.A @ x - other.b > 1e-7):
            return False
        for a, d, s in zip(other.A, other.b, other.strict):
            val = self.support(a)
            if val < d - 1e-7:
                continue
            if not self.excludes_row(a, d, s):
                return False
        return True

    def reduce(self):
        """Equivalent polytope with duplicate and redundant rows removed."""
        if self._reduced is not None:
            return self._reduced
        if self.is_empty():
            self._reduced = _EMPTY_CACHE.setdefault(self.dim, _make_empty(self.dim))
            return self._reduced
        A, b, s = _dedupe(self.A, self.b, self.strict)
        x0 = self._point
        keep = np.ones(b.size, dtype=bool)
        for j in range(b.size):
            keep[j] = False
            if keep.any():
                status, val, _ = lp_max(A[j], A[keep], b[keep], x0=x0)
            else:
                status, val = UNBOUNDED, np.inf
            if status == OPTIMAL:
                redundant = val < b[j] - _RED_TOL if s[j] else val <= b[j] + _RED_TOL
            else:
                redundant = False
            keep[j] = not redundant
        out = ConvexPolytope(A[keep], b[keep], s[keep], dim=self.dim)
        out._point, out._empty, out._reduced = x0, False, out
        self._reduced = out
        return out

    # -- structural equality ---------------------------------------------
    def _key(self):
        return (self.dim, self.A.tobytes(), self.b.tobytes(), self.strict.tobytes())

    def __eq__(self, other):
        if not isinstance(other, ConvexPolytope):
            return NotImplemented
        return (self.dim == other.dim and np.array_equal(self.A, other.A)
                and np.array_equal(self.b, other.b) and np.array_equal(self.strict, other.strict))

    def __hash__(self):
        return hash(self._key())

    def __repr__(self):
        return f"ConvexPolytope(dim={self.dim}, rows={self.b.size})"


def _make_empty(dim):
    p = ConvexPolytope(np.zeros((1, dim)), [-1.0], dim=dim)
    p._empty = True
    return p


_EMPTY_CACHE: dict = {}


def _dedupe(A, b, s):
    """Keep the tightest row per normal direction."""
    if b.size <= 1:
        return A, b, s
    keys = np.round(A, _DUP_DECIMALS)
    best: dict = {}
    for j in range(b.size):
        k = keys[j].tobytes()
        i = best.get(k)
        if i is None:
            best[k] = j
            continue
        if b[j] < b[i] - 1e-12 or (abs(b[j] - b[i]) <= 1e-12 and s[j] and not s[i]):
            best[k] = j
    idx = np.array(sorted(best.values()))
    return A[idx], b[idx], s[idx]


def _as_poly(p):
    return p if isinstance(p, ConvexPolytope) else ConvexPolytope(*p)


class Region:
    """Finite union of convex polytopes; the empty union is the empty set."""

    __slots__ = ("parts", "dim", "__weakref__")

    def __init__(self, parts=(), dim=None, check=True):
        parts = [_as_poly(p) for p in parts]
        if dim is None:
            if not parts:
                raise GeometryError("dim required for an empty region")
            dim = parts[0].dim
        for p in parts:
            _check_dim(p.dim, dim)
        if check:
            parts = [p for p in parts if not p.is_empty()]
        self.parts = tuple(parts)
        self.dim = int(dim)

    @classmethod
    def full(cls, dim):
        return cls([ConvexPolytope.full(dim)], dim, check=False)

    @classmethod
    def empty(cls, dim):
        return cls([], dim, check=False)

    @classmethod
    def box(cls, bounds):
        p = ConvexPolytope.box(bounds)
        return cls([p], p.dim)

    @classmethod
    def point(cls, x):
        p = ConvexPolytope.point(x)
        return cls([p], p.dim, check=False)

    @classmethod
    def halfspace(cls, normal, offset, strict=False):
        h = Halfspace(normal, offset, strict)
        return cls([ConvexPolytope.from_halfspaces([h], h.dim)], h.dim)

    def is_empty(self):
        return not self.parts

    def contains(self, x, tol=EPS_FEAS):
        x = np.asarray(x, dtype=float).ravel()
        _check_dim(x.size, self.dim)
        return any(p.contains(x, tol) for p in self.parts)

    def contains_points(self, X, tol=EPS_FEAS):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        out = np.zeros(X.shape[0], dtype=bool)
        for p in self.parts:
            out |= p.contains_points(X, tol)
        return out

    def intersect(self, other):
        return region_intersect(self, other)

    def difference(self, other):
        return region_difference(self, other)

    def union(self, other):
        _check_dim(self.dim, other.dim)
        return Region(self.parts + other.parts, self.dim, check=False)

    def complement(self):
        return region_difference(Region.full(self.dim), self)

    def is_subset(self, other):
        return region_is_subset(self, other)

    def reduce(self):
        return Region([p.reduce() for p in self.parts], self.dim, check=False)

    def simplify(self, merge=True, subsume=True):
        return simplify_region(self, merge, subsume)

    def bounding_box(self):
        if not self.parts:
            return None
        boxes = np.array([p.bounding_box() for p in self.parts])
        return np.column_stack([boxes[:, :, 0].min(axis=0), boxes[:, :, 1].max(axis=0)])

    def to_json(self):
        return region_to_json(self)

    def __and__(self, other):
        return region_intersect(self, other)

    def __or__(self, other):
        return self.union(other)

    def __sub__(self, other):
        return region_difference(self, other)

    def __eq__(self, other):
        if not isinstance(other, Region):
            return NotImplemented
        return self.dim == other.dim and self.parts == other.parts

    def __hash__(self):
        return hash((self.dim, self.parts))

    def __len__(self):
        return len(self.parts)

    def __repr__(self):
        return f"Region(dim={self.dim}, parts={len(self.parts)})"


# -- set operations ----------------------------------------------------------

def region_intersect(r1, r2):
    """Exact intersection, distributed over parts.

    A part of ``r1`` lying inside a single part of ``r2`` is kept whole
    instead of being paired with every part of ``r2``.
    """
    _check_dim(r1.dim, r2.dim)
    out = []
    multi = len(r2.parts) > 1
    for p in r1.parts:
        if multi and not p.is_empty() and any(p.is_subset(q) for q in r2.parts):
            out.append(p)
            continue
        for q in r2.parts:
            pq = p.intersect(q)
            if not pq.is_empty():
                out.append(pq)
    return Region(out, r1.dim, check=False)


def _poly_minus(P, Q):
    """Pieces of ``P \\ Q`` (pairwise disjoint convex polytopes)."""
    if Q.n_rows == 0:
        return []
    if P.intersect(Q).is_empty():
        return [P]
    Q = Q.reduce()
    pieces = []
    cur = P
    for a, d, s in zip(Q.A, Q.b, Q.strict):
        piece = cur.add_rows(-a[None, :], [-d], [not s])
        if piece.is_empty():
            continue
        pieces.append(piece)
        cur = cur.add_rows(a[None, :], [d], [s])
        if cur.is_empty():
            break
    return pieces


def region_difference(r1, r2):
    """Exact ``r1 \\ r2``; complements of closed rows become strict rows."""
    _check_dim(r1.dim, r2.dim)
    pieces = list(r1.parts)
    for Q in r2.parts:
        nxt = []
        for P in pieces:
            nxt.extend(_poly_minus(P, Q))
        pieces = nxt
        if not pieces:
            break
    return Region(pieces, r1.dim, check=False)


def region_is_empty(r):
    return all(p.is_empty() for p in r.parts)


def _minus_nonempty(P, Qs):
    """Whether ``P`` minus the union of ``Qs`` has any point (depth-first)."""
    if not Qs:
        return True
    Q = Qs[0]
    for piece in _poly_minus(P, Q):
        if _minus_nonempty(piece, Qs[1:]):
            return True
    return False


def region_is_subset(r1, r2):
    """True iff ``r1 \\ r2`` is empty."""
    _check_dim(r1.dim, r2.dim)
    for P in r1.parts:
        if any(P.is_subset(Q) for Q in r2.parts):
            continue
        relevant = [Q for Q in r2.parts if not P.intersect(Q).is_empty()]
        if _minus_nonempty(P, relevant):
            return False
    return True


def region_contains_point(r, x, tol=EPS_FEAS):
    return r.contains(x, tol)


def _envelope(P, Q):
    rows = []
    for X, Y in ((P, Q), (Q, P)):
        for a, d, s in zip(X.A, X.b, X.strict):
            if Y.support(a) <= d + _RED_TOL and (not s or Y.excludes_row(a, d, s)):
                rows.append((a, d, s))
    if not rows:
        return ConvexPolytope.full(P.dim)
    A, b, s = zip(*rows)
    return ConvexPolytope(np.array(A), np.array(b), np.array(s), dim=P.dim)


def _boxes_apart(P, Q):
    bp, bq = P.bounding_box(), Q.bounding_box()
    return bool(np.any(bp[:, 0] > bq[:, 1]) or np.any(bq[:, 0] > bp[:, 1]))


def simplify_region(r, merge=True, subsume=True):
    """Drop redundant rows and parts; merge pairs whose envelope equals their union.

    ``subsume=False`` only removes duplicate parts, skipping the quadratic
    search for parts covered by others (and merging with it).
    """
    parts = [p.reduce() for p in r.parts if not p.is_empty()]
    parts = list(dict.fromkeys(parts))
    if not subsume:
        return Region(parts, r.dim, check=False)
    changed = True
    while changed:
        changed = False
        # drop parts covered by another single part
        i = 0
        while i < len(parts):
            if any(j != i and parts[i].is_subset(parts[j]) for j in range(len(parts))):
                parts.pop(i)
                changed = True
            else:
                i += 1
        if not merge:
            break
        for i, j in itertools.combinations(range(len(parts)), 2):
            P, Q = parts[i], parts[j]
            if _boxes_apart(P, Q):
                continue
            closure_meet = ConvexPolytope(np.vstack([P.A, Q.A]), np.concatenate([P.b, Q.b]),
                                          dim=P.dim)
            if closure_meet.is_empty():
                continue
            env = _envelope(P, Q)
            if env.n_rows == 0:
                continue
            if not _minus_nonempty(env, [P, Q]):
                parts = [p for k, p in enumerate(parts) if k not in (i, j)] + [env.reduce()]
                changed = True
                break
    return Region(parts, r.dim, check=False)


# -- projection and images ---------------------------------------------------

def _clean(A, b, s):
    A, b, zero = _scale_rows(A, b)
    if zero.any():
        bad = (b[zero] < 0) | (s[zero] & (b[zero] <= 0))
        if bad.any():
            n = A.shape[1]
            return np.zeros((1, n)), np.array([-1.0]), np.zeros(1, dtype=bool)
        A, b, s = A[~zero], b[~zero], s[~zero]
    return _dedupe(A, b, s)


def _lp_prune(A, b, s):
    P = ConvexPolytope(A, b, s, dim=A.shape[1])
    if P.is_empty():
        Q = _make_empty(A.shape[1])
        return Q.A, Q.b, Q.strict
    R = P.reduce()
    return np.array(R.A), np.array(R.b), np.array(R.strict)


def _eliminate(A, b, s, elim, prune_above=None, drop=None):
    """Fourier-Motzkin: project ``{z : A z <= b}`` by removing the ``elim`` columns.

    Redundant rows are pruned by LP whenever the system grows past a few
    times the dimension.
    """
    A = np.array(A, dtype=float)
    b = np.array(b, dtype=float)
    s = np.array(s, dtype=bool)
    n = A.shape[1]
    elim = list(elim)
    drop = set(elim) | set(drop or ())
    keep_cols = [k for k in range(n) if k not in drop]
    A, b, s = _clean(A, b, s)
    limit = prune_above if prune_above is not None else 2 * n + 2
    while elim:
        # pick the column with the smallest product of positive/negative rows
        best = None
        for k in elim:
            pos = int(np.sum(A[:, k] > 1e-12))
            neg = int(np.sum(A[:, k] < -1e-12))
            score = pos * neg - pos - neg
            if best is None or score < best[0]:
                best = (score, k)
        k = best[1]
        col = A[:, k]
        P = np.flatnonzero(col > 1e-12)
        N = np.flatnonzero(col < -1e-12)
        Z = np.flatnonzero(np.abs(col) <= 1e-12)
        rows = [A[Z]]
        rhs = [b[Z]]
        st = [s[Z]]
        if P.size and N.size:
            ap = A[P] / col[P][:, None]
            bp = b[P] / col[P]
            an = A[N] / (-col[N])[:, None]
            bn = b[N] / (-col[N])
            rows.append((ap[:, None, :] + an[None, :, :]).reshape(-1, A.shape[1]))
            rhs.append((bp[:, None] + bn[None, :]).reshape(-1))
            st.append((s[P][:, None] | s[N][None, :]).reshape(-1))
        A = np.vstack(rows)
        A[:, k] = 0.0
        b = np.concatenate(rhs)
        s = np.concatenate(st)
        A, b, s = _clean(A, b, s)
        elim.remove(k)
        if b.size > limit:
            A, b, s = _lp_prune(A, b, s)
    return A[:, keep_cols], b, s


def fm_project(poly, keep):
    """Orthogonal projection of ``poly`` onto its first ``keep`` coordinates."""
    if not 0 < keep <= poly.dim:
        raise GeometryError("keep must lie in 1..dim")
    if poly.is_empty():
        return _make_empty(keep)
    if keep == poly.dim:
        return poly
    A, b, s = _eliminate(poly.A, poly.b, poly.strict, range(keep, poly.dim))
    return ConvexPolytope(A, b, s, dim=keep).reduce()


@dataclass(frozen=True, eq=False)
class AffineSystem:
    """``x+ = A x + B u + c`` with ``u`` in ``input_set`` and states in ``domain``."""

    A: np.ndarray
    B: np.ndarray
    c: np.ndarray
    input_set: Region
    domain: Region
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        n = A.shape[0]
        B = np.asarray(self.B, dtype=float).reshape(n, -1)
        c = np.zeros(n) if self.c is None else np.asarray(self.c, dtype=float).reshape(n)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "c", c)
        if A.shape != (n, n):
            raise GeometryError("A must be square")
        _check_dim(self.input_set.dim, B.shape[1])
        _check_dim(self.domain.dim, n)
        if len(self.input_set.parts) != 1 or len(self.domain.parts) != 1:
            raise GeometryError("input set and domain must be single convex polytopes")
        if self.input_set.is_empty() or self.domain.is_empty():
            raise GeometryError("input set and domain must be non-empty")

    @property
    def n(self):
        return self.A.shape[0]

    @property
    def m(self):
        return self.B.shape[1]

    def step(self, x, u):
        return self.A @ np.asarray(x, dtype=float) + self.B @ np.atleast_1d(u) + self.c

    def to_json(self):
        return {"A": self.A.tolist(), "B": self.B.tolist(), "c": self.c.tolist(),
                "input_set": region_to_json(self.input_set),
                "domain": region_to_json(self.domain)}

    @classmethod
    def from_json(cls, obj):
        return cls(np.array(obj["A"], dtype=float), np.array(obj["B"], dtype=float),
                   np.array(obj.get("c") or np.zeros(len(obj["A"])), dtype=float),
                   region_from_json(obj["input_set"]), region_from_json(obj["domain"]))


def _post_part(sys, P):
    n, m = sys.n, sys.m
    U = sys.input_set.parts[0]
    # variables: (x+, x, u)
    rows = [np.hstack([np.zeros((P.n_rows, n)), P.A, np.zeros((P.n_rows, m))]),
            np.hstack([np.zeros((U.n_rows, 2 * n)), U.A])]
    A = np.vstack(rows)
    b = np.concatenate([P.b, U.b])
    s = np.concatenate([P.strict, U.strict])
    E = np.hstack([np.eye(n), -sys.A, -sys.B])
    A, b, s = _eliminate_eq(A, b, s, range(n, 2 * n + m), E, sys.c)
    return ConvexPolytope(A, b, s, dim=n)


def _eliminate_eq(A, b, s, elim, E, e):
    """Substitute equalities, then Fourier-Motzkin the remaining ``elim`` columns."""
    A = np.array(A, dtype=float)
    b = np.array(b, dtype=float)
    E = np.array(E, dtype=float)
    e = np.array(e, dtype=float)
    elim = list(elim)
    dropped = list(elim)
    extra_A, extra_b = [], []
    for r in range(E.shape[0]):
        row, rhs = E[r], e[r]
        cand = [k for k in elim if abs(row[k]) > 1e-12]
        if not cand:
            if np.any(np.abs(row) > 1e-12):
                extra_A += [row, -row]
                extra_b += [rhs, -rhs]
            elif abs(rhs) > 1e-12:
                extra_A.append(np.zeros_like(row))
                extra_b.append(-1.0)
            continue
        k = max(cand, key=lambda c: abs(row[c]))
        f = A[:, k] / row[k]
        A = A - np.outer(f, row)
        b = b - f * rhs
        g = E[r + 1:, k] / row[k]
        E[r + 1:] -= np.outer(g, row)
        e[r + 1:] -= g * rhs
        A[:, k] = 0.0
        elim.remove(k)
    if extra_A:
        A = np.vstack([A, np.array(extra_A)])
        b = np.concatenate([b, extra_b])
        s = np.concatenate([s, np.zeros(len(extra_b), dtype=bool)])
    return _eliminate(A, b, s, elim, drop=dropped)


def post_image(sys, r):
    """One-step forward image of ``r`` under all admissible inputs, within the domain."""
    _check_dim(r.dim, sys.n)
    out = []
    dom = sys.domain.parts[0]
    for P in r.parts:
        img = _post_part(sys, P).intersect(dom)
        if not img.is_empty():
            out.append(img.reduce())
    return Region(out, sys.n, check=False)


def pre_image(sys, target):
    """States of the domain with some admissible input landing in ``target``."""
    _check_dim(target.dim, sys.n)
    n, m = sys.n, sys.m
    U = sys.input_set.parts[0]
    dom = sys.domain.parts[0]
    out = []
    for Q in target.parts:
        A = np.vstack([np.hstack([Q.A @ sys.A, Q.A @ sys.B]),
                       np.hstack([np.zeros((U.n_rows, n)), U.A])])
        b = np.concatenate([Q.b - Q.A @ sys.c, U.b])
        s = np.concatenate([Q.strict, U.strict])
        if m and np.any(sys.B):
            A, b, s = _eliminate(A, b, s, range(n, n + m))
        else:
            A = A[:Q.n_rows, :n]
            b, s = b[:Q.n_rows], s[:Q.n_rows]
        img = ConvexPolytope(A, b, s, dim=n).intersect(dom)
        if not img.is_empty():
            out.append(img.reduce())
    return Region(out, n, check=False)


# -- opt-in outer approximation ----------------------------------------------

def _default_directions(n):
    """Axes and pairwise diagonals."""
    dirs = []
    for i in range(n):
        e = np.zeros(n)
        e[i] = 1.0
        dirs += [e, -e]
    for i, j in itertools.combinations(range(n), 2):
        for si, sj in itertools.product((1.0, -1.0), repeat=2):
            e = np.zeros(n)
            e[i], e[j] = si, sj
            dirs.append(e)
    return np.array(dirs).reshape(-1, n)


def loosen(P, delta, exact_rows=None):
    """Drop rows whose removal moves the boundary by at most ``delta``.

    Rows are tested in order against the rows still kept, so the result
    contains ``P`` and exceeds it by at most ``delta`` along each dropped
    normal.  Rows flagged in ``exact_rows`` are only dropped when redundant.
    The closure is returned.
    """
    if P.is_empty():
        return P
    A, b, _ = _dedupe(P.A, P.b, np.zeros(P.n_rows, dtype=bool))
    exact = np.zeros(b.size, dtype=bool)
    if exact_rows is not None:
        E = ConvexPolytope(exact_rows.A, exact_rows.b, dim=P.dim)
        exact = np.array([np.any(np.all(E.A == a, axis=1) & (E.b <= d)) for a, d in zip(A, b)],
                         dtype=bool).reshape(-1)
    x0 = P.feasible_point()
    keep = np.ones(b.size, dtype=bool)
    for j in range(b.size):
        keep[j] = False
        if not keep.any():
            keep[j] = True
            continue
        status, val, _ = lp_max(A[j], A[keep], b[keep], x0=x0)
        slack = _RED_TOL if exact[j] else delta
        if not (status == OPTIMAL and val <= b[j] + slack):
            keep[j] = True
    out = ConvexPolytope(A[keep], b[keep], dim=P.dim)
    out._point, out._empty = x0, False
    return out


class OuterApproximation:
    """Outer images with a bounded number of rows and parts, for systems where
    exact images grow too many facets (several inputs in four or more
    dimensions).

    An image is bounded by its exact support along the normals of the source
    set carried through the dynamics (plus optional extra ``directions``),
    intersected with the domain and thinned with :func:`loosen`.  With
    ``hull`` set, the pre-image of a set with several parts is a single
    polytope taking the largest support over the parts.  Every result
    contains the exact image, so feasible sets and beliefs built from it are
    supersets of the exact ones.
    """

    kind = "outer"

    def __init__(self, delta=1e-2, post_delta=None, directions=None, hull=True):
        self.delta = float(delta)
        self.post_delta = self.delta / 10 if post_delta is None else float(post_delta)
        self.directions = None if directions is None else np.atleast_2d(np.asarray(directions, dtype=float))
        self.hull = bool(hull)

    def _dirs(self, carried):
        dirs = carried if self.directions is None else np.vstack([carried, self.directions])
        dirs, _, zero = _scale_rows(dirs, np.zeros(dirs.shape[0]))
        return np.unique(np.round(dirs[~zero], _DUP_DECIMALS), axis=0)

    def _finish(self, rows, rhs, dom, delta):
        n = dom.dim
        img = ConvexPolytope(np.array(rows).reshape(-1, n), rhs, dim=n).intersect(dom)
        if img.is_empty():
            return None
        return loosen(img, delta, exact_rows=dom)

    @staticmethod
    def _lifted(sys, Q):
        """``(x, u)`` rows for ``A x + B u + c`` in ``Q``, ``u`` admissible, ``x`` in the domain."""
        n, m = sys.n, sys.m
        U = sys.input_set.parts[0]
        dom = sys.domain.parts[0]
        A = np.vstack([np.hstack([Q.A @ sys.A, Q.A @ sys.B]),
                       np.hstack([np.zeros((U.n_rows, n)), U.A]),
                       np.hstack([dom.A, np.zeros((dom.n_rows, m))])])
        b = np.concatenate([Q.b - Q.A @ sys.c, U.b, dom.b])
        return A, b

    def _supports(self, sys, lifted, dirs):
        """Largest support over the lifted systems per direction (``inf`` if unbounded)."""
        m = sys.m
        best = np.full(len(dirs), -np.inf)
        for A, b in lifted:
            x0 = None
            for k, d in enumerate(dirs):
                if best[k] == np.inf:
                    continue
                status, val, z = lp_max(np.concatenate([d, np.zeros(m)]), A, b, x0=x0)
                if status == OPTIMAL:
                    best[k] = max(best[k], val)
                    x0 = z
                elif status == UNBOUNDED:
                    best[k] = np.inf
                else:
                    break
        return best

    def pre(self, sys, target):
        _check_dim(target.dim, sys.n)
        n = sys.n
        dom = sys.domain.parts[0]
        parts = [Q for Q in target.parts if not Q.is_empty()]
        if any(Q.n_rows == 0 for Q in parts):
            return Region([dom], n, check=False)
        groups = [parts] if self.hull and len(parts) > 1 else [[Q] for Q in parts]
        out = []
        for group in groups:
            dirs = self._dirs(np.vstack([Q.A @ sys.A for Q in group]))
            best = self._supports(sys, [self._lifted(sys, Q) for Q in group], dirs)
            if np.all(best == -np.inf):
                continue
            ok = np.isfinite(best)
            img = self._finish(dirs[ok], best[ok], dom, self.delta)
            if img is not None:
                out.append(img)
        return Region(out, n, check=False)

    def post(self, sys, r):
        _check_dim(r.dim, sys.n)
        n = sys.n
        U = sys.input_set.parts[0]
        dom = sys.domain.parts[0]
        try:
            inv = np.linalg.inv(sys.A)
        except np.linalg.LinAlgError:
            inv = None
        out = []
        for P in r.parts:
            if P.is_empty():
                continue
            carried = P.A @ inv if inv is not None else _default_directions(n)
            rows, rhs = [], []
            for d in self._dirs(carried):
                hp = P.support(sys.A.T @ d)
                hu = U.support(sys.B.T @ d) if sys.m else 0.0
                if np.isfinite(hp) and np.isfinite(hu):
                    rows.append(d)
                    rhs.append(hp + hu + d @ sys.c)
            img = self._finish(rows, rhs, dom, self.post_delta)
            if img is not None:
                out.append(img)
        return Region(out, n, check=False)

    def describe(self):
        d = {"kind": self.kind, "delta": self.delta, "post_delta": self.post_delta, "hull": self.hull}
        if self.directions is not None:
            d["directions"] = self.directions.tolist()
        return d

    @classmethod
    def from_json(cls, obj):
        return cls(obj["delta"], obj.get("post_delta"), obj.get("directions"), obj.get("hull", True))


# -- JSON literals -----------------------------------------------------------

def region_to_json(r):
    parts = []
    for p in r.parts:
        d = {"A": p.A.tolist(), "b": p.b.tolist()}
        if p.strict.any():
            d["strict"] = p.strict.tolist()
        parts.append(d)
    return {"dim": r.dim, "parts": parts}


def region_from_json(obj, dim=None):
    if isinstance(obj, str):
        obj = json.loads(obj)
    if "box" in obj:
        return Region.box(obj["box"])
    if "complement" in obj:
        return region_from_json(obj["complement"], dim).complement()
    d = obj.get("dim", dim)
    parts = []
    for p in obj["parts"]:
        A = np.array(p["A"], dtype=float)
        pd = d if d is not None else (A.shape[1] if A.ndim == 2 and A.size else None)
        if pd is None:
            raise GeometryError("region literal needs 'dim' for unconstrained parts")
        parts.append(ConvexPolytope(A.reshape(-1, pd), p["b"], p.get("strict"), dim=pd))
        d = pd
    if d is None:
        raise GeometryError("region literal needs 'dim' when it has no parts")
    return Region(parts, d)
