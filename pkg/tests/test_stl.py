import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from stmon.geometry import Region, region_is_subset
from stmon.oracle import random_instance
from stmon.parser import SpecSyntaxError, format_spec, parse_spec
from stmon.scenarios import DRONE_FORMULA
from stmon.stl import (G, U, FailedTaskError, LinearPredicate, SpecError, StlSpec, SubFormula, Trace,
                       effective_indices, evaluate_original_until, evaluate_trace,
                       induced_sequence_semantic, induced_sequence_update, remaining_formula,
                       update_index_set, update_outcome_cells)


def same(a, b):
    return region_is_subset(a, b) and region_is_subset(b, a)


@pytest.fixture(scope="module")
def spec():
    return parse_spec(DRONE_FORMULA, 2, ["z", "v"])


def zslab(lo, hi):
    return Region.box([[lo, hi], [-np.inf, np.inf]])


# -- parsing -------------------------------------------------------------------

def test_parse_eventually(spec):
    one = parse_spec("F[0,20] (z in [0,20])", 2, ["z", "v"])
    f = one[1]
    assert one.n == 1 and f.op == U and (f.a, f.b) == (0, 20)
    assert same(f.h1, Region.full(2))
    assert same(f.h2, zslab(0, 20))


def test_parse_drone_task(spec):
    assert spec.n == 3 and spec.horizon == 50
    assert [(f.a, f.b) for f in spec.subformulae] == [(0, 20), (0, 20), (40, 50)]
    assert same(spec[3].h1, zslab(30, 60)) and same(spec[3].h2, zslab(55, 60))


def test_parse_true_and_original_until():
    g = parse_spec("G[0,5] TRUE", 1)
    assert g[1].op == G and same(g[1].h1, Region.full(1))
    s = parse_spec("(x1 >= 1) origU[3,7] (x1 >= 4)", 1)
    assert [(f.op, f.a, f.b) for f in s.subformulae] == [(G, 0, 3), (U, 3, 7)]
    assert same(s[1].h1, Region.box([[1, np.inf]]))
    assert same(s[2].h1, Region.box([[1, np.inf]])) and same(s[2].h2, Region.box([[4, np.inf]]))


def test_parse_errors():
    with pytest.raises(SpecSyntaxError) as e:
        parse_spec("G[0,5] (x1 >= 1", 1)
    assert e.value.line == 1
    with pytest.raises(SpecError):
        parse_spec("G[5,1] TRUE", 1)
    with pytest.raises(SpecError):
        parse_spec("G[0,5] (x3 >= 1)", 2)
    with pytest.raises(SpecError):
        parse_spec("G[0,5] (x1 >= 1 & x1 <= 0)", 1)


def test_named_regions():
    s = parse_spec("G[0,3] !Box", 2, regions={"Box": {"box": [[0, 1], [0, 1]]}})
    assert not s[1].h1.contains([0.5, 0.5]) and s[1].h1.contains([2.0, 0.5])


def test_predicate_type():
    p = LinearPredicate((1.0, -2.0), 3.0)
    assert p.holds([5.0, 1.0]) and not p.holds([4.0, 1.0])
    assert p.region().contains([5.0, 1.0])
    with pytest.raises(SpecError):
        LinearPredicate((0.0, 0.0), 1.0)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**6))
def test_format_parse_round_trip(seed):
    _, spec = random_instance(seed)
    back = parse_spec(format_spec(spec), spec.state_dim)
    assert back.n == spec.n
    for f, g in zip(spec.subformulae, back.subformulae):
        assert (f.op, f.a, f.b) == (g.op, g.a, g.b)
        assert same(f.h1, g.h1)
        assert (f.h2 is None and g.h2 is None) or same(f.h2, g.h2)
    assert format_spec(back) == format_spec(spec)


# -- index sets ------------------------------------------------------------------

def test_effective_indices(spec):
    p = effective_indices(spec, 45)
    assert (p.active, p.past, p.future) == ({3}, {1, 2}, set())
    p = effective_indices(spec, 0)
    assert (p.active, p.past, p.future) == ({1, 2}, set(), {3})
    assert p.active_u == {1, 2} and p.active_g == set()
    g = parse_spec("G[0,9] TRUE", 1)
    for t in range(10):
        p = effective_indices(g, t)
        assert (p.active, p.past, p.future) == ({1}, set(), set())
    with pytest.raises(SpecError):
        effective_indices(spec, 51)


def test_update_index_set(spec):
    assert update_index_set(spec, {1, 2, 3}, 5, [18, 0]) == {3}
    assert update_index_set(spec, set(), 5, [70, 0]) == frozenset()
    assert update_index_set(spec, {3}, 45, [57, 1]) == frozenset()
    assert update_index_set(spec, {3}, 45, [50, 1]) == {3}
    g = parse_spec("G[0,4] TRUE", 1)
    assert update_index_set(g, {1}, 3, [0.0]) == {1}
    assert update_index_set(g, {1}, 4, [0.0]) == frozenset()


def test_outcome_cells_examples(spec):
    cells = update_outcome_cells(spec, {3}, 30)
    assert len(cells) == 1 and cells[0][1] == {3}
    cells = update_outcome_cells(spec, {3}, 45)
    assert sorted(sorted(I) for _, I in cells) == [[], [3]]
    cells = dict((I, c) for c, I in update_outcome_cells(spec, {1, 2, 3}, 5))
    assert set(cells) == {frozenset({3}), frozenset({1, 3}), frozenset({2, 3}), frozenset({1, 2, 3})}
    assert same(cells[frozenset({3})], zslab(15, 20))
    assert cells[frozenset({2, 3})].contains([10, 0]) and cells[frozenset({1, 3})].contains([25, 0])


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6))
def test_outcome_cells_partition_the_space(seed):
    grid, spec = random_instance(seed)
    rng = np.random.default_rng(seed)
    t = int(rng.integers(0, spec.horizon + 1))
    I = frozenset(i for i in spec.all_indices if rng.random() < 0.7)
    cells = update_outcome_cells(spec, I, t)
    X = rng.uniform(-2, 10, size=(1000, 2))
    member = np.array([c.contains_points(X) for c, _ in cells])
    assert np.all(member.sum(axis=0) == 1)
    for x, k in zip(X[:200], member.argmax(axis=0)[:200]):
        assert cells[k][1] == update_index_set(spec, I, t, x)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 10**6))
def test_update_never_grows(seed):
    _, spec = random_instance(seed)
    rng = np.random.default_rng(seed)
    for _ in range(20):
        I = frozenset(i for i in spec.all_indices if rng.random() < 0.6)
        t = int(rng.integers(0, spec.horizon + 1))
        assert update_index_set(spec, I, t, rng.uniform(-1, 9, 2)) <= I


def test_remaining_formula(spec):
    assert remaining_formula(spec, spec.all_indices, 0) == spec
    r = remaining_formula(spec, {3}, 45)
    assert r.n == 1 and (r[1].a, r[1].b) == (45, 50)
    assert same(r[1].h1, zslab(30, 60)) and same(r[1].h2, zslab(55, 60))
    assert remaining_formula(spec, {3}, 30)[1] == spec[3]
    assert remaining_formula(spec, set(), 7) is None
    with pytest.raises(FailedTaskError):
        remaining_formula(spec, {1}, 21)


# -- semantics -------------------------------------------------------------------

def test_evaluate_trace():
    g = parse_spec("G[0,2] (x1 in [0,10])", 1)
    assert evaluate_trace(g, Trace([1.0, 2.0, 3.0]))
    assert not evaluate_trace(g, Trace([1.0, 2.0, 11.0]))
    taut = parse_spec("TRUE U[0,4] TRUE", 1)
    assert evaluate_trace(taut, Trace(np.random.default_rng(0).normal(size=5)))
    with pytest.raises(SpecError):
        evaluate_trace(g, Trace([1.0, 2.0]))


def test_until_witness_must_satisfy_hold_set():
    u = parse_spec("(x1 <= 5) U[0,2] (x1 >= 3)", 1)
    assert evaluate_trace(u, Trace([0.0, 4.0, 9.0]))
    assert not evaluate_trace(u, Trace([0.0, 1.0, 9.0]))
    # the hold set only has to hold from the window start
    late = parse_spec("(x1 <= 5) U[2,3] (x1 >= 3)", 1)
    assert evaluate_trace(late, Trace([9.0, 9.0, 4.0, 0.0]))


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 10**6))
def test_original_until_desugaring(seed):
    rng = np.random.default_rng(seed)
    a = int(rng.integers(0, 5))
    b = int(rng.integers(a, 8))
    lo1, lo2 = (float(v) for v in rng.uniform(-1, 1, 2))
    s = parse_spec(f"(x1 >= {lo1!r}) origU[{a},{b}] (x1 >= {lo2!r})", 1)
    tr = Trace(rng.uniform(-2, 2, b + 1))
    ref = evaluate_original_until(Region.box([[lo1, np.inf]]), Region.box([[lo2, np.inf]]), a, b, tr)
    assert evaluate_trace(s, tr) == ref


def test_induced_sequence_examples(spec):
    z = [2, 6, 12, 18] + [18 + 2 * k for k in range(1, 47)]
    tr = Trace(np.column_stack([z, np.zeros(len(z))]))
    seq = induced_sequence_semantic(spec, tr)
    assert seq[0][1] == spec.all_indices
    assert all(I == {3} for _, I in seq[4:40])
    upd = induced_sequence_update(spec, tr)
    assert [I for _, I in upd] == [I for _, I in seq]
    assert all(np.array_equal(a[0], b[0]) for a, b in zip(upd, seq))
    g = parse_spec("G[0,5] TRUE && G[0,8] TRUE", 1)
    seq = induced_sequence_semantic(g, Trace(np.zeros(10)))
    assert [sorted(I) for _, I in seq] == [[1, 2]] * 6 + [[2]] * 3 + [[]]
    assert [I for _, I in induced_sequence_update(g, Trace(np.zeros(10)))] == [I for _, I in seq]


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 10**6))
def test_update_sequence_equals_semantic_sequence(seed):
    grid, spec = random_instance(seed)
    rng = np.random.default_rng(seed + 1)
    path = [grid.initial]
    for _ in range(spec.horizon):
        path.append(int(rng.choice(grid.successors[path[-1]])))
    tr = Trace(grid.points[path])
    a = [I for _, I in induced_sequence_semantic(spec, tr)]
    b = [I for _, I in induced_sequence_update(spec, tr)]
    assert a == b


def test_stlspec_invariants():
    with pytest.raises(SpecError):
        SubFormula(G, 0, 3, Region.full(1), Region.full(1))
    with pytest.raises(SpecError):
        SubFormula(U, 4, 3, Region.full(1), Region.full(1))
    with pytest.raises(SpecError):
        StlSpec((SubFormula(G, 0, 3, Region.full(2)),), 1)
    s = StlSpec((SubFormula(G, 4, 6, Region.full(1)), SubFormula(G, 1, 2, Region.full(1))), 1)
    assert [f.a for f in s.subformulae] == [1, 4]
    with pytest.raises(SpecError):
        Trace(np.zeros((0, 2)))
