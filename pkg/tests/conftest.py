import numpy as np
import pytest

from stmon.feasible import compute_feasible_table
from stmon.geometry import AffineSystem, ConvexPolytope, Region
from stmon.scenarios import build_drone_model, builtin_scenario


def random_polytope(rng, dim=2, rows=None, scale=3.0):
    """Bounded random polytope around a random centre (box rows plus random cuts)."""
    c = rng.uniform(-scale, scale, dim)
    half = rng.uniform(0.5, scale, dim)
    P = ConvexPolytope.box(np.column_stack([c - half, c + half]))
    k = int(rng.integers(0, 4)) if rows is None else rows
    if k:
        N = rng.normal(size=(k, dim))
        off = N @ c + rng.uniform(0.1, 1.5, k) * np.linalg.norm(N, axis=1)
        P = P.add_rows(N, off)
    return P


def random_region(rng, dim=2, parts=None):
    k = int(rng.integers(1, 4)) if parts is None else parts
    return Region([random_polytope(rng, dim) for _ in range(k)], dim)


def random_affine(rng, n=2, m=1, box=5.0):
    A = np.eye(n) + rng.normal(scale=0.4, size=(n, n))
    B = rng.normal(size=(n, m))
    c = rng.normal(scale=0.3, size=n)
    U = Region.box([[-1.0, 1.0]] * m)
    X = Region.box([[-box, box]] * n)
    return AffineSystem(A, B, c, U, X)


@pytest.fixture(scope="session")
def drone():
    return build_drone_model()


@pytest.fixture(scope="session")
def drone_table(drone):
    sys, spec = drone
    return compute_feasible_table(spec, sys)


@pytest.fixture(scope="session")
def spacecraft_run():
    from stmon.report import build_report

    sc = builtin_scenario("spacecraft")
    table = compute_feasible_table(sc.spec(), sc.backend())
    return sc, table, build_report(sc, table=table)
