"""Case-study models, plant simulation and scenario files.

A scenario file is a self-contained JSON description of one monitoring run:
the system, named regions, the formula text, ``T_max``, the initial state and
an input sequence.  The two case studies (a drone taking off through altitude
bands and a chaser spacecraft approaching a target) ship as such files under
``stmon/data``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources

import numpy as np
from scipy.linalg import expm

from .backend import GridSystem, PolytopeBackend, as_backend
from .geometry import AffineSystem, OuterApproximation, Region, region_from_json, region_to_json
from .parser import parse_spec
from .stl import Trace

DRONE_FORMULA = ("F[0,20] (z in [0,20]) && F[0,20] (z in [15,30]) "
                 "&& (z in [30,60]) U[40,50] (z in [55,60])")

# target orbit of the spacecraft study: geostationary radius, minute time units
MU = 3.698e14 * 60.0**2
ORBIT_RADIUS = 42164e3
CHASER_MASS = 500.0
SAMPLING_MIN = 0.5
TAN30 = float(np.tan(np.pi / 6))
DEFAULT_DEBRIS = [[-19.2, -18.4], [-8.6, -7.78]]


class PlantError(RuntimeError):
    """Base class for simulation failures."""


class InputOutOfBounds(PlantError):
    pass


class DomainExit(PlantError):
    """The state left the domain; ``trace`` holds the states up to the exit."""

    def __init__(self, msg, instant, trace):
        super().__init__(msg)
        self.instant = instant
        self.trace = trace


# -- models ------------------------------------------------------------------

def build_drone_model():
    sys = AffineSystem(np.array([[1.0, 0.5], [0.0, 1.0]]), np.array([[0.5], [1.0]]), None,
                       Region.box([[-2.5, 2.5]]), Region.box([[0.0, 100.0], [-5.0, 5.0]]))
    return sys, parse_spec(DRONE_FORMULA, 2, ["z", "v"])


def mean_motion():
    return float(np.sqrt(MU / ORBIT_RADIUS**3))


def cw_matrices(h=SAMPLING_MIN, n=None, mass=CHASER_MASS):
    """Zero-order-hold discretization of the Clohessy-Wiltshire equations.

    State ``(x, y, vx, vy)`` in metres and metres per minute, input the
    thrust in ``(x, y)``.
    """
    n = mean_motion() if n is None else n
    Ac = np.array([[0, 0, 1, 0], [0, 0, 0, 1], [3 * n * n, 0, 0, 2 * n], [0, 0, -2 * n, 0]], float)
    Bc = np.array([[0, 0], [0, 0], [1 / mass, 0], [0, 1 / mass]])
    M = np.zeros((6, 6))
    M[:4, :4] = Ac
    M[:4, 4:] = Bc
    E = expm(M * h)
    return E[:4, :4], E[:4, 4:]


def spacecraft_regions(debris=None):
    debris = DEFAULT_DEBRIS if debris is None else debris
    inf = np.inf
    return {"Goal": Region.box([[-6, 0], [-2, 2], [0, 3], [0, 3]]),
            "Debris": Region.box([list(debris[0]), list(debris[1]), [-inf, inf], [-inf, inf]])}


def spacecraft_formula():
    t = repr(TAN30)
    return (f"F[0,50] Goal && G[0,50] !Debris "
            f"&& G[0,50] (y - {t}*x >= 0 & -y - {t}*x >= 0)")


def build_spacecraft_model(debris=None):
    """Linearized chaser model and task; ``debris`` is an ``[[xlo, xhi], [ylo, yhi]]`` box."""
    A, B = cw_matrices()
    sys = AffineSystem(A, B, None, Region.box([[-3, 3], [-3, 3]]),
                       Region.box([[-100, 0], [-70, 70], [0, 10], [0, 10]]))
    spec = parse_spec(spacecraft_formula(), 4, ["x", "y", "vx", "vy"], spacecraft_regions(debris))
    return sys, spec


# -- simulation --------------------------------------------------------------

def simulate_plant(sys, initial, inputs, horizon=None, tol=1e-9):
    """Iterate ``x+ = A x + B u + c`` from ``initial``.

    ``inputs`` is a sequence of inputs or a controller ``f(t, x) -> u``
    (then ``horizon`` steps are taken).  Inputs outside the input set and
    states outside the domain raise instead of being clipped.
    """
    x = np.asarray(initial, dtype=float).ravel()
    if not sys.domain.contains(x, tol):
        raise DomainExit(f"initial state {x.tolist()} outside the domain", 0, Trace([x]))
    if callable(inputs):
        if horizon is None:
            raise ValueError("a controller needs a horizon")
        steps, ctrl = horizon, inputs
    else:
        seq = np.asarray(inputs, dtype=float).reshape(len(inputs), -1) if len(inputs) else np.zeros((0, sys.m))
        if horizon is not None and len(seq) > horizon:
            raise ValueError(f"{len(seq)} inputs exceed the horizon {horizon}")
        steps = len(seq)
        ctrl = lambda t, _x: seq[t]  # noqa: E731
    states = [x]
    for t in range(steps):
        u = np.atleast_1d(np.asarray(ctrl(t, x), dtype=float))
        if not sys.input_set.contains(u, tol):
            raise InputOutOfBounds(f"input {u.tolist()} at instant {t} outside the input set")
        x = sys.step(x, u)
        states.append(x)
        if not sys.domain.contains(x, tol):
            raise DomainExit(f"state left the domain at instant {t + 1}", t + 1, Trace(states))
    return Trace(np.array(states))


# -- scenario files ----------------------------------------------------------

def _system_to_json(sys):
    if isinstance(sys, GridSystem):
        return {"kind": "grid", **sys.to_json()}
    return {"kind": "affine", **sys.to_json()}


def _system_from_json(obj):
    obj = dict(obj)
    kind = obj.pop("kind", "affine")
    if kind == "grid":
        return GridSystem.from_json(obj)
    if kind != "affine":
        raise ValueError(f"unknown system kind {kind!r}")
    return AffineSystem.from_json(obj)


@dataclass
class ScenarioFile:
    name: str
    system: object
    formula: str
    variables: list
    t_max: int
    initial_state: np.ndarray
    inputs: np.ndarray | None = None
    regions: dict = field(default_factory=dict)
    approx: OuterApproximation | None = None
    notes: dict = field(default_factory=dict)

    def __post_init__(self):
        self.initial_state = np.asarray(self.initial_state, dtype=float).ravel()
        if self.inputs is not None:
            self.inputs = np.asarray(self.inputs, dtype=float).reshape(len(self.inputs), -1)
        n = self.system.n
        if len(self.variables) != n or self.initial_state.size != n:
            raise ValueError("variables and initial state must match the system dimension")
        for name, r in self.regions.items():
            if r.dim != n:
                raise ValueError(f"region {name!r} has dimension {r.dim}, expected {n}")
        self.spec()  # references must resolve

    def spec(self):
        return parse_spec(self.formula, self.system.n, self.variables, self.regions)

    def backend(self):
        if self.approx is not None:
            return PolytopeBackend(self.system, approx=self.approx)
        return as_backend(self.system)

    def trace(self):
        if self.inputs is None:
            raise ValueError(f"scenario {self.name!r} has no input sequence")
        return simulate_plant(self.system, self.initial_state, self.inputs, self.spec().horizon)

    def to_json(self):
        d = {"name": self.name, "system": _system_to_json(self.system),
             "regions": {k: region_to_json(r) for k, r in self.regions.items()},
             "formula": self.formula, "variables": list(self.variables), "t_max": self.t_max,
             "initial_state": self.initial_state.tolist()}
        if self.inputs is not None:
            d["inputs"] = self.inputs.tolist()
        if self.approx is not None:
            d["approx"] = self.approx.describe()
        if self.notes:
            d["notes"] = self.notes
        return d

    @classmethod
    def from_json(cls, obj):
        sys = _system_from_json(obj["system"])
        regions = {k: region_from_json(v, sys.n) for k, v in obj.get("regions", {}).items()}
        approx = obj.get("approx")
        return cls(obj["name"], sys, obj["formula"], obj["variables"], int(obj["t_max"]),
                   obj["initial_state"], obj.get("inputs"), regions,
                   OuterApproximation.from_json(approx) if approx else None, obj.get("notes", {}))

    def save(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_json(), fh, indent=1)

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            return cls.from_json(json.load(fh))


def builtin_scenario(name):
    """Load a shipped scenario (``drone-reference``, ``drone-hover``, ``spacecraft``)."""
    path = resources.files("stmon") / "data" / f"{name}.json"
    if not path.is_file():
        raise KeyError(f"no shipped scenario {name!r}")
    with path.open() as fh:
        return ScenarioFile.from_json(json.load(fh))


def load_scenario(ref):
    """A scenario from a file path, or a shipped one by name."""
    try:
        return builtin_scenario(ref)
    except KeyError:
        return ScenarioFile.load(ref)
