"""Self-triggered online monitoring of discrete-time systems against STL tasks."""
from .backend import GridBackend, GridSystem, PolytopeBackend, as_backend
from .feasible import FeasibleSetTable, classify_prefix, compute_feasible_table
from .geometry import AffineSystem, ConvexPolytope, OuterApproximation, Region
from .monitor import MonitorConfig, MonitorLog, SelfTriggeredMonitor, run_periodic, run_self_triggered
from .parser import parse_spec
from .scenarios import ScenarioFile, builtin_scenario, load_scenario, simulate_plant
from .stl import StlSpec, SubFormula, Trace

__version__ = "0.1.0"

__all__ = ["AffineSystem", "ConvexPolytope", "FeasibleSetTable", "GridBackend", "GridSystem",
           "MonitorConfig", "MonitorLog", "OuterApproximation", "PolytopeBackend", "Region",
           "ScenarioFile", "SelfTriggeredMonitor", "StlSpec", "SubFormula", "Trace", "as_backend",
           "builtin_scenario", "classify_prefix", "compute_feasible_table", "load_scenario",
           "parse_spec", "run_periodic", "run_self_triggered", "simulate_plant"]
