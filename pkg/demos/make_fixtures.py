"""Regenerate the scenario files shipped in ``stmon/data`` and the golden trace.

Run from the repository root: ``python demos/make_fixtures.py``.
"""
import argparse
from pathlib import Path

import numpy as np

from stmon.geometry import OuterApproximation
from stmon.scenarios import (DEFAULT_DEBRIS, DRONE_FORMULA, ScenarioFile, build_drone_model,
                             build_spacecraft_model, spacecraft_formula, spacecraft_regions)
from stmon.trace_io import write_trace_csv

ROOT = Path(__file__).resolve().parents[1]


def drone_scenarios():
    sys, _ = build_drone_model()
    # one 2.5 burn, coast through both altitude bands, brake once inside [55, 60]
    u = np.zeros((50, 1))
    u[0] = 2.5
    u[44] = -2.5
    ref = ScenarioFile("drone-reference", sys, DRONE_FORMULA, ["z", "v"], 10, [2.0, 0.0], u,
                       notes={"inputs": "piecewise-constant reference schedule (configuration)"})
    hover = ScenarioFile("drone-hover", sys, DRONE_FORMULA, ["z", "v"], 10, [0.0, 0.0],
                         np.zeros((50, 1)), notes={"inputs": "hover on the ground, violates the task"})
    return ref, hover


def spacecraft_scenario():
    sys, _ = build_spacecraft_model()
    u = np.zeros((50, 2))
    u[0:10] = [0.0, 1.5]   # raise the lateral drift
    u[30:40] = [-1.5, 0.0]  # trim the closing speed
    return ScenarioFile("spacecraft", sys, spacecraft_formula(), ["x", "y", "vx", "vy"], 10,
                        [-30.0, -14.0, 1.1, 0.66], u, spacecraft_regions(),
                        OuterApproximation(),
                        notes={"debris": f"configuration: box {DEFAULT_DEBRIS} placed 2.3 cm from "
                                         "the reference path at instant 20",
                               "inputs": "piecewise-constant reference schedule (configuration)",
                               "sets": "outer approximation of images (linearized model)"})


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--data", default=ROOT / "src" / "stmon" / "data", type=Path)
    ap.add_argument("--golden", default=ROOT / "tests" / "fixtures" / "spacecraft_reference.csv", type=Path)
    args = ap.parse_args()
    args.data.mkdir(parents=True, exist_ok=True)
    sc = spacecraft_scenario()
    for s in (*drone_scenarios(), sc):
        s.save(args.data / f"{s.name}.json")
        print("wrote", args.data / f"{s.name}.json")
    args.golden.parent.mkdir(parents=True, exist_ok=True)
    write_trace_csv(sc.trace(), args.golden, sc.variables)
    print("wrote", args.golden)


if __name__ == "__main__":
    main()
