"""Trace CSV files: header ``t,<variables>``, one row per instant.

Floats are written with 17 significant digits so that reading a file back
gives the same doubles.
"""
from __future__ import annotations

import csv

import numpy as np

from .stl import Trace


def format_float(v):
    return f"{float(v):.17g}"


def write_trace_csv(trace, path, variables=None):
    X = trace.states
    names = list(variables or [f"x{k + 1}" for k in range(X.shape[1])])
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", *names])
        for k, x in enumerate(X):
            w.writerow([trace.start_instant + k, *map(format_float, x)])


def read_trace_csv(path):
    """Returns ``(trace, variable names)``; instants must be consecutive."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0][0] != "t":
        raise ValueError(f"{path}: first column must be 't'")
    body = [r for r in rows[1:] if r]
    if not body:
        raise ValueError(f"{path}: no states")
    ts = [int(r[0]) for r in body]
    if ts != list(range(ts[0], ts[0] + len(ts))):
        raise ValueError(f"{path}: instants must be consecutive")
    states = np.array([[float(v) for v in r[1:]] for r in body])
    return Trace(states, ts[0]), rows[0][1:]
