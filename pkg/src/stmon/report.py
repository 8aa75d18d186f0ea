"""Run both monitors on a scenario and emit the data behind the case-study plots.

A :class:`Report` is plain JSON-ready data.  :func:`export_report` writes it as
``report.json`` next to a handful of CSV files:

``trajectory.csv``
    every instant of the trace, with the self-triggered observations marked
``observations.csv``
    one row per self-triggered observation
``beliefs.csv``
    bounding box of every predicted belief pair between observations
``predictions.csv``
    for each trigger search, each predicted instant with its safety and a
    flag per named region telling whether the predicted belief meets it
``feasible_slices.csv``
    membership samples of ``X_t^{I_t}`` on a grid over the first two state
    variables (others held at the observed state), at each observation
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .feasible import classify_prefix, compute_feasible_table
from .monitor import ALARM, MonitorConfig, run_periodic, run_self_triggered
from .stl import Trace, induced_sequence_semantic
from .trace_io import format_float


def _iset(I):
    return "{" + ",".join(str(i) for i in sorted(I)) + "}"


@dataclass
class Report:
    scenario: str
    variables: list
    t_max: int
    horizon: int
    self_triggered: dict
    periodic: dict
    table_stats: dict = field(default_factory=dict)
    trajectory: list = field(default_factory=list)
    beliefs: list = field(default_factory=list)
    predictions: list = field(default_factory=list)
    forced: list = field(default_factory=list)
    slices: list = field(default_factory=list)
    alarm_confirmed: bool | None = None
    notes: dict = field(default_factory=dict)

    @property
    def n_self_triggered(self):
        return self.self_triggered["n_observations"]

    @property
    def n_periodic(self):
        return self.periodic["n_observations"]

    @property
    def ratio(self):
        return self.n_self_triggered / self.n_periodic if self.n_periodic else None

    @property
    def forced_instants(self):
        """Observation instants forced by a prediction meeting some named region."""
        return sorted({f["observation"] for f in self.forced})

    def to_json(self):
        return {"scenario": self.scenario, "variables": list(self.variables), "t_max": self.t_max,
                "horizon": self.horizon,
                "counts": {"self_triggered": self.n_self_triggered, "periodic": self.n_periodic,
                           "ratio": self.ratio},
                "self_triggered": self.self_triggered, "periodic": self.periodic,
                "table_stats": self.table_stats, "alarm_confirmed": self.alarm_confirmed,
                "trajectory": self.trajectory, "beliefs": self.beliefs,
                "predictions": self.predictions, "forced": self.forced, "slices": self.slices,
                "notes": self.notes}

    @classmethod
    def from_json(cls, obj):
        return cls(obj["scenario"], obj["variables"], obj["t_max"], obj["horizon"],
                   obj["self_triggered"], obj["periodic"], obj.get("table_stats", {}),
                   obj.get("trajectory", []), obj.get("beliefs", []), obj.get("predictions", []),
                   obj.get("forced", []), obj.get("slices", []), obj.get("alarm_confirmed"),
                   obj.get("notes", {}))

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            return cls.from_json(json.load(fh))


def _box(be, s):
    bb = be.bounding_box(s)
    return None if bb is None else bb.tolist()


def _slice_grid(system, x, points):
    """Sample points over the first two coordinates of the domain, others fixed at ``x``."""
    if hasattr(system, "points"):
        return np.asarray(system.points, dtype=float)
    bb = system.domain.bounding_box()
    axes = [np.linspace(bb[k, 0], bb[k, 1], points) for k in range(min(2, len(x)))]
    mesh = np.meshgrid(*axes, indexing="ij")
    X = np.tile(np.asarray(x, dtype=float), (mesh[0].size, 1))
    for k, m in enumerate(mesh):
        X[:, k] = m.ravel()
    return X


def build_report(scenario, trace=None, table=None, slice_points=21):
    """Monitor ``trace`` (default: the scenario's own) both ways and summarize.

    ``trace`` may also be an empty ``(0, n)`` array, giving a run without
    observations.
    """
    spec = scenario.spec()
    if table is None:
        table = compute_feasible_table(spec, scenario.backend())
    be = table.backend
    cfg = MonitorConfig(spec, scenario.system, table, scenario.t_max, backend=be)
    if trace is None:
        trace = scenario.trace()
    states = trace.states if isinstance(trace, Trace) else np.asarray(trace, dtype=float).reshape(-1, spec.state_dim)
    st = run_self_triggered(cfg, states)
    pe = run_periodic(cfg, states)

    rep = Report(scenario.name, list(scenario.variables), scenario.t_max, spec.horizon,
                 st.to_json(), pe.to_json(), dict(table.stats), notes=dict(scenario.notes))
    if scenario.approx is not None:
        rep.notes["approximation"] = scenario.approx.describe()

    decided = {r.instant: r.decision for r in st.records}
    rep.trajectory = [{"t": t, "state": x.tolist(), "observed": t in decided,
                       "decision": decided.get(t)} for t, x in enumerate(states)]

    regions = {name: be.lift(r) for name, r in scenario.regions.items()}
    for r in st.records:
        trig = r.trigger
        if trig is None:
            continue
        for k, b in enumerate(trig.predictions, start=1):
            chosen = k <= trig.tau
            safe = not (trig.stop == "unsafe" and k == len(trig.predictions))
            meets = {name: any(not be.is_empty(be.intersect(s, reg)) for s, _ in b.pairs)
                     for name, reg in regions.items()}
            rep.predictions.append({"round": r.instant, "instant": r.instant + k, "k": k,
                                    "chosen": chosen, "safe": safe, "meets": meets})
            if chosen:
                for j, (s, I) in enumerate(b.pairs):
                    rep.beliefs.append({"instant": r.instant + k, "round": r.instant, "pair": j,
                                        "index_set": sorted(I), "box": _box(be, s)})
            if not safe:
                for name, hit in meets.items():
                    if hit:
                        rep.forced.append({"region": name, "round": r.instant,
                                           "unsafe_instant": r.instant + k,
                                           "observation": r.instant + trig.tau})

    if len(states):
        tr = Trace(states)
        seq = list(induced_sequence_semantic(spec, tr))
        for r in st.records:
            if r.instant >= len(seq):
                continue
            x, I = seq[r.instant]
            X = _slice_grid(scenario.system, x, slice_points)
            inside = be.contains_points(table.get(r.instant, I), X)
            rep.slices.append({"instant": r.instant, "index_set": sorted(I),
                               "points": X[:, :2].tolist(), "inside": inside.astype(int).tolist()})
        if st.status == ALARM:
            rep.alarm_confirmed = classify_prefix(spec, be, table, tr.prefix(st.alarm_instant)).violated
    return rep


def _write_csv(path, header, rows):
    def cell(v):
        if isinstance(v, (bool, np.bool_)):
            return int(v)
        if isinstance(v, float):
            return format_float(v)
        return "" if v is None else v

    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([cell(v) for v in row])


def write_plot_data(report, out_dir):
    """Write the plot-ready CSV files of ``report`` into ``out_dir``; returns their paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    names = list(report.variables)
    paths = {}

    def emit(name, header, rows):
        paths[name] = out / f"{name}.csv"
        _write_csv(paths[name], header, rows)

    emit("trajectory", ["t", *names, "observed", "decision"],
         ([p["t"], *p["state"], p["observed"], p["decision"]] for p in report.trajectory))
    emit("observations", ["instant", *names, "decision", "tau", "belief_pairs", "belief_size",
                          "fallback", "stop"],
         ([r["instant"], *r["state"], r["decision"], r["tau"], r["belief_pairs"], r["belief_size"],
           r["fallback"], r["stop"]] for r in report.self_triggered["records"]))
    box_cols = [f"{v}_{e}" for v in names for e in ("lo", "hi")]
    emit("beliefs", ["instant", "round", "pair", "index_set", *box_cols],
         ([b["instant"], b["round"], b["pair"], _iset(b["index_set"]),
           *(np.asarray(b["box"], dtype=float).ravel().tolist() if b["box"] else [None] * len(box_cols))]
          for b in report.beliefs))
    regions = sorted({n for p in report.predictions for n in p["meets"]})
    emit("predictions", ["round", "instant", "k", "chosen", "safe", *(f"meets_{n}" for n in regions)],
         ([p["round"], p["instant"], p["k"], p["chosen"], p["safe"], *(p["meets"][n] for n in regions)]
          for p in report.predictions))
    axes = names[:2]
    emit("feasible_slices", ["instant", "index_set", *axes, "inside"],
         ([s["instant"], _iset(s["index_set"]), *pt[:len(axes)], flag]
          for s in report.slices for pt, flag in zip(s["points"], s["inside"])))
    return paths


def export_report(report, path):
    """Write ``report.json`` and the plot CSVs into directory ``path``."""
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "report.json", "w") as fh:
        json.dump(report.to_json(), fh, indent=1)
    paths = write_plot_data(report, out)
    paths["report"] = out / "report.json"
    return paths
