"""Command-line entry point: ``stmon precompute|simulate|monitor|oracle|plot-data``."""
from __future__ import annotations

import argparse
import json
import sys
import time

import numpy as np

from .feasible import FeasibleSetTable, compute_feasible_table
from .monitor import ALARM, COMPLETED, FAULT, MonitorConfig, SelfTriggeredMonitor
from .report import Report, build_report, export_report, write_plot_data
from .scenarios import load_scenario
from .trace_io import read_trace_csv, write_trace_csv

EXIT_CODES = {COMPLETED: 0, ALARM: 2, FAULT: 3}
EXIT_EXHAUSTED = 4


def _load_table(scenario, path):
    return FeasibleSetTable.load(path, scenario.spec(), scenario.backend())


def cmd_precompute(args):
    sc = load_scenario(args.scenario)

    def progress(t, secs):
        if args.verbose:
            print(f"  t={t:3d}  {secs:7.2f}s", file=sys.stderr)

    table = compute_feasible_table(sc.spec(), sc.backend(), progress=progress)
    table.save(args.out)
    print(json.dumps({"scenario": sc.name, "out": str(args.out), **table.stats}))
    return 0


def cmd_simulate(args):
    sc = load_scenario(args.scenario)
    if args.trace:
        trace, _ = read_trace_csv(args.trace)
    else:
        trace = sc.trace()
    if args.save_trace:
        write_trace_csv(trace, args.save_trace, sc.variables)
    table = _load_table(sc, args.table) if args.table else None
    rep = build_report(sc, trace, table)
    with open(args.out, "w") as fh:
        json.dump(rep.to_json(), fh, indent=1)
    if args.plot_dir:
        export_report(rep, args.plot_dir)
    print(f"{sc.name}: self-triggered {rep.n_self_triggered} ({rep.self_triggered['status']}), "
          f"periodic {rep.n_periodic} ({rep.periodic['status']}), ratio {rep.ratio}")
    return 0


def cmd_monitor(args, stdin=None, stdout=None):
    """Streaming protocol: ``REQ t`` out, ``t x1 .. xn`` in, ``DEC d TAU k`` out."""
    stdin = stdin or sys.stdin
    stdout = stdout or sys.stdout
    sc = load_scenario(args.scenario)
    table = _load_table(sc, args.table)
    cfg = MonitorConfig(sc.spec(), sc.system, table, args.t_max or sc.t_max, backend=table.backend)
    mon = SelfTriggeredMonitor(cfg)

    def say(line):
        stdout.write(line + "\n")
        stdout.flush()

    while not mon.done:
        t = mon.next_instant
        say(f"REQ {t}")
        line = stdin.readline()
        while line and not line.strip():
            line = stdin.readline()
        if not line:
            mon.exhaust()
            break
        fields = line.split()
        if int(fields[0]) != t:
            say(f"ERR expected instant {t}, got {fields[0]}")
            mon.log.status = FAULT
            break
        x = np.array([float(v) for v in fields[1:]])
        if x.size != cfg.spec.state_dim:
            say(f"ERR expected {cfg.spec.state_dim} coordinates, got {x.size}")
            mon.log.status = FAULT
            break
        d, tau = mon.observe(x)
        if d is not None:
            say(f"DEC {d} TAU {tau or 0}")
    status = mon.log.status
    say(f"STATUS {status} OBS {mon.log.n_observations}")
    return EXIT_CODES.get(status, EXIT_EXHAUSTED)


def cmd_oracle(args):
    from .oracle import check_feasible, check_monitor, parse_seeds

    seeds = parse_seeds(args.seeds)
    out = []
    t0 = time.perf_counter()
    for s in seeds:
        if args.check == "check-feasible":
            out.append(check_feasible(s))
            continue
        summary, _ = check_monitor(s)
        if args.check == "check-theorem1":
            summary["pass"] = summary["theorem_failures"] == 0 and summary["trigger_failures"] == 0
        else:
            summary["pass"] = summary["belief_failures"] == 0 and summary["prediction_failures"] == 0
        out.append(summary)
    doc = {"check": args.check, "seeds": len(seeds), "failed": [r["seed"] for r in out if not r["pass"]],
           "seconds": time.perf_counter() - t0, "results": out}
    text = json.dumps(doc, indent=1)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        print(text)
    return 0 if not doc["failed"] else 1


def cmd_plot_data(args):
    rep = Report.load(args.report)
    for name, path in write_plot_data(rep, args.out).items():
        print(name, path)
    return 0


def build_parser():
    ap = argparse.ArgumentParser(prog="stmon", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("precompute", help="compute the feasible-set table of a scenario")
    p.add_argument("--scenario", required=True, help="scenario file or shipped scenario name")
    p.add_argument("--out", required=True)
    p.add_argument("-v", "--verbose", action="store_true")
    p.set_defaults(func=cmd_precompute)

    p = sub.add_parser("simulate", help="run both monitors on a trace and write a report")
    p.add_argument("--scenario", required=True)
    p.add_argument("--trace", help="trace CSV to monitor (default: simulate the scenario inputs)")
    p.add_argument("--save-trace", help="write the monitored trace to this CSV")
    p.add_argument("--table", help="precomputed table (default: compute it)")
    p.add_argument("--out", required=True, help="report JSON path")
    p.add_argument("--plot-dir", help="also write the plot CSVs here")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("monitor", help="self-triggered monitor over stdin/stdout")
    p.add_argument("--scenario", required=True)
    p.add_argument("--table", required=True)
    p.add_argument("--t-max", type=int, help="override the scenario's T_max")
    p.set_defaults(func=cmd_monitor)

    p = sub.add_parser("oracle", help="per-seed checks against exhaustive enumeration")
    p.add_argument("check", choices=["check-theorem1", "check-prop1", "check-feasible"])
    p.add_argument("--seeds", default="0..99")
    p.add_argument("--out")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("plot-data", help="write plot CSVs from a report")
    p.add_argument("--report", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_plot_data)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())

