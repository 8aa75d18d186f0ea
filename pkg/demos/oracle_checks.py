"""Cross-check the table, beliefs and trigger times against exhaustive enumeration.

Equivalent to the ``stmon oracle`` subcommands, summarized in one table.
"""
import argparse

from stmon.oracle import check_feasible, check_monitor, parse_seeds, random_instance


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seeds", default="0..99")
    args = ap.parse_args()

    print(f"{'seed':>5} {'cells':>6} {'entries':>8} {'nodes':>6} {'alarms':>7} {'fallbacks':>9}  ok")
    bad = 0
    for s in parse_seeds(args.seeds):
        f = check_feasible(s)
        m, rep = check_monitor(s)
        ok = f["pass"] and rep.ok
        bad += not ok
        cells = random_instance(s)[0].n_cells
        print(f"{s:>5} {cells:>6} {f['entries']:>8} {m['nodes']:>6} {m['alarms']:>7} {m['fallbacks']:>9}  {ok}")
    print(f"\n{bad} failing seeds")


if __name__ == "__main__":
    main()
