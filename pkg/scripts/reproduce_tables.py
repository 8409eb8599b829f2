"""Run the shipped configs and print estimates next to the published tables.

Usage::

    python3 scripts/reproduce_tables.py            # all tables
    python3 scripts/reproduce_tables.py --table 3  # one table
    python3 scripts/reproduce_tables.py --reuse    # read existing results/*.csv

Results go to ``results/`` (or ``$POLYMKV_OUTPUT_DIR``) as the configs say.
"""

import argparse
import csv
from pathlib import Path

from polymkv.cli import load_config, run
from polymkv.problems import TABLE1, TABLE2, TABLE3_C, TABLE3_RHO

ROOT = Path(__file__).resolve().parent.parent
CONFIGS = ROOT / "configs"

TABLES = {
    1: [("liquidation_opt", "opt"), ("liquidation_bench", "bench"), ("liquidation_q", "q"),
        ("liquidation_rlmc", "rlmc"), ("liquidation_cr", "cr"),
        ("liquidation_branch_opt", "opt"), ("liquidation_branch_bench", "bench")],
    2: [("selection_opt", "opt"), ("selection_q", "q")],
    3: [("systemic_rho_q", "q"), ("systemic_rho_rlmc", "rlmc"), ("systemic_c_q", "q"), ("systemic_c_rlmc", "rlmc")],
}


def _rows(name, reuse):
    cfg = load_config(CONFIGS / f"{name}.cfg")
    path = ROOT / cfg.output
    if not (reuse and path.exists()):
        run(cfg, path)
    with open(path) as fh:
        return cfg, list(csv.DictReader(line for line in fh if not line.startswith("#")))


def _reference(table, cfg, key, x):
    if table == 1:
        b0 = float(cfg.params.get("b0", 0.1))
        T = float(cfg.params.get("horizon", 1.0))
        return TABLE1[(b0, T)][x][key]
    if table == 2:
        return TABLE2[(0.1, 1.0)][x][0 if key == "opt" else 1]
    col = {"rlmc": 0, "cr": 1, "q": 2, "bench": 3}[key]
    return (TABLE3_RHO if cfg.sweep_param == "rho" else TABLE3_C)[x][col]


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--table", type=int, choices=sorted(TABLES))
    ap.add_argument("--reuse", action="store_true", help="use existing result CSVs when present")
    args = ap.parse_args(argv)
    for table in [args.table] if args.table else sorted(TABLES):
        print(f"table {table}")
        print(f"{'config':28s} {'param':>10s} {'estimate':>10s} {'std_err':>9s} {'published':>10s} {'diff':>8s}")
        for name, key in TABLES[table]:
            cfg, rows = _rows(name, args.reuse)
            for r in rows:
                x = float(r["sweep_value"]) if r["sweep_value"] else float(cfg.params.get("gamma0", 0.1))
                est, ref = float(r["estimate"]), _reference(table, cfg, key, x)
                label = f"{cfg.sweep_param or 'gamma0'}={x:g}"
                print(f"{name:28s} {label:>10s} {est:10.4f} {float(r['std_error']):9.4f} {ref:10.3f} "
                      f"{est - ref:+8.4f}")
        print()


if __name__ == "__main__":
    main()
