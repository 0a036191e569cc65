"""Fitted exponents of E_n and omega(f, 1/n) for every corpus member at each weight.

    python3 scripts/rates_table.py [--n-max 64] [--out rates.csv]
"""

import argparse
import csv
import sys

from genshift.analysis import coincidence_report, default_n_values, theorem_data
from genshift.shift import default_kernel
from genshift.space import INF, WeightParams, corpus

WEIGHTS = (WeightParams(INF, 1.0), WeightParams(2, 1.0), WeightParams(1, 0.75))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n-max", type=int, default=64)
    ap.add_argument("--out", default="-")
    args = ap.parse_args()
    spec = default_kernel()
    n = default_n_values(args.n_max)
    out = sys.stdout if args.out == "-" else open(args.out, "w", newline="", encoding="utf-8")
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["f", "w", "lambda_E", "lambda_H", "gap", "status"])
    for w in WEIGHTS:
        for f in corpus():
            rep = coincidence_report(f, w, theorem_data(spec, f, w, n))
            le = rep.lambda_E.lam if rep.lambda_E else float("nan")
            lh = rep.lambda_H.lam if rep.lambda_H else float("nan")
            writer.writerow([f.label, w.tag(), f"{le:.4f}", f"{lh:.4f}", f"{abs(le - lh):.4f}", rep.status])
            out.flush()
    if out is not sys.stdout:
        out.close()


if __name__ == "__main__":
    main()
