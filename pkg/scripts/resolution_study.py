"""How E_n, omega and the fitted exponents move when every quadrature size is scaled.

    python3 scripts/resolution_study.py [--f abs_x_pow_1] [--p 2] [--alpha 1] [--factors 1 2]
"""

import argparse

from genshift.analysis import Resolution, coincidence_report, default_n_values, theorem_data
from genshift.cli import resolve_function
from genshift.shift import default_kernel
from genshift.space import WeightParams


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--f", default="abs_x_pow_1")
    ap.add_argument("--p", default="inf")
    ap.add_argument("--alpha", type=float, default=1.0)
    ap.add_argument("--factors", type=int, nargs="+", default=[1, 2])
    ap.add_argument("--n-max", type=int, default=64)
    args = ap.parse_args()
    spec = default_kernel()
    f = resolve_function(args.f)
    w = WeightParams(float(args.p), args.alpha)
    n = default_n_values(args.n_max)
    base = None
    for k in args.factors:
        data = theorem_data(spec, f, w, n, Resolution().scaled(k))
        rep = coincidence_report(f, w, data)
        e, om = data.errors.errors, data.omega_at(n)
        if base is None:
            base = (e, om)
            drift = ""
        else:
            de = max(abs(a - b) / max(abs(b), 1e-300) for a, b in zip(e, base[0]))
            do = max(abs(a - b) / max(abs(b), 1e-300) for a, b in zip(om, base[1]))
            drift = f"  max rel change vs x{args.factors[0]}: E_n {de:.1e}, omega {do:.1e}"
        le = rep.lambda_E.lam if rep.lambda_E else float("nan")
        lh = rep.lambda_H.lam if rep.lambda_H else float("nan")
        print(f"x{k}: lambda_E {le:.4f}  lambda_H {lh:.4f}  ({rep.status}){drift}")


if __name__ == "__main__":
    main()
