"""Run the kernel gate and the multiplier check on deliberately wrong kernels.

    python3 scripts/negative_controls.py
"""

from genshift.analysis import multiplier_check
from genshift.cli import MULTIPLIER_MEMBERS, resolve_function
from genshift.polybasis import JacobiIndex
from genshift.shift import KernelSpec, lemma1_selftest
from genshift.space import SigmaWeight

VARIANTS = {
    "default": KernelSpec(),
    "sigma squared": KernelSpec(sigma=SigmaWeight(exponent=2.0)),
    "sigma = 1 - u": KernelSpec(sigma=SigmaWeight(form="one_minus")),
    "unit cosfactor": KernelSpec(cosfactor_name="unit"),
    "idx_y a + 1": KernelSpec(idx_y=JacobiIndex(1.0, 4.0)),
    "idx_y b + 1": KernelSpec(idx_y=JacobiIndex(0.0, 5.0)),
    "idx_x - 1": KernelSpec(idx_x=JacobiIndex(1.0, 1.0)),
}


def main():
    members = [resolve_function(label) for label in MULTIPLIER_MEMBERS]
    print(f"{'kernel':16s} {'identity':>10s} {'unit':>10s} {'product':>10s} {'multiplier':>11s}  verdict")
    for name, spec in VARIANTS.items():
        rep = lemma1_selftest(spec)
        mult = multiplier_check(spec, members)
        verdict = "accepted" if rep.pass_ and mult["pass"] else "rejected"
        print(
            f"{name:16s} {rep.max_err_identity:10.2e} {rep.max_err_unit:10.2e} "
            f"{rep.max_err_product:10.2e} {mult['max_rel_err']:11.2e}  {verdict}"
        )


if __name__ == "__main__":
    main()
