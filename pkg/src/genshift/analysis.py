"""Fourier-Jacobi coefficients, decay-rate fits and the theorem-verification harness."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .approx import ErrorSequence, error_sequence
from .modulus import ModulusCurve, modulus_curve
from .polybasis import eval_jacobi, panel_rule
from .shift import PANEL_NODES, SHIFT_NODES, KernelSpec, shifted
from .space import FunctionHandle, WeightParams, admissible_for

EXPONENT_TOL = 0.15
JACKSON_GROWTH = 1.2
FIT_WINDOW = (4, 64)
HYPOTHESIS_RANGE = (0.2, 1.8)
ZERO_TOL = 1e-12
COEFF_NODES = 128
MULTIPLIER_Y = (-0.5, 0.0, 0.5, 0.9)
MULTIPLIER_MAX_N = 8
MULTIPLIER_TOL = 1e-6
MULTIPLIER_SHIFT_FACTOR = 2


def default_n_values(n_max: int = 64) -> np.ndarray:
    """Every n up to 12, then a thinning grid to ``n_max``; always contains 32, 33 and n_max."""
    grid = set(range(2, 13)) | set(range(14, 33, 2)) | {33} | set(range(36, n_max + 1, 4)) | {n_max}
    return np.array(sorted(n for n in grid if 2 <= n <= n_max))


@dataclass(frozen=True)
class Resolution:
    """Quadrature and sampling settings shared by a harness run; ``scaled(k)`` multiplies all of them."""

    shift_factor: int = 1
    norm_nodes: int = 128
    sup_samples: int = 4097
    approx_density: int = 1
    coeff_nodes: int = COEFF_NODES

    def scaled(self, k: int) -> Resolution:
        return Resolution(
            self.shift_factor * k,
            self.norm_nodes * k,
            (self.sup_samples - 1) * k + 1,
            self.approx_density * k,
            self.coeff_nodes * k,
        )

    def shift_nodes(self, f: FunctionHandle) -> int:
        return self.shift_factor * (PANEL_NODES if f.breakpoints else SHIFT_NODES)

    def norm_kw(self):
        return {"nodes": self.norm_nodes, "samples": self.sup_samples}


# -- Fourier-Jacobi coefficients ---------------------------------------------------------


def fourier_jacobi_coeff(f: FunctionHandle, n: int, spec: KernelSpec, nodes: int = COEFF_NODES) -> float:
    """a_n(f) = int_{-1}^{1} f(x) P_n(x) sigma(x)^2 dx with the x-family polynomials."""
    rule = panel_rule(f.breakpoints, nodes)
    x = np.asarray(rule.nodes)
    vals = f(x) * eval_jacobi(spec.idx_x, n, x) * spec.sigma(x) ** 2
    if not np.all(np.isfinite(vals)):
        raise FloatingPointError(f"coefficient integrand of {f.label} is not finite")
    return math.fsum((vals * rule.weights).tolist())


def multiplier_check(
    spec: KernelSpec,
    functions,
    ys=MULTIPLIER_Y,
    max_n: int = MULTIPLIER_MAX_N,
    resolution: Resolution = Resolution(),
    tol: float = MULTIPLIER_TOL,
) -> dict:
    """Compare a_n(tau_y f) with a_n(f) P_n(y) for the y-family polynomials.

    The error is relative to |a_n(f)|; coefficients that vanish by symmetry
    (below 1e-12 of the largest) are compared against the largest instead.
    """
    rows = []
    worst = 0.0
    for f in functions:
        base = [fourier_jacobi_coeff(f, n, spec, resolution.coeff_nodes) for n in range(max_n + 1)]
        scale = max(abs(b) for b in base)
        for y in ys:
            t = math.acos(y)
            # doubled fixed resolution: the adaptive doubling stalls near tangent breakpoints
            g = shifted(spec, f, t, MULTIPLIER_SHIFT_FACTOR * resolution.shift_nodes(f))
            for n in range(max_n + 1):
                got = fourier_jacobi_coeff(g, n, spec, resolution.coeff_nodes)
                want = base[n] * eval_jacobi(spec.idx_y, n, y)
                denom = abs(base[n]) if abs(base[n]) > ZERO_TOL * scale else scale
                err = abs(got - want) / denom if denom > 0 else abs(got - want)
                worst = max(worst, err)
                rows.append({"f": f.label, "y": y, "n": n, "a_n_shifted": got, "expected": want, "rel_err": err})
    if not np.isfinite(worst):
        worst = math.inf
    return {"max_rel_err": worst, "tol": tol, "pass": bool(worst <= tol), "rows": rows}


# -- rate estimation ----------------------------------------------------------------------


class RateError(ValueError):
    pass


@dataclass
class RateEstimate:
    lam: float
    constant: float
    residual: float
    window: tuple
    direction: str

    def as_dict(self):
        d = asdict(self)
        d["lambda"] = d.pop("lam")
        d["window"] = list(self.window)
        return d


def estimate_rate(xs, ys, direction: str = "decay-in-n") -> RateEstimate:
    """Least-squares power law through (log xs, log ys).

    For ``decay-in-n`` the exponent is the negated slope and the constant is
    max(ys * xs^lambda); for ``growth-in-delta`` it is the slope and
    max(ys / xs^lambda). Either way the fitted inequality holds at every point.
    Values at or below 1e-12 of the largest are dropped as exact zeros.
    """
    if direction not in ("decay-in-n", "growth-in-delta"):
        raise ValueError(f"unknown direction {direction!r}")
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    top = float(np.max(ys)) if ys.size else 0.0
    keep = ys > ZERO_TOL * max(top, 1.0) if top > 0 else np.zeros(ys.shape, bool)
    if keep.sum() < 4:
        raise RateError("fewer than 4 nonzero points")
    lx, ly = np.log(xs[keep]), np.log(ys[keep])
    slope, intercept = np.polyfit(lx, ly, 1)
    resid = float(np.max(np.abs(ly - (slope * lx + intercept))))
    if direction == "decay-in-n":
        lam = -slope
        const = float(np.max(ys[keep] * xs[keep] ** lam))
    else:
        lam = slope
        const = float(np.max(ys[keep] / xs[keep] ** lam))
    return RateEstimate(float(lam), const, resid, (float(xs[keep].min()), float(xs[keep].max())), direction)


# -- theorem harness ----------------------------------------------------------------------


@dataclass
class TheoremData:
    """E_n(f) and omega(f, 1/n) on a common n grid; shared by all theorem checks."""

    f: FunctionHandle
    w: WeightParams
    errors: ErrorSequence
    curve: ModulusCurve

    @property
    def n_values(self):
        return self.errors.n_values

    def omega_at(self, n_values):
        """omega(f, 1/n) for each n, read off the shared curve."""
        lookup = dict(zip(np.round(1.0 / self.curve.deltas).astype(int), self.curve.omegas))
        return np.array([lookup[int(n)] for n in n_values])


def theorem_data(spec: KernelSpec, f: FunctionHandle, w: WeightParams, n_values=None, resolution=Resolution()):
    n_values = default_n_values() if n_values is None else np.asarray(n_values, dtype=int)
    errs = error_sequence(f, n_values, w, spec.sigma, density=resolution.approx_density)
    deltas = np.sort(1.0 / n_values)
    curve = modulus_curve(
        spec, f, w, deltas, nodes=resolution.shift_nodes(f), norm_kw=resolution.norm_kw()
    )
    return TheoremData(f, w, errs, curve)


def _window(data: TheoremData, window=FIT_WINDOW):
    n = data.n_values
    mask = (n >= window[0]) & (n <= window[1])
    return n[mask], data.errors.errors[mask], data.omega_at(n[mask])


def _fit_or_none(xs, ys, direction):
    try:
        return estimate_rate(xs, ys, direction)
    except RateError:
        return None


def _is_zero(v):
    return bool(np.all(np.asarray(v) <= ZERO_TOL))


def _rates(data: TheoremData):
    n, e, om = _window(data)
    return _fit_or_none(n, e, "decay-in-n"), _fit_or_none(1.0 / n, om, "growth-in-delta"), e, om


def _inadmissible(f, w, check):
    return {"f": f.label, "check": check, "w": w.tag(), "status": "inadmissible", "pass": None}


def verify_jackson(spec, f, w, n_values=None, *, data: TheoremData | None = None, resolution=Resolution()) -> dict:
    """E_n / omega(f, 1/n) must stay bounded: the max over n in [33, 64] may not exceed
    1.2 times the max over n in [2, 32]."""
    if not admissible_for(w, "jackson"):
        return _inadmissible(f, w, "jackson")
    data = data or theorem_data(spec, f, w, n_values, resolution)
    n = data.n_values
    e = data.errors.errors
    om = data.omega_at(n)
    ratios = np.where(om > ZERO_TOL, e / np.where(om > ZERO_TOL, om, 1.0), np.nan)
    if _is_zero(e):
        ratios = np.zeros_like(e)
    early = ratios[(n >= 2) & (n <= 32)]
    late = ratios[(n >= 33) & (n <= 64)]
    early_max = float(np.nanmax(early)) if np.any(np.isfinite(early)) else 0.0
    late_max = float(np.nanmax(late)) if np.any(np.isfinite(late)) else 0.0
    finite = np.isfinite(early_max) and np.isfinite(late_max)
    ok = bool(finite and late_max <= JACKSON_GROWTH * early_max + ZERO_TOL)
    return {
        "f": f.label,
        "check": "jackson",
        "w": w.tag(),
        "status": "pass" if ok else "fail",
        "pass": ok,
        "n": n.tolist(),
        "E_n": e.tolist(),
        "omega": om.tolist(),
        "ratios": [None if not np.isfinite(r) else float(r) for r in ratios],
        "max_ratio": float(max(early_max, late_max)),
        "early_max": early_max,
        "late_max": late_max,
    }


def _directional(check, f, w, data, tol):
    lam_e, lam_h, e, om = _rates(data)
    out = {
        "f": f.label,
        "check": check,
        "w": w.tag(),
        "lambda_E": lam_e.as_dict() if lam_e else None,
        "lambda_H": lam_h.as_dict() if lam_h else None,
        "tolerance": tol,
    }
    if _is_zero(e) and _is_zero(om):
        out.update(status="pass", reason="degenerate: both sides vanish", **{"pass": True})
        return out
    # E_n reaching zero means decay faster than any power
    le = lam_e.lam if lam_e else (math.inf if _is_zero(e[-1:]) else None)
    lh = lam_h.lam if lam_h else (math.inf if _is_zero(om) else None)
    if check == "inverse":
        if le is None or not 0 < le < 2:
            out.update(status="out-of-hypothesis", reason="fitted lambda_E outside (0, 2)", **{"pass": None})
            return out
        ok = lh is not None and lh >= le - tol
    else:
        if lh is None or not lh > 0:
            out.update(status="out-of-hypothesis", reason="fitted lambda_H not positive", **{"pass": None})
            return out
        ok = le is not None and le >= lh - tol
    out.update(status="pass" if ok else "fail", **{"pass": bool(ok)})
    return out


def verify_inverse(spec, f, w, n_values=None, *, data=None, resolution=Resolution(), tol=EXPONENT_TOL) -> dict:
    """If E_n <= M n^-lambda with 0 < lambda < 2, omega must decay at least as fast:
    pass iff lambda_H >= lambda_E - tol."""
    if not admissible_for(w, "inverse"):
        return _inadmissible(f, w, "inverse")
    data = data or theorem_data(spec, f, w, n_values, resolution)
    return _directional("inverse", f, w, data, tol)


def verify_direct(spec, f, w, n_values=None, *, data=None, resolution=Resolution(), tol=EXPONENT_TOL) -> dict:
    """Mirror of :func:`verify_inverse`: pass iff lambda_E >= lambda_H - tol."""
    if not admissible_for(w, "direct"):
        return _inadmissible(f, w, "direct")
    data = data or theorem_data(spec, f, w, n_values, resolution)
    return _directional("direct", f, w, data, tol)


@dataclass
class ClassMembershipReport:
    f_label: str
    w: WeightParams
    lambda_E: RateEstimate | None
    lambda_H: RateEstimate | None
    coincide: bool | None
    tolerance: float
    status: str
    extra: dict = field(default_factory=dict)

    def as_dict(self):
        return {
            "f": self.f_label,
            "check": "coincidence",
            "w": self.w.tag(),
            "lambda_E": self.lambda_E.as_dict() if self.lambda_E else None,
            "lambda_H": self.lambda_H.as_dict() if self.lambda_H else None,
            "coincide": self.coincide,
            "tolerance": self.tolerance,
            "status": self.status,
            "pass": self.coincide,
        }


def _in_range(r: RateEstimate | None, lo_hi=HYPOTHESIS_RANGE):
    return r is not None and lo_hi[0] < r.lam < lo_hi[1]


def coincidence_report(f, w, data: TheoremData, tol=EXPONENT_TOL) -> ClassMembershipReport:
    lam_e, lam_h, _, _ = _rates(data)
    if not (_in_range(lam_e) or _in_range(lam_h)):
        return ClassMembershipReport(f.label, w, lam_e, lam_h, None, tol, "out-of-hypothesis")
    if lam_e is None or lam_h is None:
        return ClassMembershipReport(f.label, w, lam_e, lam_h, False, tol, "fail")
    ok = abs(lam_e.lam - lam_h.lam) <= tol
    return ClassMembershipReport(f.label, w, lam_e, lam_h, bool(ok), tol, "pass" if ok else "fail")


def verify_coincidence(
    spec, w, functions, n_values=None, *, data: dict | None = None, resolution=Resolution(), tol=EXPONENT_TOL
) -> list[ClassMembershipReport]:
    """Compare fitted exponents of E_n and omega for every member whose fitted
    lambda (either one) lies in (0.2, 1.8)."""
    if not admissible_for(w, "coincidence"):
        return [ClassMembershipReport(f.label, w, None, None, None, tol, "inadmissible") for f in functions]
    data = data or {}
    out = []
    for f in functions:
        d = data.get(f.label) or theorem_data(spec, f, w, n_values, resolution)
        out.append(coincidence_report(f, w, d, tol))
    return out
