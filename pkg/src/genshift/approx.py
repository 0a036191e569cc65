"""Best approximation by polynomials of degree <= n - 1 in the weighted L_{p,alpha} metric."""

from __future__ import annotations

import csv
import io
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import chebyshev as C

from scipy.optimize import linprog

from .polybasis import panel_rule
from .space import NORM_NODES, FunctionHandle, SigmaWeight, WeightParams, golden_argmax, lp_norm, sign_changes

LAWSON_MAXITER = 500
STAGNATION_TOL = 1e-9
IRLS_MAXITER = 500
IRLS_DAMPING = 0.5
RESIDUAL_FLOOR = 1e-14
EXCHANGE_ROUNDS = 8
EXCHANGE_TOL = 1e-9
EXCHANGE_TOL_LP = 1e-6
MIN_PANEL_NODES = 16
NOISE_FLOOR = 1e-13
SUP_OVERSAMPLE = 4
HIGHS_OPTIONS = {"primal_feasibility_tolerance": 1e-10, "dual_feasibility_tolerance": 1e-10}


class ApproximationError(RuntimeError):
    pass


class SolverWarning(UserWarning):
    """An iterative solver stopped without meeting its tolerance."""


@dataclass(frozen=True)
class PolyCoeffs:
    """Polynomial in the Chebyshev basis of the first kind."""

    coeffs: tuple

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def __call__(self, x):
        return C.chebval(np.asarray(x, dtype=float), self.coeffs)


@dataclass
class ErrorSequence:
    n_values: np.ndarray
    errors: np.ndarray
    f_label: str
    w: WeightParams
    raw: np.ndarray | None = None
    metadata: dict = field(default_factory=dict)

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(f"# f={self.f_label} {self.w.tag()}\n")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["n", "E_n"])
        for n, e in zip(self.n_values, self.errors):
            writer.writerow([int(n), repr(float(e))])
        return buf.getvalue()


@dataclass
class _Discretization:
    x: np.ndarray
    qw: np.ndarray | None  # quadrature weights; None for the sup norm
    scale: np.ndarray  # sigma(x)^alpha
    fx: np.ndarray


def discretize(
    f: FunctionHandle, n: int, w: WeightParams, sw: SigmaWeight, density: int = 1, extra=()
) -> _Discretization:
    """Sample points for degree n - 1 problems: about 8n + 64 of them, times ``density``.

    The sup norm uses Chebyshev points plus the function's breakpoints and the
    ``extra`` points; finite p uses graded Gauss panels split at the breakpoints
    and at ``extra``, so sums approximate integrals.
    """
    count = (8 * n + 64) * density
    if w.is_sup:
        # odd number of extreme points: contains -1, 0 and 1 exactly
        x = -np.cos(np.arange(count + 1) * np.pi / count)
        x[0], x[count // 2], x[-1] = -1.0, 0.0, 1.0
        more = [b for b in (*f.breakpoints, *extra) if -1 < b < 1]
        if more:
            x = np.unique(np.concatenate([x, more]))
        qw = None
    else:
        breaks = [b for b in (*f.breakpoints, *extra) if -1 < b < 1]
        panels = 1 + len(set(breaks))
        rule = panel_rule(breaks, max(MIN_PANEL_NODES, -(-count // panels)), grading=2)
        x, qw = np.asarray(rule.nodes), np.asarray(rule.weights)
    scale = sw(x) ** w.alpha
    fx = np.asarray(f(x), dtype=float)
    if not np.all(np.isfinite(fx)):
        raise ApproximationError(f"{f.label} is not finite on the discretisation grid")
    return _Discretization(x, qw, scale, fx)


def _weighted_lstsq(A, b, rowweights):
    sw = np.sqrt(rowweights)
    coef, _, rank, _ = np.linalg.lstsq(A * sw[:, None], b * sw, rcond=None)
    if rank < A.shape[1]:
        raise ApproximationError(f"discretised system is rank deficient ({rank} < {A.shape[1]})")
    return coef


def _discrete_error(resid, d: _Discretization, p: float) -> float:
    r = np.abs(resid * d.scale)
    if math.isinf(p):
        return float(np.max(r))
    top = float(np.max(r))
    if top == 0:
        return 0.0
    return top * math.fsum(((r / top) ** p * d.qw).tolist()) ** (1 / p)


def _lawson(A, d: _Discretization, u0=None):
    """Lawson's iteration for min max |scale * (f - A c)|.

    Returns the best coefficients seen, the max error, and the weighted L2
    lower bound certified by the final weights.
    """
    vf = d.fx
    v2 = d.scale**2
    npts = A.shape[0]
    u = np.full(npts, 1.0 / npts) if u0 is None else u0 / u0.sum()
    best_c, best_err, lower = None, math.inf, 0.0
    prev = math.inf
    for _ in range(LAWSON_MAXITER):
        c = _weighted_lstsq(A, vf, u * v2)
        r = np.abs((vf - A @ c) * d.scale)
        err = float(np.max(r))
        lower = max(lower, math.sqrt(float(np.sum(u * r * r))))
        if err < best_err:
            best_c, best_err = c, err
        if err == 0 or best_err - lower <= STAGNATION_TOL * best_err:
            break
        if abs(prev - err) <= STAGNATION_TOL * err and best_err - lower <= 1e-6 * best_err:
            break
        prev = err
        u = u * r
        total = u.sum()
        if total == 0:
            break
        u = u / total
    return best_c, best_err, lower


def _irls(A, d: _Discretization, p: float, c0=None):
    """Iteratively reweighted least squares for sum q |scale (f - A c)|^p."""
    v2 = d.scale**2
    if c0 is None:
        c = _weighted_lstsq(A, d.fx, d.qw * v2)
    else:
        c = np.asarray(c0, dtype=float)
    best_c, best_err = c, _discrete_error(d.fx - A @ c, d, p)
    damping = IRLS_DAMPING if p < 2 else 0.0
    for _ in range(IRLS_MAXITER):
        r = np.abs((d.fx - A @ c) * d.scale)
        floor = RESIDUAL_FLOOR * max(1.0, float(np.max(r)))
        rw = np.maximum(r, floor) ** (p - 2)
        c_new = _weighted_lstsq(A, d.fx, d.qw * v2 * rw)
        c = damping * c + (1 - damping) * c_new
        err = _discrete_error(d.fx - A @ c, d, p)
        improved = best_err - err
        if err < best_err:
            best_c, best_err = c, err
        if abs(improved) <= STAGNATION_TOL * max(best_err, 1e-300):
            break
    return best_c, best_err


def _correction_data(A, d: _Discretization):
    """Weighted matrix, least-squares start and the normalised remainder.

    The linear programs solve for a correction to a least-squares fit with a
    right-hand side of unit size, so solver tolerances act relative to the
    approximation error rather than to the size of f.
    """
    SA = A * d.scale[:, None]
    b = d.fx * d.scale
    c0 = np.linalg.lstsq(SA, b, rcond=None)[0]
    rem = b - SA @ c0
    size = float(np.max(np.abs(rem)))
    return SA, c0, rem, size


def _linprog_sup(A, d: _Discretization):
    """Exact discrete minimax: min h subject to |scale (f - A c)| <= h.

    Returns the coefficients, their discrete error and the optimal value.
    """
    n = A.shape[1]
    SA, c0, rem, size = _correction_data(A, d)
    if size == 0:
        return c0, 0.0, 0.0
    b = rem / size
    ones = np.ones((b.size, 1))
    res = linprog(
        np.r_[np.zeros(n), 1.0],
        A_ub=np.block([[SA, -ones], [-SA, -ones]]),
        b_ub=np.r_[b, -b],
        bounds=[(None, None)] * n + [(0, None)],
        method="highs",
        options=HIGHS_OPTIONS,
    )
    if res.status != 0:
        raise ApproximationError(f"minimax linear program failed: {res.message}")
    c = c0 + size * res.x[:n]
    return c, _discrete_error(d.fx - A @ c, d, math.inf), size * float(res.fun)


def _linprog_l1(A, d: _Discretization):
    """Exact discrete weighted L1 fit, solved through its dual

        max b.y  subject to  (scale A)^T y = 0,  |y_i| <= q_i,

    whose equality multipliers are minus the optimal coefficients.
    """
    SA, c0, rem, size = _correction_data(A, d)
    if size == 0:
        return c0, 0.0
    res = linprog(
        -rem / size,
        A_eq=SA.T,
        b_eq=np.zeros(SA.shape[1]),
        bounds=np.column_stack([-d.qw, d.qw]),
        method="highs",
        options=HIGHS_OPTIONS,
    )
    if res.status != 0:
        raise ApproximationError(f"L1 linear program failed: {res.message}")
    c = c0 - size * np.asarray(res.eqlin.marginals)
    return c, _discrete_error(d.fx - A @ c, d, 1.0)


def default_method(w: WeightParams) -> str:
    if w.is_sup or w.p == 1:
        return "linprog"
    if w.p == 2:
        return "lstsq"
    return "irls"


def _residual(f, c, w, sw):
    def r(x):
        return (f(x) - C.chebval(x, c)) * sw(x) ** w.alpha

    return r


def _sup_error(f, c, w, sw, d: _Discretization):
    """Sup of the weighted residual: dense sampling, then golden refinement on
    both sides of every sampled local maximum.

    Returns the error, the refined maximisers and their values.
    """
    r = _residual(f, c, w, sw)
    h = lambda x: np.abs(r(x))
    m = SUP_OVERSAMPLE * d.x.size
    x = np.unique(np.concatenate([d.x, -np.cos(np.arange(m + 1) * np.pi / m)]))
    vals = h(x)
    if not np.all(np.isfinite(vals)):
        raise ApproximationError(f"{f.label} residual is not finite")
    best = float(np.max(vals))
    i = np.nonzero((vals[1:-1] >= vals[:-2]) & (vals[1:-1] >= vals[2:]))[0] + 1
    if i.size == 0:
        return best, np.empty(0), np.empty(0)
    # a cusp at a sample can hide a peak on either side, so refine both halves
    xs, vs = golden_argmax(h, np.concatenate([x[i - 1], x[i]]), np.concatenate([x[i], x[i + 1]]))
    return max(best, float(np.max(vs))), xs, vs


def _lp_error(f, c, w, sw):
    """Weighted L_p norm of the residual, with panels split at its sign changes."""
    r = _residual(f, c, w, sw)
    roots = sign_changes(r, f.breakpoints)
    return lp_norm(lambda x: np.abs(r(x)), w.p, tuple(f.breakpoints) + roots, NORM_NODES), roots


def _solve(method, A, d, w, warm_c):
    if method == "linprog":
        return _linprog_l1(A, d)
    if method == "lstsq":
        c = _weighted_lstsq(A, d.fx, d.qw * d.scale**2)
        return c, _discrete_error(d.fx - A @ c, d, 2.0)
    return _irls(A, d, w.p, warm_c)


def best_approx(
    f: FunctionHandle,
    n: int,
    w: WeightParams,
    sw: SigmaWeight,
    *,
    density: int = 1,
    warm: PolyCoeffs | None = None,
    method: str | None = None,
    return_bounds: bool = False,
):
    """Best approximant of degree <= n - 1 and its weighted error.

    Methods: ``"linprog"`` solves the p = 1 and p = inf problems exactly as
    linear programs; ``"lstsq"`` is the p = 2 normal solve; ``"lawson"``
    (p = inf only) and ``"irls"`` (finite p, damped below p = 2) are the
    iterative reweighting schemes.

    The discrete problem is refined by exchange rounds: for p = inf the
    residual's local maxima join the grid, for finite p its sign changes
    become panel breaks. The returned error is the norm of the returned
    polynomial's residual on [-1, 1], so it never undercuts the true error.
    ``return_bounds`` adds a certified lower bound (the discrete minimax, or
    Lawson's weighted L2 bound) for p = inf and None otherwise.
    """
    if n < 1:
        raise ValueError("n must be a positive integer")
    method = method or default_method(w)
    valid = {
        "linprog": w.is_sup or w.p == 1,
        "lawson": w.is_sup,
        "lstsq": w.p == 2,
        "irls": not w.is_sup,
    }
    if not valid.get(method, False):
        raise ValueError(f"method {method!r} does not apply to {w.tag()}")
    d = discretize(f, n, w, sw, density)
    A = C.chebvander(d.x, n - 1)
    if method == "lawson":
        u0 = None
        if warm is not None:
            u0 = np.maximum(np.abs((d.fx - warm(d.x)) * d.scale), RESIDUAL_FLOOR)
        c, disc, lower = _lawson(A, d, u0)
        err, _, _ = _sup_error(f, c, w, sw, d)
        if err > 0 and (disc - lower) > 1e-6 * disc:
            warnings.warn(f"Lawson gap {(disc - lower) / disc:.2e} for {f.label}, n={n}", SolverWarning, stacklevel=2)
        return _result(c, err, lower, return_bounds)

    warm_c = None
    if warm is not None and method == "irls":
        warm_c = np.zeros(n)
        k = min(n, len(warm.coeffs))
        warm_c[:k] = warm.coeffs[:k]
    best_c, best_err, lower = None, math.inf, None
    floor = NOISE_FLOOR * max(1.0, float(np.max(np.abs(d.fx))))
    extra: tuple = ()
    prev = math.inf
    for _ in range(EXCHANGE_ROUNDS):
        if w.is_sup:
            c, disc, bound = _linprog_sup(A, d)
            lower = bound if lower is None else max(lower, bound)
            err, peaks, values = _sup_error(f, c, w, sw, d)
        else:
            c, disc = _solve(method, A, d, w, warm_c)
            err, roots = _lp_error(f, c, w, sw)
        if err < best_err:
            best_c, best_err = c, err
        if err <= floor:
            break
        if w.is_sup:
            # only points where the residual beats the discrete level join the grid
            violators = peaks[values > disc * (1 + EXCHANGE_TOL)]
            if err - disc <= EXCHANGE_TOL * err or violators.size == 0:
                break
            extra = extra + tuple(violators.tolist())
        else:
            # the integral form has no certificate; stop once successive rounds agree
            if abs(prev - err) <= EXCHANGE_TOL_LP * err or roots == extra:
                break
            prev = err
            extra = roots
        d = discretize(f, n, w, sw, density, extra)
        A = C.chebvander(d.x, n - 1)
        warm_c = c
    if lower is not None:
        best_err = max(best_err, lower)
    return _result(best_c, best_err, lower, return_bounds)


def _result(c, err, lower, return_bounds):
    poly = PolyCoeffs(tuple(float(v) for v in c))
    if return_bounds:
        return poly, err, lower
    return poly, err


def error_sequence(
    f: FunctionHandle, n_values, w: WeightParams, sw: SigmaWeight, *, density: int = 1, method: str | None = None
) -> ErrorSequence:
    """E_n(f) over increasing ``n_values`` with warm starts and running minima."""
    n_values = np.asarray(n_values, dtype=int)
    if n_values.ndim != 1 or n_values.size == 0 or np.any(np.diff(n_values) <= 0) or n_values[0] < 1:
        raise ValueError("n_values must be an increasing sequence of positive integers")
    raw = []
    warm = None
    for n in n_values:
        poly, err = best_approx(f, int(n), w, sw, density=density, warm=warm, method=method)
        raw.append(err)
        warm = poly
    raw = np.array(raw)
    return ErrorSequence(n_values, np.minimum.accumulate(raw), f.label, w, raw=raw)
