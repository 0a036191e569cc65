"""Weighted L_{p,alpha} spaces on [-1, 1]: norms, admissible parameters, test functions."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .polybasis import panel_rule

INF = math.inf
THEOREMS = ("jackson", "inverse", "direct", "coincidence")

NORM_NODES = 128
SUP_SAMPLES = 4097
ROOT_SAMPLES = 257
ROOT_BISECTIONS = 24
_GOLDEN = (math.sqrt(5) - 1) / 2


@dataclass(frozen=True)
class WeightParams:
    p: float
    alpha: float

    def __post_init__(self):
        if not self.p >= 1:
            raise ValueError(f"p must be at least 1, got {self.p}")

    @property
    def is_sup(self):
        return math.isinf(self.p)

    def tag(self):
        p = "inf" if self.is_sup else f"{self.p:g}"
        return f"p={p},alpha={self.alpha:g}"


_SIGMA_FORMS = {
    "one_minus_square": lambda u: 1 - u * u,
    "one_minus": lambda u: 1 - u,
    "one_plus": lambda u: 1 + u,
}


@dataclass(frozen=True)
class SigmaWeight:
    """Weight-generating function ``form(u) ** exponent`` from a named closed form."""

    form: str = "one_minus_square"
    exponent: float = 1.0

    def __post_init__(self):
        if self.form not in _SIGMA_FORMS:
            raise ValueError(f"unknown sigma form {self.form!r}; choose from {sorted(_SIGMA_FORMS)}")

    def __call__(self, u):
        base = _SIGMA_FORMS[self.form](np.asarray(u, dtype=float))
        if self.exponent == 1:
            return base
        return base**self.exponent


@dataclass(frozen=True)
class FunctionHandle:
    """A vectorised function on [-1, 1].

    ``breakpoints`` lists interior points where the function is not smooth;
    quadrature panels are split there.
    """

    eval: Callable
    label: str
    metadata: dict = field(default_factory=dict, compare=False)
    breakpoints: tuple = ()

    def __call__(self, x):
        return self.eval(np.asarray(x, dtype=float))


@dataclass(frozen=True)
class _AbsPower:
    center: float
    gamma: float

    def __call__(self, x):
        return np.abs(x - self.center) ** self.gamma


@dataclass(frozen=True)
class _TruncatedPower:
    gamma: float

    def __call__(self, x):
        return np.maximum(x, 0.0) ** self.gamma


@dataclass(frozen=True)
class _Constant:
    value: float

    def __call__(self, x):
        return np.full(np.shape(x), self.value, dtype=float)


@dataclass(frozen=True)
class _Polynomial:
    """Monomial coefficients, lowest degree first."""

    coeffs: tuple

    def __call__(self, x):
        return np.polynomial.polynomial.polyval(x, self.coeffs)


@dataclass(frozen=True)
class _Exp:
    def __call__(self, x):
        return np.exp(x)


@dataclass(frozen=True)
class _LinearCombination:
    terms: tuple  # ((coefficient, callable), ...)

    def __call__(self, x):
        out = np.zeros(np.shape(x))
        for c, g in self.terms:
            out = out + c * g(x)
        return out


POLY7_COEFFS = (0.1, 0.2, -1.0, 0.3, 0.0, -0.5, 0.0, 1.0)


def constant(value: float) -> FunctionHandle:
    return FunctionHandle(_Constant(float(value)), f"const_{value:g}", {"gamma": "constant"})


def constant_value(f: FunctionHandle) -> float | None:
    """The value of a handle built by :func:`constant`, else None."""
    return f.eval.value if isinstance(f.eval, _Constant) else None


def polynomial(coeffs, label: str | None = None) -> FunctionHandle:
    coeffs = tuple(float(c) for c in coeffs)
    return FunctionHandle(_Polynomial(coeffs), label or f"poly{len(coeffs) - 1}", {"gamma": "polynomial"})


def linear_combination(*pairs, label: str | None = None) -> FunctionHandle:
    """``linear_combination((a, f), (b, g))`` is the handle for a*f + b*g."""
    terms = tuple((float(c), f.eval) for c, f in pairs)
    breaks = tuple(sorted({b for _, f in pairs for b in f.breakpoints}))
    name = label or "+".join(f"{c:g}*{f.label}" for c, f in pairs)
    return FunctionHandle(_LinearCombination(terms), name, {}, breaks)


def _fmt(gamma):
    return f"{gamma:g}"


def corpus() -> list[FunctionHandle]:
    """The fixed, labelled set of test functions used by every experiment."""
    out = []
    for g in (0.5, 1.0, 1.5):
        out.append(FunctionHandle(_AbsPower(0.0, g), f"abs_x_pow_{_fmt(g)}", {"gamma": g, "singularity": 0.0}, (0.0,)))
    for g in (0.5, 1.0, 1.5):
        out.append(
            FunctionHandle(
                _AbsPower(0.5, g), f"abs_x_minus_half_pow_{_fmt(g)}", {"gamma": g, "singularity": 0.5}, (0.5,)
            )
        )
    for g in (0.5, 1.0):
        out.append(FunctionHandle(_TruncatedPower(g), f"trunc_pow_{_fmt(g)}", {"gamma": g, "singularity": 0.0}, (0.0,)))
    out.append(FunctionHandle(_Exp(), "exp", {"gamma": "analytic"}))
    out.append(polynomial(POLY7_COEFFS, "poly7"))
    return out


def corpus_by_label() -> dict[str, FunctionHandle]:
    return {f.label: f for f in corpus()}


def admissible_for(w: WeightParams, theorem: str) -> bool:
    """Whether (p, alpha) satisfies the hypotheses of the named theorem."""
    if theorem not in THEOREMS:
        raise ValueError(f"unknown theorem tag {theorem!r}")
    p, a = w.p, w.alpha
    if math.isinf(p):
        return 1 <= a < 1.5
    if theorem == "jackson" and p == 1:
        return 0.5 < a <= 1
    return 1 - 1 / (2 * p) < a < 1.5 - 1 / (2 * p)


def _sup_grid(n, breaks):
    # Chebyshev extreme points, end points included
    grid = -np.cos(np.arange(n) * np.pi / (n - 1))
    grid[0], grid[-1] = -1.0, 1.0
    extra = [b for b in breaks if -1 < b < 1]
    if extra:
        grid = np.unique(np.concatenate([grid, extra]))
    return grid


def golden_argmax(h, lo, hi, iters=48):
    """Maximise ``h`` on each of the brackets [lo_i, hi_i] at once by golden-section search.

    Returns the maximisers and the maxima.
    """
    a, b = np.array(lo, dtype=float), np.array(hi, dtype=float)
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    hc, hd = h(c), h(d)
    for _ in range(iters):
        left = hc >= hd
        b = np.where(left, d, b)
        a = np.where(left, a, c)
        new_c = b - _GOLDEN * (b - a)
        new_d = a + _GOLDEN * (b - a)
        # carry over the surviving interior point, evaluate the other
        c_next = np.where(left, new_c, d)
        d_next = np.where(left, c, new_d)
        probe = np.where(left, c_next, d_next)
        hp = h(probe)
        hc, hd = np.where(left, hp, hd), np.where(left, hc, hp)
        c, d = c_next, d_next
        if np.max(b - a) < 1e-13:
            break
    take_c = hc >= hd
    return np.where(take_c, c, d), np.where(take_c, hc, hd)


def sup_norm(h: Callable, breaks=(), samples: int = SUP_SAMPLES, refine: int = 3) -> float:
    """Maximum of a nonnegative vectorised ``h`` on (-1, 1): dense Chebyshev sampling
    followed by golden-section refinement around the ``refine`` largest samples."""
    grid = _sup_grid(samples, breaks)
    vals = np.asarray(h(grid), dtype=float)
    if not np.all(np.isfinite(vals)):
        return INF
    best = float(np.max(vals))
    if refine and grid.size >= 3:
        top = np.argsort(vals[1:-1], kind="stable")[::-1][:refine] + 1
        _, refined = golden_argmax(h, grid[top - 1], grid[top + 1])
        if not np.all(np.isfinite(refined)):
            return INF
        best = max(best, float(np.max(refined)))
    return best


def lp_norm(h: Callable, p: float, breaks=(), nodes: int = NORM_NODES) -> float:
    """(int_{-1}^{1} |h|^p dx)^{1/p} on graded panels split at ``breaks``."""
    rule = panel_rule(breaks, nodes)
    vals = np.abs(np.asarray(h(rule.nodes), dtype=float))
    if not np.all(np.isfinite(vals)):
        raise FloatingPointError("weighted integrand is not finite inside (-1, 1)")
    scale = float(np.max(vals)) if vals.size else 0.0
    if scale == 0.0:
        return 0.0
    total = math.fsum(((vals / scale) ** p * rule.weights).tolist())
    return scale * total ** (1 / p)


def sign_changes(
    f: Callable, breaks=(), samples: int = ROOT_SAMPLES, iters: int = ROOT_BISECTIONS, floor: float = 1e-12
) -> tuple:
    """Points in (-1, 1) where ``f`` changes sign, located by bisection.

    |f| has a kink at each of them, so they are used as extra panel breaks.
    Samples below ``floor`` times the largest one count as zero, so rounding
    noise does not register as sign changes.
    """
    grid = _sup_grid(samples, breaks)[1:-1]
    vals = np.asarray(f(grid), dtype=float)
    top = float(np.max(np.abs(vals))) if vals.size else 0.0
    s = np.where(np.abs(vals) > floor * top, np.sign(vals), 0.0)
    idx = np.nonzero(s[:-1] * s[1:] < 0)[0]
    if idx.size == 0:
        return ()
    a, b = grid[idx], grid[idx + 1]
    sa = s[idx]
    for _ in range(iters):
        mid = (a + b) / 2
        sm = np.sign(np.asarray(f(mid), dtype=float))
        left = sm == sa
        a = np.where(left, mid, a)
        b = np.where(left, b, mid)
    return tuple(float(v) for v in (a + b) / 2)


def weighted_norm(
    f: FunctionHandle,
    w: WeightParams,
    sw: SigmaWeight,
    *,
    nodes: int = NORM_NODES,
    samples: int = SUP_SAMPLES,
) -> float:
    """Norm of ``f`` in L_{p,alpha}: the L_p norm of f(x) * sigma(x)^alpha on [-1, 1]."""

    def h(x):
        return np.abs(f(x) * sw(x) ** w.alpha)

    if w.is_sup:
        return sup_norm(h, f.breakpoints, samples)
    breaks = tuple(f.breakpoints) + sign_changes(f, f.breakpoints)
    return lp_norm(h, w.p, breaks, nodes)
