"""Jacobi polynomials normalised to one at x = 1, and the quadrature rules built on them."""

from __future__ import annotations

import math
from functools import lru_cache
from dataclasses import dataclass
from typing import Callable

import numpy as np

NEWTON_TOL = 1e-14
NEWTON_MAXITER = 100
_OPEN_LO = np.nextafter(-1.0, 0.0)
_OPEN_HI = np.nextafter(1.0, 0.0)


@dataclass(frozen=True)
class JacobiIndex:
    """Parameter pair (a, b) of the weight (1 - x)^a (1 + x)^b."""

    a: float
    b: float

    def __post_init__(self):
        if not (self.a > -1 and self.b > -1):
            raise ValueError(f"Jacobi indices must exceed -1, got ({self.a}, {self.b})")


@dataclass(frozen=True)
class QuadratureRule:
    nodes: np.ndarray
    weights: np.ndarray
    kind: str

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        weights = np.asarray(self.weights, dtype=float)
        if nodes.shape != weights.shape or nodes.ndim != 1:
            raise ValueError("nodes and weights must be 1-d arrays of equal length")
        if nodes.size > 1 and not np.all(np.diff(nodes) > 0):
            raise ValueError("quadrature nodes must be strictly increasing")
        if not np.all(weights > 0):
            raise ValueError("quadrature weights must be positive")
        nodes.setflags(write=False)
        weights.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)

    def __len__(self):
        return self.nodes.size


def _jacobi_raw(a, b, nu, x):
    """Conventional P_nu^{(a,b)}(x) and its predecessor by the three-term recurrence."""
    x = np.asarray(x, dtype=float)
    p_prev = np.zeros_like(x)
    p = np.ones_like(x)
    if nu == 0:
        return p, p_prev
    p_prev, p = p, (a + 1) + (a + b + 2) * (x - 1) / 2
    for n in range(2, nu + 1):
        s = 2 * n + a + b
        c1 = 2 * n * (n + a + b) * (s - 2)
        c2 = (s - 1) * (s * (s - 2) * x + a * a - b * b)
        c3 = 2 * (n + a - 1) * (n + b - 1) * s
        p_prev, p = p, (c2 * p - c3 * p_prev) / c1
    return p, p_prev


def _jacobi_raw_with_derivative(a, b, nu, x):
    p, p_prev = _jacobi_raw(a, b, nu, x)
    if nu == 0:
        return p, np.zeros_like(p)
    # (2n+a+b)(1-x^2) P'_n = n[(a-b) - (2n+a+b)x] P_n + 2(n+a)(n+b) P_{n-1}
    s = 2 * nu + a + b
    dp = (nu * ((a - b) - s * x) * p + 2 * (nu + a) * (nu + b) * p_prev) / (s * (1 - x * x))
    return p, dp


def eval_jacobi(idx: JacobiIndex, nu: int, x):
    """Evaluate the degree-``nu`` Jacobi polynomial scaled so that its value at 1 is 1.

    Accepts scalars or arrays; raises ``ValueError`` for any |x| > 1.
    """
    if nu < 0:
        raise ValueError("degree must be nonnegative")
    xa = np.asarray(x, dtype=float)
    if np.any(np.abs(xa) > 1):
        raise ValueError("Jacobi polynomials are evaluated on [-1, 1] only")
    p, _ = _jacobi_raw(idx.a, idx.b, nu, xa)
    at_one, _ = _jacobi_raw(idx.a, idx.b, nu, np.ones(()))
    out = p / at_one
    return float(out) if out.ndim == 0 else out


def _newton_roots(a, b, m):
    # Aberth-corrected simultaneous Newton keeps the iterates on distinct roots.
    # Start from Chebyshev angles shifted by the indices (exact when a = b = -1/2).
    k = np.arange(1, m + 1)
    x = np.cos((k + a / 2 - 0.25) * np.pi / (m + (a + b + 1) / 2))[::-1].copy()
    for _ in range(NEWTON_MAXITER):
        p, dp = _jacobi_raw_with_derivative(a, b, m, x)
        ratio = p / dp
        diff = x[:, None] - x[None, :]
        np.fill_diagonal(diff, np.inf)
        repulsion = np.sum(1.0 / diff, axis=1)
        step = ratio / (1 - ratio * repulsion)
        x = np.clip(x - step, _OPEN_LO, _OPEN_HI)
        if np.max(np.abs(step)) <= NEWTON_TOL:
            break
    else:
        raise RuntimeError(f"Gauss-Jacobi Newton iteration did not converge for m={m}")
    return np.sort(x)


def _gauss_jacobi(a, b, m):
    x = _newton_roots(a, b, m)
    _, dp = _jacobi_raw_with_derivative(a, b, m, x)
    log_c = (
        (a + b + 1) * math.log(2)
        + math.lgamma(m + a + 1)
        + math.lgamma(m + b + 1)
        - math.lgamma(m + a + b + 1)
        - math.lgamma(m + 1)
    )
    w = math.exp(log_c) / ((1 - x * x) * dp * dp)
    return x, w


@lru_cache(maxsize=64)
def gauss_rule(kind: str, m: int, a: float = 0.0, b: float = 0.0) -> QuadratureRule:
    """m-point Gauss rule exact to degree 2m - 1 against the weight named by ``kind``.

    ``kind`` is one of ``"chebyshev"`` (weight 1/sqrt(1 - x^2)), ``"legendre"``
    or ``"jacobi"`` (weight (1 - x)^a (1 + x)^b).
    """
    if m < 1:
        raise ValueError("node count must be positive")
    if kind == "chebyshev":
        k = np.arange(m, 0, -1)
        nodes = np.cos((2 * k - 1) * np.pi / (2 * m))
        return QuadratureRule(nodes, np.full(m, np.pi / m), "chebyshev-first-kind")
    if kind == "legendre":
        x, w = _gauss_jacobi(0.0, 0.0, m)
        return QuadratureRule(x, w, "legendre")
    if kind == "jacobi":
        JacobiIndex(a, b)
        x, w = _gauss_jacobi(float(a), float(b), m)
        return QuadratureRule(x, w, f"jacobi({a:g},{b:g})")
    raise ValueError(f"unsupported quadrature kind {kind!r}")


@lru_cache(maxsize=64)
def _graded_unit(m, grading):
    """Gauss-Legendre on [0, 1] pushed through s^q / (s^q + (1 - s)^q)."""
    s, w = np.polynomial.legendre.leggauss(m)
    s = (s + 1) / 2
    w = w / 2
    q = grading
    num = s**q
    den = num + (1 - s) ** q
    g = num / den
    dg = q * s ** (q - 1) * (1 - s) ** (q - 1) / den**2
    w = w * dg
    g.setflags(write=False)
    w.setflags(write=False)
    return g, w


def graded_panels(breaks, m, grading=4):
    """Node and weight arrays for panels between consecutive ``breaks``.

    ``breaks`` has shape (..., k) and is sorted along the last axis; each panel
    receives ``m`` Gauss-Legendre nodes clustered algebraically at both panel
    ends, which absorbs integrable power singularities sitting on the breaks.
    Returns arrays of shape (..., (k - 1) * m).
    """
    breaks = np.asarray(breaks, dtype=float)
    g, wg = _graded_unit(m, grading)
    lo = breaks[..., :-1, None]
    width = np.diff(breaks, axis=-1)[..., None]
    nodes = lo + width * g
    weights = width * wg
    shape = breaks.shape[:-1] + (-1,)
    return nodes.reshape(shape), weights.reshape(shape)


def panel_rule(breaks=(), m: int = 64, lo: float = -1.0, hi: float = 1.0, grading: int = 4) -> QuadratureRule:
    """Composite graded Gauss-Legendre rule on [lo, hi] split at interior ``breaks``.

    Nodes never touch lo or hi.
    """
    inner = sorted({float(c) for c in breaks if lo < c < hi})
    edges = np.array([lo, *inner, hi])
    # drop panels too thin to carry distinct nodes
    keep = np.concatenate([[True], np.diff(edges) > 1e-13 * (hi - lo)])
    edges = edges[keep]
    edges[-1] = hi
    nodes, weights = graded_panels(edges, m, grading)
    # grading can round the outermost nodes onto the end points
    nodes = np.clip(nodes, np.nextafter(lo, hi), np.nextafter(hi, lo))
    order = np.argsort(nodes, kind="stable")
    nodes, weights = nodes[order], weights[order]
    distinct = np.concatenate([[True], np.diff(nodes) > 0])
    return QuadratureRule(nodes[distinct], weights[distinct], "panel")


def integrate(rule: QuadratureRule, g: Callable) -> float:
    """Weighted sum of ``g`` over the rule's nodes, with exactly rounded summation."""
    vals = np.asarray(g(rule.nodes), dtype=float)
    if vals.shape != rule.nodes.shape:
        vals = np.broadcast_to(vals, rule.nodes.shape)
    if not np.all(np.isfinite(vals)):
        bad = rule.nodes[~np.isfinite(vals)][0]
        raise FloatingPointError(f"integrand is not finite at node {bad!r}")
    return math.fsum((vals * rule.weights).tolist())
