"""Generalised modulus of smoothness omega(f, delta) = sup_{|t| <= delta} ||tau-hat_t f - f||."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .shift import KernelSpec, shift_difference
from .space import FunctionHandle, WeightParams, weighted_norm

GEOMETRIC_POINTS = 32
UNIFORM_POINTS = 32
REFINE_TOL = 1e-4
MAX_DELTA = 3.0
SYMMETRY_PROBE_T = (0.05, 0.3, 1.0)
SYMMETRY_TOL = 1e-10
_GOLDEN = (math.sqrt(5) - 1) / 2


@dataclass
class ModulusCurve:
    deltas: np.ndarray
    omegas: np.ndarray
    f_label: str
    w: WeightParams
    raw: np.ndarray | None = None
    symmetric: bool = True
    metadata: dict = field(default_factory=dict)

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(f"# f={self.f_label} {self.w.tag()} symmetric_in_t={self.symmetric}\n")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["delta", "omega"])
        for d, o in zip(self.deltas, self.omegas):
            writer.writerow([repr(float(d)), repr(float(o))])
        return buf.getvalue()


class _ShiftNorms:
    """Memoised t -> ||tau-hat_t f - f|| for one (kernel, f, weight, resolution)."""

    def __init__(self, spec, f, w, nodes=None, norm_kw=None):
        self.spec, self.f, self.w = spec, f, w
        self.nodes = nodes
        self.norm_kw = norm_kw or {}
        self.cache: dict[float, float] = {}

    def __call__(self, t: float) -> float:
        t = float(t)
        if t == 0.0:
            return 0.0
        if t not in self.cache:
            g = shift_difference(self.spec, self.f, t, self.nodes)
            self.cache[t] = weighted_norm(g, self.w, self.spec.sigma, **self.norm_kw)
        return self.cache[t]

    def symmetric(self, probe=SYMMETRY_PROBE_T) -> bool:
        for t in probe:
            a, b = self(t), self(-t)
            if abs(a - b) > SYMMETRY_TOL * max(1.0, abs(a)):
                return False
        return True


def golden_max(func, lo: float, hi: float, tol: float = REFINE_TOL) -> float:
    """Golden-section maximum of a scalar function over [lo, hi]."""
    a, b = lo, hi
    c, d = b - _GOLDEN * (b - a), a + _GOLDEN * (b - a)
    fc, fd = func(c), func(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = func(c)
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = func(d)
    return max(fc, fd)


def _t_grid(delta_max, delta_min):
    geo = np.geomspace(delta_min / 8, delta_max, GEOMETRIC_POINTS)
    uni = np.linspace(delta_max / UNIFORM_POINTS, delta_max, UNIFORM_POINTS)
    return np.unique(np.concatenate([geo, uni]))


def _sup_up_to(norms: _ShiftNorms, grid, delta, signs):
    ts = np.unique(np.concatenate([grid[grid <= delta], [delta]]))
    best, best_i = 0.0, -1
    for i, t in enumerate(ts):
        v = max(norms(s * t) for s in signs)
        if v > best:
            best, best_i = v, i
    if 0 <= best_i < ts.size - 1:
        # interior maximum: refine between the neighbouring grid points
        lo = ts[best_i - 1] if best_i > 0 else 0.0
        hi = ts[best_i + 1]
        for s in signs:
            best = max(best, golden_max(lambda t: norms(s * t), lo, hi))
    return best


def _check_delta(delta):
    if not 0 < delta <= MAX_DELTA:
        raise ValueError(f"delta must lie in (0, {MAX_DELTA}], got {delta}")


def omega(
    spec: KernelSpec,
    f: FunctionHandle,
    w: WeightParams,
    delta: float,
    *,
    nodes: int | None = None,
    norm_kw: dict | None = None,
) -> float:
    """Modulus of smoothness at a single delta."""
    _check_delta(delta)
    norms = _ShiftNorms(spec, f, w, nodes, norm_kw)
    signs = (1.0,) if norms.symmetric() else (1.0, -1.0)
    return _sup_up_to(norms, _t_grid(delta, delta), delta, signs)


def modulus_curve(
    spec: KernelSpec,
    f: FunctionHandle,
    w: WeightParams,
    deltas,
    *,
    nodes: int | None = None,
    norm_kw: dict | None = None,
    grid_factor: int = 1,
) -> ModulusCurve:
    """omega(f, delta) over increasing ``deltas``, sharing one t-grid.

    The result is made nondecreasing by running maxima.
    """
    deltas = np.asarray(deltas, dtype=float)
    if deltas.ndim != 1 or deltas.size == 0 or np.any(np.diff(deltas) <= 0):
        raise ValueError("deltas must be a nonempty increasing sequence")
    for d in (deltas[0], deltas[-1]):
        _check_delta(d)
    norms = _ShiftNorms(spec, f, w, nodes, norm_kw)
    symmetric = norms.symmetric()
    signs = (1.0,) if symmetric else (1.0, -1.0)
    grid = _t_grid(deltas[-1], deltas[0])
    if grid_factor > 1:
        grid = np.unique(np.concatenate([grid, _dense(grid, grid_factor)]))
    raw = np.array([_sup_up_to(norms, grid, d, signs) for d in deltas])
    omegas = np.maximum.accumulate(raw)
    return ModulusCurve(deltas, omegas, f.label, w, raw=raw, symmetric=symmetric)


def _dense(grid, factor):
    pts = [grid[:1]]
    for a, b in zip(grid[:-1], grid[1:]):
        pts.append(np.linspace(a, b, factor + 1)[1:])
    return np.concatenate(pts)
