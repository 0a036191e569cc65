"""The generalised shift operator, its kernel, and the transcription self-test.

The operator is evaluated in its ``y = cos t`` form,

    tau_y(f, x) = 1 / (pi sigma(x) Co(t)) * int_{-1}^{1} B_y(x, z, R) f(R) dz / sqrt(1 - z^2),
    R = x y - sqrt(1 - x^2) sqrt(1 - y^2) z,

which depends on t only through cos t and is therefore even in t.
"""

from __future__ import annotations

import configparser
import hashlib
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from .polybasis import JacobiIndex, eval_jacobi, gauss_rule, graded_panels
from .space import (
    FunctionHandle,
    SigmaWeight,
    WeightParams,
    admissible_for,
    constant,
    constant_value,
    corpus,
    polynomial,
    weighted_norm,
)

SHIFT_NODES = 256
PANEL_NODES = 64
SHIFT_TOL = 1e-9
MAX_DOUBLINGS = 4
R_CLAMP_TOL = 1e-15
X_EDGE = 1 - 1e-9
COSFACTOR_MIN = 1e-12
CHUNK_ELEMENTS = 1 << 20


class ConvergenceError(RuntimeError):
    """Quadrature did not settle under resolution doubling."""


class KernelSpecError(ValueError):
    """Malformed kernel configuration file."""


def half_angle_fourth(t):
    return ((1 + np.cos(t)) / 2) ** 2


def unit_cosfactor(t):
    return np.ones_like(np.asarray(t, dtype=float))


COSFACTORS = {"half_angle_fourth": half_angle_fourth, "unit": unit_cosfactor}


@dataclass(frozen=True)
class KernelSpec:
    """Ingredients of the shift operator, read from configuration and certified by
    :func:`lemma1_selftest` before use."""

    sigma: SigmaWeight = field(default_factory=SigmaWeight)
    cosfactor_name: str = "half_angle_fourth"
    idx_x: JacobiIndex = JacobiIndex(2.0, 2.0)
    idx_y: JacobiIndex = JacobiIndex(0.0, 4.0)
    fingerprint: str = field(default="builtin", compare=False)

    def __post_init__(self):
        if self.cosfactor_name not in COSFACTORS:
            raise KernelSpecError(f"unknown cosfactor {self.cosfactor_name!r}")

    @property
    def cosfactor(self) -> Callable:
        return COSFACTORS[self.cosfactor_name]

    def to_ini(self) -> str:
        return (
            "[kernel]\n"
            f"sigma = {self.sigma.form}\n"
            f"sigma_exponent = {self.sigma.exponent:g}\n"
            f"cosfactor = {self.cosfactor_name}\n"
            f"idx_x = {self.idx_x.a:g}, {self.idx_x.b:g}\n"
            f"idx_y = {self.idx_y.a:g}, {self.idx_y.b:g}\n"
        )


def default_kernel() -> KernelSpec:
    return KernelSpec()


def _pair(text, key):
    parts = [s.strip() for s in text.split(",")]
    if len(parts) != 2:
        raise KernelSpecError(f"{key} must be two comma-separated numbers, got {text!r}")
    try:
        return JacobiIndex(float(parts[0]), float(parts[1]))
    except ValueError as exc:
        raise KernelSpecError(f"{key}: {exc}") from exc


def parse_kernel_section(section, fingerprint="inline") -> KernelSpec:
    try:
        sigma = SigmaWeight(section.get("sigma", "one_minus_square"), float(section.get("sigma_exponent", "1")))
        return KernelSpec(
            sigma=sigma,
            cosfactor_name=section.get("cosfactor", "half_angle_fourth"),
            idx_x=_pair(section["idx_x"], "idx_x"),
            idx_y=_pair(section["idx_y"], "idx_y"),
            fingerprint=fingerprint,
        )
    except KeyError as exc:
        raise KernelSpecError(f"missing key {exc.args[0]!r} in [kernel]") from exc
    except ValueError as exc:
        raise KernelSpecError(str(exc)) from exc


def fingerprint_bytes(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()[:16]


def load_kernel_spec(path) -> KernelSpec:
    """Read a ``[kernel]`` section from a flat INI-style file."""
    raw = Path(path).read_bytes()
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        parser.read_string(raw.decode("utf-8"))
    except (configparser.Error, UnicodeDecodeError) as exc:
        raise KernelSpecError(f"cannot parse {path}: {exc}") from exc
    if not parser.has_section("kernel"):
        raise KernelSpecError(f"{path} has no [kernel] section")
    return parse_kernel_section(parser["kernel"], fingerprint_bytes(raw))


def kernel_R(t, x, phi):
    """R = x cos t - sqrt(1 - x^2) sin t cos phi, clamped to [-1, 1]."""
    x = np.asarray(x, dtype=float)
    if np.any(np.abs(x) > 1):
        raise ValueError("x must lie in [-1, 1]")
    r = x * np.cos(t) - np.sqrt(1 - x * x) * np.sin(t) * np.cos(phi)
    return _clamp_unit(r)


def _clamp_unit(r):
    excess = np.max(np.abs(r)) - 1 if np.size(r) else 0.0
    if excess > R_CLAMP_TOL:
        raise ArithmeticError(f"|R| exceeds 1 by {excess:.3e}")
    return np.clip(r, -1.0, 1.0)


def kernel_B(spec: KernelSpec, y, x, z, r=None):
    """2 (sqrt(1-x^2) y + x z sqrt(1-y^2) + sqrt(1-x^2) (1-y) sigma(z))^2 - sigma(R)."""
    y = np.asarray(y, dtype=float)
    x = np.asarray(x, dtype=float)
    z = np.asarray(z, dtype=float)
    sx = np.sqrt(1 - x * x)
    sy = np.sqrt(np.maximum(1 - y * y, 0.0))
    if r is None:
        r = _clamp_unit(x * y - sx * sy * z)
    inner = sx * y + x * z * sy + sx * (1 - y) * spec.sigma(z)
    out = 2 * inner * inner - spec.sigma(r)
    if not np.all(np.isfinite(out)):
        raise FloatingPointError("kernel B is not finite")
    return out


def _phi_breaks(x, y, breaks):
    """Angles in [0, pi] at which R crosses each breakpoint, shape (len(x), len(breaks) + 2)."""
    sx = np.sqrt(1 - x * x)
    sy = math.sqrt(max(1 - y * y, 0.0))
    denom = sx * sy
    zc = (x[:, None] * y - np.asarray(breaks)[None, :]) / denom[:, None]
    phic = np.arccos(np.clip(zc, -1.0, 1.0))
    edges = np.concatenate([np.zeros((x.size, 1)), np.sort(phic, axis=1), np.full((x.size, 1), np.pi)], axis=1)
    return edges


def shift_values(spec: KernelSpec, f: FunctionHandle, t: float, x, nodes: int | None = None, short_circuit=True):
    """Operator values at fixed quadrature resolution (no convergence control).

    Smooth ``f`` uses the Gauss-Chebyshev rule in z; ``f`` with breakpoints is
    integrated over phi on graded panels split where R meets a breakpoint.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if np.any(np.abs(x) >= 1):
        raise ValueError("the shift operator needs |x| < 1")
    t = float(t)
    if short_circuit:
        # tau 1 = 1 is certified by the self-test, so constants map to themselves
        if t == 0.0 or constant_value(f) is not None:
            return f(x)
    width = (len(f.breakpoints) + 1) * (nodes or PANEL_NODES) if f.breakpoints else (nodes or SHIFT_NODES)
    step = max(1, CHUNK_ELEMENTS // width)
    if x.size > step:
        return np.concatenate([_shift_block(spec, f, t, x[i : i + step], nodes) for i in range(0, x.size, step)])
    return _shift_block(spec, f, t, x, nodes)


def _shift_block(spec, f, t, x, nodes):
    co = float(spec.cosfactor(t))
    if co < COSFACTOR_MIN:
        raise ValueError(f"cosine factor {co:.3e} too small at t={t}")
    y = math.cos(t)
    sy = math.sqrt(max(1 - y * y, 0.0))
    sx = np.sqrt(1 - x * x)
    if f.breakpoints and sy > 0:
        m = nodes or PANEL_NODES
        phi, w = graded_panels(_phi_breaks(x, y, f.breakpoints), m)
        z = np.cos(phi)
    else:
        m = nodes or SHIFT_NODES
        rule = gauss_rule("chebyshev", m)
        z = np.broadcast_to(rule.nodes, (x.size, m))
        w = np.broadcast_to(rule.weights, (x.size, m))
    r = _clamp_unit(x[:, None] * y - (sx * sy)[:, None] * z)
    b = kernel_B(spec, y, x[:, None], z, r)
    integral = np.sum(b * f(r) * w, axis=1)
    return integral / (np.pi * spec.sigma(x) * co)


def apply_shift(spec: KernelSpec, f: FunctionHandle, t: float, x, nodes: int | None = None, tol: float = SHIFT_TOL):
    """tau-hat_t(f, x), doubling the quadrature until successive values agree to ``tol``.

    Raises :class:`ConvergenceError` if four doublings do not settle the value.
    """
    scalar = np.ndim(x) == 0
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if np.any(np.abs(x) >= X_EDGE):
        raise ValueError("apply_shift is defined for |x| < 1 - 1e-9")
    if float(t) == 0.0:
        out = f(x)
    else:
        m = nodes or (PANEL_NODES if f.breakpoints else SHIFT_NODES)
        prev = shift_values(spec, f, t, x, m)
        for _ in range(MAX_DOUBLINGS):
            m *= 2
            out = shift_values(spec, f, t, x, m)
            change = np.max(np.abs(out - prev) / np.maximum(1.0, np.abs(out)))
            if change <= tol:
                break
            prev = out
        else:
            raise ConvergenceError(f"shift of {f.label} at t={t} changed by {change:.3e} after {MAX_DOUBLINGS} doublings")
    return float(out[0]) if scalar else out


def shifted_breakpoints(breaks, t):
    """Points x where tau_t f may lose smoothness: the breakpoints themselves and
    the x at which the range [cos(theta + t), cos(theta - t)] of R ends on one."""
    t = abs(float(t))
    out = set(float(c) for c in breaks)
    if t == 0:
        return tuple(sorted(out))
    for c in breaks:
        ac = math.acos(max(-1.0, min(1.0, c)))
        for theta in (ac - t, ac + t, -ac + t, -ac - t + 2 * math.pi, ac - t + 2 * math.pi, -ac + t + 2 * math.pi):
            if 0 < theta < math.pi:
                out.add(math.cos(theta))
    return tuple(sorted(v for v in out if -1 < v < 1))


@dataclass(frozen=True)
class _ShiftDifference:
    spec: KernelSpec
    f: FunctionHandle
    t: float
    nodes: int | None
    subtract: bool
    adaptive: bool = False

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        # Values within 1e-9 of the ends are taken at the edge.
        edge = np.nextafter(X_EDGE, 0.0)
        xc = np.clip(x, -edge, edge).ravel()
        if self.adaptive:
            out = apply_shift(self.spec, self.f, self.t, xc, self.nodes)
        else:
            out = shift_values(self.spec, self.f, self.t, xc, self.nodes)
        if self.subtract:
            out = out - self.f(xc)
        return np.asarray(out).reshape(x.shape)


def shifted(
    spec: KernelSpec, f: FunctionHandle, t: float, nodes: int | None = None, adaptive: bool = False
) -> FunctionHandle:
    """Handle for x -> tau-hat_t(f, x); fixed resolution unless ``adaptive``, which
    doubles from ``nodes`` until converged as in :func:`apply_shift`."""
    return FunctionHandle(
        _ShiftDifference(spec, f, float(t), nodes, False, adaptive),
        f"tau[{t:g}]{f.label}",
        {},
        shifted_breakpoints(f.breakpoints, t),
    )


def shift_difference(spec: KernelSpec, f: FunctionHandle, t: float, nodes: int | None = None) -> FunctionHandle:
    """Handle for x -> tau-hat_t(f, x) - f(x) at fixed resolution."""
    return FunctionHandle(
        _ShiftDifference(spec, f, float(t), nodes, True), f"tau[{t:g}]{f.label}-id", {}, shifted_breakpoints(f.breakpoints, t)
    )


@dataclass
class SelfTestReport:
    max_err_identity: float
    max_err_unit: float
    max_err_product: float
    tol: float = 1e-8

    @property
    def pass_(self) -> bool:
        errs = (self.max_err_identity, self.max_err_unit, self.max_err_product)
        return all(np.isfinite(e) and e <= self.tol for e in errs)

    def as_dict(self):
        return {
            "max_err_identity": self.max_err_identity,
            "max_err_unit": self.max_err_unit,
            "max_err_product": self.max_err_product,
            "tol": self.tol,
            "pass": self.pass_,
        }


SELFTEST_T = np.linspace(-3.0, 3.0, 20)
SELFTEST_X = np.linspace(-0.95, 0.95, 20)
PRODUCT_T = np.linspace(-3.0, 3.0, 12)
PRODUCT_X = np.linspace(-0.95, 0.95, 12)
PRODUCT_MAX_DEGREE = 8


def _jacobi_handle(idx, nu):
    # Exact monomial coefficients of the normalised Jacobi polynomial via its values
    # at Chebyshev points; degree <= 8 keeps the interpolation exact to rounding.
    pts = np.cos(np.pi * (np.arange(nu + 1) + 0.5) / (nu + 1))
    coeffs = np.polynomial.polynomial.polyfit(pts, eval_jacobi(idx, nu, pts), nu) if nu else [1.0]
    return polynomial(coeffs, f"jacobi{nu}")


def lemma1_selftest(spec: KernelSpec, tol: float = 1e-8, nodes: int = SHIFT_NODES) -> SelfTestReport:
    """Check the identity, unit and product properties numerically.

    Failures are reported, never raised.
    """
    probes = [_jacobi_handle(spec.idx_x, nu) for nu in range(PRODUCT_MAX_DEGREE + 1)]
    probes += [f for f in corpus() if not f.breakpoints]
    x = SELFTEST_X
    err_id = 0.0
    for f in probes:
        # evaluated through the quadrature, not the t = 0 shortcut
        got = shift_values(spec, f, 0.0, x, nodes, short_circuit=False)
        err_id = max(err_id, float(np.max(np.abs(got - f(x)))))

    one = constant(1.0)
    err_unit = 0.0
    for t in SELFTEST_T:
        got = shift_values(spec, one, t, x, nodes, short_circuit=False)
        err_unit = max(err_unit, float(np.max(np.abs(got - 1.0))))

    err_prod = 0.0
    for nu, f in enumerate(probes[: PRODUCT_MAX_DEGREE + 1]):
        px = eval_jacobi(spec.idx_x, nu, PRODUCT_X)
        for t in PRODUCT_T:
            got = shift_values(spec, f, t, PRODUCT_X, nodes)
            want = px * eval_jacobi(spec.idx_y, nu, math.cos(t))
            err_prod = max(err_prod, float(np.max(np.abs(got - want))))
    return SelfTestReport(_nan_to_inf(err_id), _nan_to_inf(err_unit), _nan_to_inf(err_prod), tol)


def _nan_to_inf(v):
    return v if np.isfinite(v) else math.inf


PROBE_T = np.linspace(-3.0, 3.0, 21)


def operator_norm_probe(
    spec: KernelSpec,
    w: WeightParams,
    functions,
    t_grid=PROBE_T,
    nodes: int | None = None,
    norm_nodes: int | None = None,
    samples: int | None = None,
    node_factor: int = 1,
) -> float:
    """Largest observed ||tau-hat_t f|| Co(t) / ||f|| over ``functions`` and ``t_grid``.

    ``nodes`` fixes the shift quadrature size; otherwise each function gets its
    default size times ``node_factor``.
    """
    if not admissible_for(w, "jackson"):
        raise ValueError(f"({w.tag()}) is outside the Jackson-theorem range")
    kw = {}
    if norm_nodes:
        kw["nodes"] = norm_nodes
    if samples:
        kw["samples"] = samples
    best = 0.0
    for f in functions:
        base = weighted_norm(f, w, spec.sigma, **kw)
        if base == 0:
            continue
        for t in t_grid:
            m = nodes or node_factor * (PANEL_NODES if f.breakpoints else SHIFT_NODES)
            val = weighted_norm(shifted(spec, f, t, m), w, spec.sigma, **kw)
            best = max(best, val * float(spec.cosfactor(t)) / base)
    return best
