import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import special

from genshift.polybasis import (
    JacobiIndex,
    QuadratureRule,
    eval_jacobi,
    gauss_rule,
    graded_panels,
    integrate,
    panel_rule,
)


def test_jacobi_index_validates():
    with pytest.raises(ValueError):
        JacobiIndex(-1.0, 0.0)
    with pytest.raises(ValueError):
        JacobiIndex(0.0, -2.0)


@pytest.mark.parametrize(
    "idx, nu, x, expected",
    [
        ((0, 0), 2, 0.5, -0.125),  # Legendre
        ((2, 2), 1, 0.3, 0.3),
        ((2, 2), 2, 0.5, 0.125),  # (7x^2 - 1) / 6
        ((0, 4), 1, 0.5, -0.5),  # 3y - 2
        ((0, 4), 0, -0.7, 1.0),
    ],
)
def test_eval_jacobi_closed_forms(idx, nu, x, expected):
    assert eval_jacobi(JacobiIndex(*idx), nu, x) == pytest.approx(expected, abs=1e-15)


@pytest.mark.parametrize("a, b", [(0, 0), (2, 2), (0, 4), (-0.5, -0.5), (1.5, 0.25)])
@pytest.mark.parametrize("nu", [0, 1, 5, 17, 40])
def test_eval_jacobi_matches_scipy(a, b, nu):
    x = np.linspace(-1, 1, 41)
    want = special.eval_jacobi(nu, a, b, x) / special.eval_jacobi(nu, a, b, 1.0)
    got = eval_jacobi(JacobiIndex(a, b), nu, x)
    assert np.allclose(got, want, rtol=1e-11, atol=1e-12)


def test_eval_jacobi_is_one_at_one():
    for nu in range(30):
        assert eval_jacobi(JacobiIndex(2, 2), nu, 1.0) == pytest.approx(1.0, abs=1e-14)


def test_eval_jacobi_rejects_outside():
    with pytest.raises(ValueError):
        eval_jacobi(JacobiIndex(0, 0), 3, 1.5)


@pytest.mark.parametrize("a, b", [(0, 0), (2, 2), (0, 4), (-0.5, 0.5), (3.5, 1.0)])
@pytest.mark.parametrize("m", [1, 2, 7, 64, 300])
def test_gauss_jacobi_matches_scipy(a, b, m):
    rule = gauss_rule("jacobi", m, a, b)
    x, w = special.roots_jacobi(m, a, b)
    assert np.allclose(rule.nodes, x, atol=1e-13)
    assert np.allclose(rule.weights, w, rtol=1e-7)


@pytest.mark.parametrize("a, b", [(0, 0), (2, 2), (0, 4), (1.5, 0.5)])
def test_gauss_jacobi_total_mass(a, b):
    mass = 2 ** (a + b + 1) * special.beta(a + 1, b + 1)
    assert math.fsum(gauss_rule("jacobi", 20, a, b).weights) == pytest.approx(mass, rel=1e-13)


def test_chebyshev_rule_moments():
    rule = gauss_rule("chebyshev", 16)
    assert integrate(rule, lambda x: x * x) == pytest.approx(math.pi / 2, rel=1e-14)
    assert integrate(rule, lambda x: x**4) == pytest.approx(3 * math.pi / 8, rel=1e-14)


def test_gauss_rule_rejects_bad_input():
    with pytest.raises(ValueError):
        gauss_rule("hermite", 4)
    with pytest.raises(ValueError):
        gauss_rule("legendre", 0)


@given(m=st.integers(1, 24), coeffs=st.lists(st.floats(-3, 3), min_size=1, max_size=48))
def test_legendre_exact_for_low_degree(m, coeffs):
    coeffs = coeffs[: 2 * m]
    exact = sum(c * (1 - (-1) ** (k + 1)) / (k + 1) for k, c in enumerate(coeffs))
    got = integrate(gauss_rule("legendre", m), lambda x: np.polynomial.polynomial.polyval(x, coeffs))
    assert got == pytest.approx(exact, abs=1e-12 * (1 + sum(abs(c) for c in coeffs)))


@pytest.mark.parametrize(
    "breaks, g, exact",
    [
        ((0.0,), lambda x: np.sqrt(np.abs(x)), 4 / 3),
        ((0.5,), lambda x: np.sqrt(np.abs(x - 0.5)), (2 / 3) * (1.5**1.5 + 0.5**1.5)),
        ((0.0,), lambda x: np.maximum(x, 0) ** 0.5, 2 / 3),
        ((), np.exp, math.e - 1 / math.e),
    ],
)
def test_panel_rule_singular_integrands(breaks, g, exact):
    assert integrate(panel_rule(breaks, 64), g) == pytest.approx(exact, rel=1e-12)


@given(breaks=st.lists(st.floats(-0.99, 0.99), max_size=4), m=st.integers(48, 128))
def test_panel_rule_invariants(breaks, m):
    rule = panel_rule(tuple(breaks), m)
    assert isinstance(rule, QuadratureRule)
    assert np.all(rule.weights > 0)
    assert np.all((rule.nodes > -1) & (rule.nodes < 1))
    assert math.fsum(rule.weights) == pytest.approx(2.0, rel=1e-13)


def test_graded_rule_converges_with_panel_size():
    errs = [abs(math.fsum(panel_rule((0.3,), m).weights) - 2) for m in (8, 16, 32, 48)]
    assert errs == sorted(errs, reverse=True)
    assert errs[-1] < 1e-12


def test_graded_panels_vectorised():
    edges = np.array([[0.0, 1.0, 2.0], [0.0, 0.5, 3.0]])
    x, w = graded_panels(edges, 64)
    assert x.shape == w.shape == (2, 128)
    assert np.allclose(w.sum(axis=1), [2.0, 3.0], rtol=1e-13)


def test_rule_arrays_are_read_only():
    rule = gauss_rule("legendre", 8)
    with pytest.raises(ValueError):
        rule.nodes[0] = 0.0


def test_integrate_rejects_non_finite():
    with pytest.raises(FloatingPointError):
        integrate(gauss_rule("legendre", 4), lambda x: np.full_like(x, np.nan))
