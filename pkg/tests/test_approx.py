import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from genshift.approx import (
    ApproximationError,
    ErrorSequence,
    PolyCoeffs,
    SolverWarning,
    best_approx,
    error_sequence,
)
from genshift.space import INF, SigmaWeight, WeightParams, corpus, corpus_by_label, linear_combination, polynomial

SIGMA = SigmaWeight()
W_SUP0 = WeightParams(INF, 0.0)
WEIGHTS = [WeightParams(INF, 1.0), WeightParams(2, 1.0), WeightParams(1, 0.75), WeightParams(3, 1.0)]


def monomial(k):
    return polynomial([0.0] * k + [1.0], f"x^{k}")


def test_x_squared_minimax():
    _, err = best_approx(monomial(2), 2, W_SUP0, SIGMA)
    assert err == pytest.approx(0.5, abs=1e-6)


@pytest.mark.parametrize("k", range(1, 9))
def test_monic_chebyshev_oracle(k):
    # x^k minus its best degree k - 1 approximant is T_k / 2^(k-1)
    poly, err, lower = best_approx(monomial(k), k, W_SUP0, SIGMA, return_bounds=True)
    exact = 2.0 ** (1 - k)
    assert lower <= exact * (1 + 1e-12) and exact <= err * (1 + 1e-12)
    assert err == pytest.approx(exact, rel=1e-8)
    x = np.linspace(-1, 1, 101)
    assert np.allclose(x**k - poly(x), np.cos(k * np.arccos(x)) / 2 ** (k - 1), atol=1e-9)


def test_abs_x_by_lines():
    _, err = best_approx(corpus_by_label()["abs_x_pow_1"], 2, W_SUP0, SIGMA)
    assert err == pytest.approx(0.5, abs=1e-9)


def test_l2_and_l1_oracles():
    # best constants for x^2: mean 1/3 in L2, median 1/4 in L1
    poly, err = best_approx(monomial(2), 1, WeightParams(2, 0.0), SIGMA)
    assert poly.coeffs[0] == pytest.approx(1 / 3, abs=1e-12)
    assert err == pytest.approx(math.sqrt(8 / 45), rel=1e-10)
    poly, err = best_approx(monomial(2), 1, WeightParams(1, 0.0), SIGMA)
    assert poly.coeffs[0] == pytest.approx(0.25, abs=1e-4)
    assert err == pytest.approx(0.5, rel=1e-6)


@pytest.mark.parametrize("w", WEIGHTS, ids=str)
@given(coeffs=st.lists(st.floats(-5, 5), min_size=1, max_size=10), extra=st.integers(0, 3))
def test_reproduces_polynomials(w, coeffs, extra):
    f = polynomial(coeffs)
    n = len(coeffs) + extra
    poly, err = best_approx(f, n, w, SIGMA)
    x = np.linspace(-1, 1, 201)
    assert np.max(np.abs(poly(x) - f(x))) <= 1e-10 * (1 + max(abs(c) for c in coeffs))
    assert err <= 1e-10 * (1 + max(abs(c) for c in coeffs))


@pytest.mark.parametrize("n", [3, 8, 16])
def test_lawson_brackets_the_minimax_error(n):
    f = corpus_by_label()["abs_x_pow_0.5"]
    w = WeightParams(INF, 1.0)
    _, exact = best_approx(f, n, w, SIGMA)
    with pytest.warns(SolverWarning):
        _, upper, lower = best_approx(f, n, w, SIGMA, method="lawson", return_bounds=True)
    assert lower <= exact * (1 + 1e-9)
    assert exact <= upper * (1 + 1e-9)
    assert (upper - lower) / upper < 0.05


@pytest.mark.parametrize("label", ["abs_x_pow_1", "exp", "trunc_pow_0.5"])
def test_irls_agrees_with_exact_l1(label):
    f = corpus_by_label()[label]
    w = WeightParams(1, 0.75)
    _, exact = best_approx(f, 6, w, SIGMA)
    _, approx = best_approx(f, 6, w, SIGMA, method="irls")
    # finite-p exchange rounds stop at 1e-6 agreement
    assert exact <= approx * (1 + 1e-5)
    assert approx == pytest.approx(exact, rel=1e-3)


@pytest.mark.parametrize("w", WEIGHTS[:3], ids=str)
@pytest.mark.parametrize("f", corpus(), ids=lambda f: f.label)
def test_error_sequence_monotone(w, f):
    seq = error_sequence(f, range(2, 40, 3), w, SIGMA)
    assert isinstance(seq, ErrorSequence)
    assert np.all(np.diff(seq.errors) <= 0)
    assert np.all(seq.errors >= 0)


@given(c=st.floats(-20, 20).filter(lambda v: abs(v) > 1e-2), n=st.integers(1, 12))
def test_error_scales_with_function(c, n):
    f = corpus_by_label()["abs_x_minus_half_pow_1.5"]
    w = WeightParams(INF, 1.0)
    _, e1 = best_approx(f, n, w, SIGMA)
    _, ec = best_approx(linear_combination((c, f)), n, w, SIGMA)
    assert ec == pytest.approx(abs(c) * e1, rel=1e-6)


def test_density_refinement_is_stable():
    f = corpus_by_label()["abs_x_pow_0.5"]
    w = WeightParams(INF, 1.0)
    _, e1 = best_approx(f, 20, w, SIGMA)
    _, e2 = best_approx(f, 20, w, SIGMA, density=2)
    assert e2 == pytest.approx(e1, rel=1e-3)


def test_csv_format():
    seq = error_sequence(monomial(3), [1, 2, 4], W_SUP0, SIGMA)
    lines = seq.to_csv().splitlines()
    assert lines[:2] == ["# f=x^3 p=inf,alpha=0", "n,E_n"]
    assert len(lines) == 5
    assert lines[-1] == "4,0.0" or float(lines[-1].split(",")[1]) < 1e-12


def test_bad_arguments():
    f = monomial(2)
    with pytest.raises(ValueError):
        best_approx(f, 0, W_SUP0, SIGMA)
    with pytest.raises(ValueError):
        best_approx(f, 2, W_SUP0, SIGMA, method="lstsq")
    with pytest.raises(ValueError):
        error_sequence(f, [3, 2], W_SUP0, SIGMA)


def test_non_finite_function_is_reported():
    from genshift.space import FunctionHandle

    bad = FunctionHandle(lambda x: 1 / x, "inv", breakpoints=(0.0,))
    with np.errstate(divide="ignore"), pytest.raises(ApproximationError):
        best_approx(bad, 3, WeightParams(INF, 1.0), SIGMA)


def test_poly_coeffs_evaluates_chebyshev_series():
    p = PolyCoeffs((0.0, 0.0, 1.0))  # T_2
    assert p.degree == 2
    assert p(0.5) == pytest.approx(-0.5)
