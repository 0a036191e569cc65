import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from genshift.modulus import ModulusCurve, golden_max, modulus_curve, omega
from genshift.space import INF, WeightParams, constant, corpus_by_label, polynomial

X_POLY = polynomial([0.0, 1.0], "x")
W_SUP = WeightParams(INF, 1.0)
W_2 = WeightParams(2, 1.0)


def omega_x(delta, w):
    # tau_t x - x = 3 (cos t - 1) x, largest at |t| = delta
    norm = 2 / (3 * math.sqrt(3)) if w.is_sup else math.sqrt(16 / 105)
    return 3 * (1 - math.cos(delta)) * norm


@pytest.mark.parametrize("w", [W_SUP, W_2], ids=str)
@pytest.mark.parametrize("delta", [0.01, 0.1, 0.5, 1.3, 3.0])
def test_omega_of_x_closed_form(spec, w, delta):
    assert omega(spec, X_POLY, w, delta) == pytest.approx(omega_x(delta, w), rel=1e-9)


def test_constant_has_zero_modulus(spec):
    curve = modulus_curve(spec, constant(3.0), W_SUP, [0.01, 0.1, 1.0])
    assert np.all(curve.omegas == 0.0)


def test_omega_rejects_bad_delta(spec):
    with pytest.raises(ValueError):
        omega(spec, X_POLY, W_SUP, 0.0)
    with pytest.raises(ValueError):
        omega(spec, X_POLY, W_SUP, 3.5)
    with pytest.raises(ValueError):
        modulus_curve(spec, X_POLY, W_SUP, [0.5, 0.1])


@pytest.mark.parametrize("label", ["abs_x_pow_0.5", "abs_x_minus_half_pow_1", "trunc_pow_0.5", "exp"])
def test_curve_is_nondecreasing_and_matches_pointwise(spec, label):
    f = corpus_by_label()[label]
    deltas = np.array([1 / 64, 1 / 16, 1 / 4, 1.0])
    curve = modulus_curve(spec, f, W_SUP, deltas)
    assert np.all(np.diff(curve.omegas) >= 0)
    assert curve.symmetric
    assert curve.omegas[-1] == pytest.approx(omega(spec, f, W_SUP, 1.0), rel=1e-3)


def test_singular_growth_exponent(spec):
    # omega(|x|^1/2, delta) scales like delta^1/2 for small delta
    f = corpus_by_label()["abs_x_pow_0.5"]
    d = np.array([1 / 64, 1 / 16])
    om = modulus_curve(spec, f, W_SUP, d).omegas
    assert math.log(om[1] / om[0]) / math.log(4) == pytest.approx(0.5, abs=0.05)


def test_csv_format(spec):
    curve = modulus_curve(spec, X_POLY, W_SUP, [0.1, 0.2, 0.3])
    lines = curve.to_csv().splitlines()
    assert lines[0] == "# f=x p=inf,alpha=1 symmetric_in_t=True"
    assert lines[1] == "delta,omega"
    assert len(lines) == 5
    assert float(lines[2].split(",")[1]) == curve.omegas[0]


def test_modulus_curve_type(spec):
    assert isinstance(modulus_curve(spec, X_POLY, W_2, [0.5]), ModulusCurve)


@given(c=st.floats(-1.0, 1.0))
def test_golden_max_parabola(c):
    assert golden_max(lambda t: -((t - c) ** 2), -1.0, 1.0, tol=1e-8) == pytest.approx(0.0, abs=1e-12)
