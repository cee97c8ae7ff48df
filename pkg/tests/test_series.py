import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from canard_fractal.errors import SeriesError
from canard_fractal.model import PwsLienard, ScalarFn
from canard_fractal.series import (TruncatedSeries, gbar_series, multiplicity_m0, psi_series,
                                   series_invert, series_invert_fixed_point, side_g_series)

from conftest import asymmetric_linear, quartic, gbar_cubic, symmetric

ORDER = 10
coef = st.floats(-2, 2, allow_nan=False, allow_infinity=False)


def _series(c0, c1, rest):
    return TruncatedSeries.from_coeffs([c0, c1] + rest, ORDER)


def test_arithmetic_truncates():
    x = TruncatedSeries.identity(4)
    s = (1 + x) * (1 + x) * (1 + x) * (1 + x) * (1 + x)
    assert np.allclose(s.coeffs, [1, 5, 10, 10, 5])
    assert np.allclose((s - s).coeffs, 0)
    with pytest.raises(SeriesError):
        x + TruncatedSeries.identity(5)


def test_valuation_relative_threshold():
    s = TruncatedSeries([0.0, 1e-12, 0.0, 3.0])
    assert s.valuation() == 3
    assert TruncatedSeries(np.zeros(4)).valuation() is None


@settings(max_examples=40, deadline=None)
@given(c0=st.floats(0.5, 2), c1=coef, rest=st.lists(coef, min_size=3, max_size=3))
def test_reciprocal_and_sqrt(c0, c1, rest):
    s = _series(c0, c1, rest)
    one = s * s.reciprocal()
    assert np.allclose(one.coeffs, np.eye(1, ORDER + 1)[0], atol=1e-9)
    r = s.sqrt()
    assert np.allclose((r * r).coeffs, s.coeffs, atol=1e-9)


@settings(max_examples=40, deadline=None)
@given(c1=st.floats(0.5, 2), rest=st.lists(coef, min_size=3, max_size=3))
def test_inversion_both_methods(c1, rest):
    s = _series(0.0, c1, rest)
    x = TruncatedSeries.identity(ORDER)
    for inv in (series_invert(s), series_invert_fixed_point(s)):
        # inverse coefficients can grow like (c2/c1^2)^k; compare relative to them
        tol = 1e-12 * max(1.0, np.max(np.abs(inv.coeffs)))
        assert np.allclose(s.compose(inv).coeffs, x.coeffs, rtol=0, atol=tol)
        assert np.allclose(inv.compose(s).coeffs, x.coeffs, rtol=0, atol=tol)


def test_invert_needs_unit_linear_term():
    with pytest.raises(SeriesError):
        series_invert(TruncatedSeries.from_coeffs([0, 0, 1], ORDER))


def test_reflect_and_derivative():
    s = TruncatedSeries.from_coeffs([1, 2, 3, 4], 3)
    assert np.allclose(s.reflect().coeffs, [1, -2, 3, -4])
    assert np.allclose(s.derivative().coeffs, [2, 6, 12, 0])


@pytest.mark.parametrize("sign", [-1, 1])
def test_psi_conjugates_to_square(sign):
    F = ScalarFn.poly([0, 0, 0.5, 0.3, -0.2])
    psi = psi_series(F, sign, 16)
    for x in (0.01, -0.02, 0.05):
        assert abs(F(psi(x)) - x * x) < 1e-12
    assert psi.coeffs[1] > 0


def test_normal_form_g_linear_term():
    # g = G(psi) psi' with psi' (0) = sqrt(2 / F''(0))
    g = side_g_series(quartic(), 1, 6)
    assert g.coeffs[0] == 0.0
    assert g.coeffs[1] == pytest.approx(-2.0)


def test_gbar_valuations():
    assert multiplicity_m0(gbar_series(gbar_cubic())).m0 == 3
    assert np.isclose(gbar_series(gbar_cubic()).coeffs[3], 1.0)
    m = multiplicity_m0(gbar_series(asymmetric_linear()))
    assert (m.m0, m.leading) == (1, 1.0)
    m = multiplicity_m0(gbar_series(symmetric(), 20))
    assert m.infinite and m.label == ">=20"


def test_blackbox_series_matches_polynomial():
    bb = ScalarFn.blackbox(lambda x: -x + x ** 3, complex_ok=True)
    sp = PwsLienard(ScalarFn.poly([0, 0, 1]), ScalarFn.poly([0, 0, 1]), bb, ScalarFn.poly([0, -1]))
    assert np.allclose(gbar_series(sp, 10).coeffs, gbar_series(gbar_cubic(), 10).coeffs, atol=1e-9)
