import numpy as np
import pytest

from canard_fractal.errors import AssumptionViolation, EvaluationError
from canard_fractal.model import (ClassicalLienard, PwsLienard, ScalarFn, SigmaRegion,
                                  classify_sigma, lienard_f_coeffs, validate_hopf,
                                  validate_interval)

from conftest import quartic, mismatch_n3, gbar_cubic, n4k2


def test_poly_derivatives_exact():
    f = ScalarFn.poly([1, 2, 3, 4])
    assert f(2.0) == 1 + 4 + 12 + 32
    assert f.derivative(1)(2.0) == 2 + 12 + 48
    assert f.derivative(2)(1.0) == 6 + 24
    assert f.derivative(5)(3.0) == 0.0


def test_blackbox_finite_difference():
    f = ScalarFn.blackbox(np.sin)
    assert abs(f.derivative(1)(0.3) - np.cos(0.3)) < 1e-9
    assert abs(f.derivative(2)(0.3) + np.sin(0.3)) < 1e-6
    with pytest.raises(EvaluationError):
        f.derivative(3)


def test_blackbox_taylor_matches_poly():
    c = [0.0, -1.0, 0.25, 0.5]
    bb = ScalarFn.blackbox(lambda x: c[1] * x + c[2] * x ** 2 + c[3] * x ** 3, complex_ok=True)
    assert np.allclose(bb.taylor(5)[:4], c, atol=1e-12)


def test_blackbox_nonfinite_raises():
    f = ScalarFn.blackbox(lambda x: np.inf * x)
    with pytest.raises(EvaluationError):
        f(1.0)


def test_hopf_conditions_pass():
    for s in (quartic(), gbar_cubic(), mismatch_n3().to_pws()):
        assert validate_hopf(s).hopf_ok


@pytest.mark.parametrize("fm,gm,bad", [
    ([0, 0.1, 1], [0, -1], "F-'(0)=0"),
    ([0, 0, -1], [0, -1], "F-''(0)>0"),
    ([0, 0, 1], [0, 1], "G-'(0)<0"),
    ([0, 0, 1], [0.2, -1], "G-(0)=0"),
])
def test_hopf_violation_named(fm, gm, bad):
    s = PwsLienard.from_poly(fm, [0, 0, 1], gm, [0, -1])
    rep = validate_hopf(s)
    assert not rep.hopf_ok
    assert bad in [v[0] for v in rep.violations]


def test_interval_sign_conditions():
    s = quartic()
    assert validate_interval(s, (-1.0, 0.0), (0.0, 1.1)).interval_ok
    rep = validate_interval(s, (-1.0, 0.0), (0.0, 1.3))
    assert not rep.interval_ok
    assert rep.provenance == "sampled"
    assert any(v[0] == "G+<0" for v in rep.violations)


def test_classical_coefficients():
    cl = mismatch_n3()
    s = cl.to_pws()
    assert np.allclose(s.f_plus.coeffs, [0, 0, 1, 0, 1])
    assert np.allclose(s.f_minus.coeffs, [0, 0, 2, 0, 1])
    f, k0 = lienard_f_coeffs(cl)
    assert k0 == 2
    assert f[0] == -1.0
    f, k0 = lienard_f_coeffs(n4k2())
    assert k0 == 2 and f[0] == -1.0


def test_classical_rejects_bad_coefficients():
    with pytest.raises(AssumptionViolation):
        ClassicalLienard(3, -1.0, 1.0, (1.0, 0.0), (1.0, 0.0))
    with pytest.raises(ValueError):
        ClassicalLienard(3, 1.0, 1.0, (1.0,), (1.0, 0.0))


def test_classical_intervals_hold():
    assert mismatch_n3().check_intervals().interval_ok


def test_sigma_regions():
    s = quartic()
    assert classify_sigma(s, 0.3) == SigmaRegion.CROSSING
    assert classify_sigma(s, -0.3) == SigmaRegion.CROSSING
    assert classify_sigma(s, 0.0) != SigmaRegion.CROSSING


def test_with_params_keeps_functions():
    s = quartic().with_params(epsilon=0.1, alpha_minus=0.2)
    assert s.epsilon == 0.1 and s.alpha_minus == 0.2 and s.alpha_plus == 0.0
    assert s.is_polynomial
    with pytest.raises(ValueError):
        quartic(epsilon=-1.0)
