import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from canard_fractal.errors import DomainError
from canard_fractal.model import PwsLienard
from canard_fractal.sdi import (alpha_omega, infinity_chart, invariance_check_inf,
                                j_integrals, phi_curves, sdi_normal_form, sdi_pm, sdi_profile,
                                sdi_total, side_root)
from canard_fractal import _jit

from conftest import QUARTIC_G, Y_HAT, asymmetric_linear, quartic, mismatch_n3, n4k2


def test_closed_form_linear_g():
    # F = x^2, G = -a x gives I = -(2/a) y
    im, ip = sdi_pm(asymmetric_linear(), 0.3, 1e-12)
    assert im == pytest.approx(-0.6, rel=1e-11)
    assert ip == pytest.approx(-0.3, rel=1e-11)


def test_roots_on_critical_curve():
    s = quartic()
    a, w = alpha_omega(s, 0.4)
    assert a < 0 < w
    assert s.f_minus(a) == pytest.approx(0.4, abs=1e-13)
    assert s.f_plus(w) == pytest.approx(0.4, abs=1e-13)
    assert side_root(s, 1, 0.0) == 0.0
    with pytest.raises(DomainError):
        side_root(s, 1, -0.1)
    with pytest.raises(DomainError):
        side_root(s, 1, 1e14, xbound=10.0)


@settings(max_examples=25, deadline=None)
@given(y=st.floats(1e-4, 0.66))
def test_sdi_against_scipy(y):
    s = quartic()
    w = math.sqrt(2 * y)
    g = lambda x: np.polynomial.polynomial.polyval(x, QUARTIC_G)
    ref_p = -quad(lambda x: x * x / g(x), w, 0.0, epsabs=0, epsrel=1e-13)[0]
    ref_m = -quad(lambda x: x * x / g(x), -w, 0.0, epsabs=0, epsrel=1e-13)[0]
    im, ip = sdi_pm(s, y, 1e-12)
    assert ip == pytest.approx(ref_p, rel=1e-10)
    assert im == pytest.approx(ref_m, rel=1e-10)


def test_sdi_sign_and_balanced_zero():
    s = quartic()
    assert sdi_total(s, 0.6) < 0 < sdi_total(s, 0.2)
    assert abs(sdi_total(s, Y_HAT, 1e-13)) < 1e-11
    assert sdi_total(s, 0.0) == 0.0


def test_numpy_and_compiled_paths_agree():
    s = quartic()
    ys = [1e-3, 0.1, 0.4, 0.65]
    with _jit.use_numba(True):
        a = [sdi_pm(s, y, 1e-12) for y in ys]
    with _jit.use_numba(False):
        b = [sdi_pm(s, y, 1e-12) for y in ys]
    assert np.allclose(a, b, rtol=1e-11, atol=0)


def test_normal_form_invariance():
    s = quartic()
    for y in np.geomspace(1e-3, 0.05, 8):
        im, ip = sdi_pm(s, y, 1e-12)
        nm, np_ = sdi_normal_form(s, y, 1e-12, 32)
        assert abs(nm - im) < 1e-8 and abs(np_ - ip) < 1e-8


def test_normal_form_refuses_outside_series_reach():
    # psi is singular where F-' vanishes (x = -1, y = 1/6)
    f = [0.0, 0.0, 0.5, 1.0 / 3.0]
    s = PwsLienard.from_poly(f, f, [0, -1], [0, -1])
    assert sdi_normal_form(s, 1e-3, 1e-12, 32)[0] == pytest.approx(sdi_pm(s, 1e-3, 1e-12)[0])
    with pytest.raises(DomainError):
        sdi_normal_form(s, 0.15, 1e-12, 16)
    # exact polynomial normal form, but G+ vanishes before y = 1
    with pytest.raises(DomainError):
        sdi_normal_form(quartic(), 1.0, 1e-12, 16)


def test_profile_csv(tmp_path):
    p = sdi_profile(quartic(), [0.1, 0.2, 0.3])
    assert np.allclose(p.i_total, p.i_plus - p.i_minus)
    p.to_csv(tmp_path / "sdi.csv")
    lines = (tmp_path / "sdi.csv").read_text().splitlines()
    assert lines[0] == "y,I_minus,I_plus,I_total" and len(lines) == 4


@pytest.mark.parametrize("cl,lo,hi", [(mismatch_n3(), 0.1, 0.45), (n4k2(), 0.3, 0.48)],
                         ids=["n3", "n4"])
def test_infinity_chart_invariance(cl, lo, hi):
    for r in np.linspace(lo, hi, 10):
        assert invariance_check_inf(cl, float(r), 0.5) < 1e-7


def test_phi_curves_lie_on_critical_curve():
    cl = mismatch_n3()
    s = cl.to_pws()
    r = 0.3
    pm, pp = phi_curves(cl, r)
    # chart images of alpha(y), omega(y) at y = r^-(n+1)
    a, w = alpha_omega(s, r ** -(cl.n + 1))
    assert pm == pytest.approx(a * r, rel=1e-8)
    assert pp == pytest.approx(w * r, rel=1e-8)


def test_chart_arrays():
    ch = infinity_chart(mismatch_n3(), [0.2, 0.3], 0.5)
    assert ch.r.shape == ch.j_minus.shape == (2,)
    jm, jp = j_integrals(mismatch_n3(), 0.3, 0.5)
    assert ch.j_minus[1] == pytest.approx(jm) and ch.j_plus[1] == pytest.approx(jp)


def test_sign_violation_detected():
    # G+ changes sign at x = 1, so I+ is undefined beyond F+(1) = 1
    s = PwsLienard.from_poly([0, 0, 1], [0, 0, 1], [0, -1], [0, -1, 1])
    with pytest.raises(DomainError):
        sdi_pm(s, 2.0)
