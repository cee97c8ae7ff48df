"""Slow divergence integrals near the Hopf point, along bounded cycles and at infinity."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numpy.polynomial import polynomial as P
from scipy.optimize import brentq

from . import _jit, kernels
from .errors import DomainError, QuadratureError
from .model import ClassicalLienard, PwsLienard
from .quadrature import gauss_kronrod, integrate_log
from .series import side_g_series

QUAD_TOL = 1e-10
ROOT_TOL = 1e-12
X_BOUND = 1e6


@dataclass(frozen=True)
class PolySide:
    """Coefficient arrays of one side, laid out for the compiled kernels."""

    f: np.ndarray
    df: np.ndarray
    h: np.ndarray  # F'^2
    g: np.ndarray


def poly_side(sys: PwsLienard, sign: int) -> PolySide:
    F, G = sys.side(sign)
    df = P.polyder(F.coeffs) if F.coeffs.size > 1 else np.zeros(1)
    return PolySide(np.ascontiguousarray(F.coeffs, dtype=float), np.ascontiguousarray(df),
                    np.ascontiguousarray(P.polymul(df, df)),
                    np.ascontiguousarray(G.coeffs, dtype=float))


def _fast(sys: PwsLienard) -> bool:
    return _jit.USE_NUMBA and sys.is_polynomial


def side_root(sys: PwsLienard, sign: int, y: float, root_tol: float = ROOT_TOL,
              xbound: float = X_BOUND, guess: float | None = None) -> float:
    """The x with sign(x) = sign and F(x) = y on that side."""
    if y == 0.0:
        return 0.0
    if y < 0.0:
        raise DomainError(f"no point of the critical curve at height y={y} < 0")
    seed = math.sqrt(y) if guess is None else abs(guess)
    if _fast(sys):
        ps = poly_side(sys, sign)
        x = kernels.side_root(ps.f, ps.df, float(y), float(sign), seed, xbound, root_tol)
        if not math.isfinite(x):
            raise DomainError(f"F{'+' if sign > 0 else '-'} does not reach y={y} within |x|<={xbound}")
        return x
    F, _ = sys.side(sign)
    inner, outer = 0.0, seed
    while float(F(sign * outer)) < y:
        inner, outer = outer, 2.0 * outer
        if outer > xbound:
            if float(F(sign * xbound)) < y:
                raise DomainError(
                    f"F{'+' if sign > 0 else '-'} does not reach y={y} within |x|<={xbound}")
            outer = xbound
            break
    u = brentq(lambda t: float(F(sign * t)) - y, inner, outer, xtol=root_tol * seed,
               rtol=4 * np.finfo(float).eps, maxiter=500)
    return sign * u


def alpha_omega(sys: PwsLienard, y: float, root_tol: float = ROOT_TOL,
                xbound: float = X_BOUND) -> tuple[float, float]:
    """alpha(y) < 0 < omega(y) with F-(alpha) = y = F+(omega)."""
    if not y > 0.0:
        raise DomainError("alpha/omega need y > 0")
    return side_root(sys, -1, y, root_tol, xbound), side_root(sys, 1, y, root_tol, xbound)


def _check_nonvanishing(sys: PwsLienard, sign: int, x: float) -> None:
    _, G = sys.side(sign)
    xs = x * np.linspace(1.0, 0.0, 65)[:-1]
    gv = np.asarray(G(xs), dtype=float)
    bad = np.nonzero(gv * -sign <= 0.0)[0]
    if bad.size:
        raise DomainError(
            f"G{'+' if sign > 0 else '-'} vanishes or changes sign near x={xs[bad[0]]:.6g}; "
            "the integrand is singular there")


def side_integral(sys: PwsLienard, sign: int, x: float, quad_tol: float = QUAD_TOL) -> float:
    """-integral_x^0 F'^2 / G on one side."""
    if x == 0.0:
        return 0.0
    if _fast(sys):
        ps = poly_side(sys, sign)
        v = kernels.side_sdi(ps.h, ps.g, float(x), quad_tol)
        if not math.isfinite(v):
            raise QuadratureError(f"quadrature failed on [{x}, 0]")
        return v
    F, G = sys.side(sign)
    dF = F.derivative(1)

    def integrand(t):
        d = dF(t)
        return d * d / G(t)

    return -gauss_kronrod(integrand, x, 0.0, rtol=quad_tol).value


def sdi_pm(sys: PwsLienard, y: float, quad_tol: float = QUAD_TOL,
           check: bool = True) -> tuple[float, float]:
    """(I-(y), I+(y)) with I-(y) = -int_alpha^0 F-'^2/G- and likewise on the right."""
    if y == 0.0:
        return 0.0, 0.0
    a, w = alpha_omega(sys, y)
    if check:
        _check_nonvanishing(sys, -1, a)
        _check_nonvanishing(sys, 1, w)
    return side_integral(sys, -1, a, quad_tol), side_integral(sys, 1, w, quad_tol)


def sdi_total(sys: PwsLienard, y: float, quad_tol: float = QUAD_TOL) -> float:
    im, ip = sdi_pm(sys, y, quad_tol)
    return ip - im


def sdi_normal_form(sys: PwsLienard, y: float, quad_tol: float = QUAD_TOL,
                    order: int = 32) -> tuple[float, float]:
    """The same integrals computed in normal-form coordinates.

    I~(y) = -4 int_{+-sqrt y}^0 x^2 / g(x) dx with g = G(psi) psi' taken
    from its power series.  Raises when the truncated series is not
    accurate to ``quad_tol`` at |x| = sqrt(y).
    """
    if y == 0.0:
        return 0.0, 0.0
    if y < 0.0:
        raise DomainError("normal-form integrals need y >= 0")
    out = []
    xr = math.sqrt(y)
    for sign in (-1, 1):
        g = side_g_series(sys, sign, order)
        c = g.coeffs
        tail = abs(c[-1]) * xr ** order + abs(c[-2]) * xr ** (order - 1)
        head = abs(c[1]) * xr
        if not (tail <= quad_tol * head) or xr >= 0.9 * g.radius_estimate():
            raise DomainError(
                f"y={y} lies outside the reach of the order-{order} normal-form series; "
                "use a smaller y or a higher order")
        xs = sign * xr * np.linspace(0.0, 1.0, 257)[1:]
        if np.any(sign * g(xs) >= 0.0):
            raise DomainError(f"normal-form g{'+' if sign > 0 else '-'} vanishes on "
                              f"[0, {sign * xr:.6g}]; the sign condition on G fails below y={y}")
        val = gauss_kronrod(lambda x: x * x / g(x), sign * xr, 0.0, rtol=quad_tol).value
        out.append(-4.0 * val)
    return out[0], out[1]


@dataclass(frozen=True)
class SdiProfile:
    grid: np.ndarray
    i_minus: np.ndarray
    i_plus: np.ndarray
    i_total: np.ndarray
    quad_tol: float
    regime: str

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["y", "I_minus", "I_plus", "I_total"])
            for row in zip(self.grid, self.i_minus, self.i_plus, self.i_total):
                w.writerow([repr(float(v)) for v in row])


def sdi_profile(sys: PwsLienard, grid: Sequence[float], quad_tol: float = QUAD_TOL,
                regime: str = "hopf") -> SdiProfile:
    grid = np.asarray(grid, dtype=float)
    vals = np.array([sdi_pm(sys, float(y), quad_tol) for y in grid]).reshape(-1, 2)
    return SdiProfile(grid, vals[:, 0], vals[:, 1], vals[:, 1] - vals[:, 0], quad_tol, regime)


# ---------------------------------------------------------------- infinity

def _phi_poly(cl: ClassicalLienard, sign: int):
    n = cl.n
    b = np.asarray(cl.b_plus if sign > 0 else cl.b_minus)
    lead = 1.0 if sign > 0 else (-1.0) ** (n + 1)
    k = np.arange(2, n + 1)
    return n, b, lead, k


def _phi_solve(cl: ClassicalLienard, sign: int, s: np.ndarray, seed: np.ndarray,
               root_tol: float = ROOT_TOL) -> np.ndarray:
    """Newton on 1 - lead Phi^(n+1) - sum b_k s^(n+1-k) Phi^k = 0, vectorised in s."""
    n, b, lead, k = _phi_poly(cl, sign)
    s = np.asarray(s, dtype=float)
    phi = np.array(seed, dtype=float, copy=True) * np.ones_like(s)
    sk = s[..., None] ** (n + 1 - k) * b if k.size else None
    for _ in range(60):
        if k.size:
            pk = phi[..., None] ** k
            val = 1.0 - lead * phi ** (n + 1) - np.sum(sk * pk, axis=-1)
            der = -(n + 1) * lead * phi ** n - np.sum(sk * k * phi[..., None] ** (k - 1), axis=-1)
        else:
            val = 1.0 - lead * phi ** (n + 1)
            der = -(n + 1) * lead * phi ** n
        step = val / der
        phi = phi - step
        if np.all(np.abs(step) <= root_tol * np.maximum(1.0, np.abs(phi))):
            break
    else:
        raise DomainError("chart root did not converge; r lies outside the basin of Phi")
    target = float(sign)
    if np.any(np.abs(phi - target) >= 0.5) or np.any(~np.isfinite(phi)):
        raise DomainError("chart root left the basin of -1/+1; decrease r_tilde")
    return phi


def phi_curves(cl: ClassicalLienard, r: float, root_tol: float = ROOT_TOL,
               steps: int = 16) -> tuple[float, float]:
    """(Phi-(r), Phi+(r)), continued from Phi(0) = -1, +1."""
    if r < 0:
        raise DomainError("chart coordinate r must be >= 0")
    out = []
    for sign in (-1, 1):
        phi = float(sign)
        for s in np.linspace(0.0, r, steps + 1)[1:]:
            phi = float(_phi_solve(cl, sign, np.array(s), np.array(phi), root_tol))
        out.append(phi)
    return out[0], out[1]


def _j_integrand(cl: ClassicalLienard, sign: int):
    n, b, lead, k = _phi_poly(cl, sign)
    a1 = cl.a1_plus if sign > 0 else cl.a1_minus

    def f(s):
        s = np.asarray(s, dtype=float)
        phi = _phi_solve(cl, sign, s, np.full_like(s, float(sign)))
        brk = (n + 1) * lead * phi ** n
        if k.size:
            brk = brk + np.sum(k * b * s[..., None] ** (n + 1 - k) * phi[..., None] ** (k - 1),
                               axis=-1)
        return -(n + 1) * brk / (a1 * s ** (2 * n + 1) * phi)

    return f


def j_integrals(cl: ClassicalLienard, r: float, r_tilde: float,
                quad_tol: float = QUAD_TOL) -> tuple[float, float]:
    """(J-(r), J+(r)): the slow divergence integrals in the chart at infinity."""
    if not 0.0 < r <= r_tilde:
        raise DomainError("need 0 < r <= r_tilde")
    if r == r_tilde:
        return 0.0, 0.0
    phi_curves(cl, r_tilde)  # basin check along the whole range
    return tuple(integrate_log(_j_integrand(cl, s), r, r_tilde, rtol=quad_tol).value
                 for s in (-1, 1))


def invariance_check_inf(cl: ClassicalLienard, r: float, r_tilde: float,
                         quad_tol: float = QUAD_TOL) -> float:
    """|J-(r) - pullback-| + |J+(r) - pullback+|, both sides by independent quadrature.

    The pullback is -int F'^2/G over [Phi(r)/r, Phi(r_tilde)/r_tilde] in
    the original coordinates.
    """
    if r == r_tilde:
        return 0.0
    sys = cl.to_pws()
    j = j_integrals(cl, r, r_tilde, quad_tol)
    ph_r = phi_curves(cl, r)
    ph_t = phi_curves(cl, r_tilde)
    res = 0.0
    for idx, sign in enumerate((-1, 1)):
        F, G = sys.side(sign)
        dF = F.derivative(1)
        xa = ph_r[idx] / r
        xb = ph_t[idx] / r_tilde
        pull = -gauss_kronrod(lambda x: dF(x) ** 2 / G(x), xa, xb, rtol=quad_tol).value
        res += abs(j[idx] - pull)
    return res


@dataclass(frozen=True)
class InfinityChart:
    n: int
    r_tilde: float
    r: np.ndarray
    phi_minus: np.ndarray
    phi_plus: np.ndarray
    j_minus: np.ndarray
    j_plus: np.ndarray


def infinity_chart(cl: ClassicalLienard, r_grid: Sequence[float], r_tilde: float = 0.3,
                   quad_tol: float = QUAD_TOL) -> InfinityChart:
    r_grid = np.asarray(r_grid, dtype=float)
    phis = np.array([phi_curves(cl, float(r)) for r in r_grid]).reshape(-1, 2)
    js = np.array([j_integrals(cl, float(r), r_tilde, quad_tol) for r in r_grid]).reshape(-1, 2)
    return InfinityChart(cl.n, r_tilde, r_grid, phis[:, 0], phis[:, 1], js[:, 0], js[:, 1])
