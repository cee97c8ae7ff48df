"""Slow relation function, entry-exit orbits and balanced canard cycles."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from . import _jit, kernels
from .errors import DomainError, QuadratureError, RegimeError
from .model import PwsLienard
from .sdi import QUAD_TOL, ROOT_TOL, X_BOUND, poly_side, sdi_pm, sdi_total, side_integral, side_root

HOPF = "hopf"
BOUNDED = "bounded"
UNBOUNDED = "unbounded"
FORWARD = "forward_H"
INVERSE = "inverse_H"

_TERMINATION = {
    kernels.LIMIT_REACHED: "limit_reached",
    kernels.MAX_ITER: "max_iter",
    kernels.STALLED: "stalled",
}


@dataclass(frozen=True)
class Orbit:
    """A monotone orbit of H or of its inverse."""

    values: np.ndarray
    regime: str
    direction: str
    termination: str
    limit: float = 0.0
    n: int | None = None
    flags: tuple = ()

    def __len__(self):
        return self.values.size

    @property
    def gaps(self) -> np.ndarray:
        return np.abs(np.diff(self.values))

    def distance_to_limit(self) -> np.ndarray:
        if self.regime == UNBOUNDED:
            return self.values ** (-1.0 / (self.n + 1))
        return np.abs(self.values - self.limit)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["l", "y_l", "gap"])
            v = self.values
            for i, y in enumerate(v):
                gap = repr(float(v[i] - v[i + 1])) if i + 1 < v.size else ""
                w.writerow([i, repr(float(y)), gap])


def _side_solve(sys: PwsLienard, sign: int, target: float, guess: float,
                quad_tol: float, xbound: float) -> float:
    """x of the given sign with -int_x^0 F'^2/G = target (target < 0)."""
    if target == 0.0:
        return 0.0
    if _jit.USE_NUMBA and sys.is_polynomial:
        ps = poly_side(sys, sign)
        x = kernels.solve_side_sdi(ps.h, ps.g, float(sign), float(target), abs(guess),
                                   xbound, quad_tol)
        if not math.isfinite(x):
            raise DomainError(f"I{'+' if sign > 0 else '-'} does not reach {target:.6g} "
                              f"within |x| <= {xbound}")
        return x
    F, G = sys.side(sign)
    dF = F.derivative(1)

    def resid(u):
        return side_integral(sys, sign, sign * u, quad_tol) - target

    g = abs(guess) if guess else 1.0
    inner, outer = 0.0, g
    while resid(outer) > 0.0:
        inner, outer = outer, 2.0 * outer
        if outer > xbound:
            if resid(xbound) > 0.0:
                raise DomainError(f"I{'+' if sign > 0 else '-'} does not reach {target:.6g} "
                                  f"within |x| <= {xbound}")
            outer = xbound
            break
    lo, hi = inner, outer
    u = g if lo < g < hi else 0.5 * (lo + hi)
    for _ in range(100):
        r = resid(u)
        if r == 0.0:
            return sign * u
        if r > 0.0:
            lo = u
        else:
            hi = u
        d = sign * float(dF(sign * u)) ** 2 / float(G(sign * u))
        un = u - r / d if d != 0.0 else 0.5 * (lo + hi)
        if not lo < un < hi:
            un = 0.5 * (lo + hi)
        if abs(un - u) <= 4e-16 * u or hi - lo <= 4e-16 * hi:
            return sign * un
        u = un
    return sign * u


def slow_relation(sys: PwsLienard, y: float, quad_tol: float = QUAD_TOL,
                  root_tol: float = ROOT_TOL, inverse: bool = False,
                  xbound: float = X_BOUND) -> float:
    """H(y) solving I-(H(y)) = I+(y), or the inverse map when ``inverse``."""
    if y <= 0.0:
        raise DomainError("the slow relation function is defined for y > 0")
    src, tgt = (-1, 1) if inverse else (1, -1)
    xs = side_root(sys, src, y, root_tol, xbound)
    target = side_integral(sys, src, xs, quad_tol)
    xt = _side_solve(sys, tgt, target, side_root(sys, tgt, y, root_tol, xbound), quad_tol, xbound)
    return float(sys.side(tgt)[0](xt))


def slow_vector_field(sys: PwsLienard, sign: int) -> Callable:
    """x -> G(x)/F'(x) on one side, with the removable value at 0 filled in."""
    F, G = sys.side(sign)
    dF = F.derivative(1)
    at0 = float(G.derivative(1)(0.0)) / float(F.derivative(2)(0.0))

    def f(x):
        x = np.asarray(x, dtype=float)
        with np.errstate(invalid="ignore", divide="ignore"):
            out = np.where(x == 0.0, at0, G(x) / dF(x))
        return out if out.ndim else float(out)

    return f


def slow_dynamics_root(f: Callable, bracket: tuple[float, float], tol: float = 1e-14) -> float:
    """Zero of the slow dynamics inside a sign-changing bracket."""
    a, b = map(float, bracket)
    fa, fb = float(f(a)), float(f(b))
    if fa == 0.0:
        return a
    if fb == 0.0:
        return b
    if fa * fb > 0:
        raise DomainError(f"slow dynamics has no sign change on [{a}, {b}]")
    return brentq(f, a, b, xtol=tol, rtol=4 * np.finfo(float).eps)


# ------------------------------------------------------------- sign scans

def _scan_grid(regime: str, y0: float, limit: float, n: int = 24) -> np.ndarray:
    if regime == HOPF:
        return y0 * np.geomspace(1e-4, 1.0, n)
    if regime == BOUNDED:
        return limit + (y0 - limit) * np.geomspace(1e-4, 1.0, n)
    return y0 * np.geomspace(1.0, 1e4, n)


def hopf_window(sys: PwsLienard, y_max: float, quad_tol: float = QUAD_TOL,
                n_grid: int = 40, y_min_ratio: float = 1e-6) -> tuple[float, bool]:
    """Largest y* <= y_max such that I keeps one sign on ]0, y*[ (sampled).

    Returns (y*, shrunk).  The window is cut at the first sign change
    found scanning upward from small y.
    """
    grid = y_max * np.geomspace(y_min_ratio, 1.0, n_grid)
    vals = np.array([sdi_total(sys, float(y), quad_tol) for y in grid])
    s = np.sign(vals)
    ref = s[np.nonzero(s)[0][0]] if np.any(s) else 0.0
    for i in range(1, grid.size):
        if s[i] != ref and s[i] != 0:
            root = brentq(lambda y: sdi_total(sys, y, quad_tol), grid[i - 1], grid[i],
                          xtol=1e-14 * grid[i])
            return float(root), True
    return float(y_max), False


def _degenerate(vals: np.ndarray, scale: np.ndarray, quad_tol: float) -> bool:
    return bool(np.all(np.abs(vals) <= 10.0 * quad_tol * np.maximum(np.abs(scale), 1e-300)))


def orbit_generate(sys: PwsLienard, y0: float, regime: str = HOPF, direction: str = "auto",
                   max_iter: int = 100_000, stop_tol: float | None = None,
                   quad_tol: float = QUAD_TOL, root_tol: float = ROOT_TOL,
                   y_hat: float | None = None, n: int | None = None,
                   xbound: tuple[float, float] = (X_BOUND, X_BOUND)) -> Orbit:
    """Iterate H or its inverse from y0 toward the regime's limit.

    regime: ``hopf`` (limit 0), ``bounded`` (limit ``y_hat``) or
    ``unbounded`` (to infinity; ``n`` is the degree minus one, inferred
    from F+ for polynomial systems).  The direction follows from the sign
    of I between y0 and the limit: H is iterated exactly when I > 0 and
    the orbit has to decrease, or I < 0 and it has to increase.
    ``xbound`` = (|x| bound on the left, on the right) keeps every root
    inside the validated intervals.
    """
    if y0 <= 0:
        raise DomainError("y0 must be positive")
    flags = []
    if regime == HOPF:
        limit, decreasing = 0.0, True
        stop = 1e-12 * y0 if stop_tol is None else stop_tol
    elif regime == BOUNDED:
        if y_hat is None:
            raise ValueError("bounded regime needs y_hat")
        limit, decreasing = float(y_hat), y0 > y_hat
        stop = 1e-10 if stop_tol is None else stop_tol
    elif regime == UNBOUNDED:
        limit, decreasing = math.inf, False
        if n is None:
            if not sys.is_polynomial:
                raise ValueError("unbounded regime needs n for non-polynomial systems")
            n = sys.f_plus.coeffs.size - 2
        r_stop = 1e-10 if stop_tol is None else stop_tol
        stop = r_stop ** (-(n + 1))
    else:
        raise ValueError(f"unknown regime {regime!r}")

    grid = _scan_grid(regime, y0, limit)
    pm = np.array([sdi_pm(sys, float(y), quad_tol) for y in grid])
    vals = pm[:, 1] - pm[:, 0]
    if _degenerate(vals, pm[:, 1], quad_tol):
        return Orbit(np.array([y0]), regime, FORWARD if direction == "auto" else direction,
                     "stalled", limit, n, ("degenerate_identity",))
    signs = np.sign(vals)
    if np.any(signs != signs[-1]):
        raise RegimeError(
            f"I changes sign between y0={y0} and the limit; "
            "search for balanced canard cycles instead")
    forward = (signs[-1] > 0) == decreasing
    auto = FORWARD if forward else INVERSE
    if direction == "auto":
        direction = auto
    elif direction != auto:
        raise RegimeError(f"direction {direction} is inconsistent with the sign of I "
                          f"(expected {auto})")

    if _jit.USE_NUMBA and sys.is_polynomial:
        values, code = _orbit_fast(sys, y0, forward, limit, stop, regime == UNBOUNDED,
                                   max_iter, quad_tol, xbound)
    else:
        values, code = _orbit_generic(sys, y0, forward, limit, stop, regime == UNBOUNDED,
                                      max_iter, quad_tol, root_tol, xbound)
    if code == kernels.OUT_OF_DOMAIN:
        flags.append("left_validated_domain")
        code = kernels.STALLED
    elif code == kernels.NUMERIC_FAILURE:
        raise QuadratureError("quadrature failed during orbit generation")
    return Orbit(values, regime, direction, _TERMINATION[code], limit, n, tuple(flags))


def _orbit_fast(sys, y0, forward, limit, stop, to_inf, max_iter, quad_tol, xbound):
    m = poly_side(sys, -1)
    p = poly_side(sys, 1)
    out, count, code = kernels.orbit_poly(m.f, m.df, p.f, p.df, m.h, m.g, p.h, p.g,
                                          float(y0), bool(forward), float(limit)
                                          if math.isfinite(limit) else 0.0,
                                          float(stop), bool(to_inf), int(max_iter),
                                          float(quad_tol), float(xbound[0]), float(xbound[1]))
    return np.array(out[:count]), int(code)


def _orbit_generic(sys, y0, forward, limit, stop, to_inf, max_iter, quad_tol, root_tol, xbound):
    src, tgt = (1, -1) if forward else (-1, 1)
    bsrc, btgt = (xbound[1], xbound[0]) if forward else (xbound[0], xbound[1])
    out = [float(y0)]
    y = float(y0)
    try:
        xs = side_root(sys, src, y, root_tol, bsrc)
        xt = side_root(sys, tgt, y, root_tol, btgt)
    except DomainError:
        return np.array(out), kernels.OUT_OF_DOMAIN
    Ft = sys.side(tgt)[0]
    direction = 0.0
    for _ in range(max_iter):
        if (y >= stop) if to_inf else (abs(y - limit) < stop):
            return np.array(out), kernels.LIMIT_REACHED
        target = side_integral(sys, src, xs, quad_tol)
        try:
            xt = _side_solve(sys, tgt, target, xt, quad_tol, btgt)
        except DomainError:
            return np.array(out), kernels.OUT_OF_DOMAIN
        ynew = float(Ft(xt))
        step = ynew - y
        if step == 0.0 or direction * step < 0.0:
            return np.array(out), kernels.STALLED
        direction = math.copysign(1.0, step)
        y = ynew
        out.append(y)
        try:
            xs = side_root(sys, src, y, root_tol, bsrc, guess=xs)
        except DomainError:
            return np.array(out), kernels.OUT_OF_DOMAIN
    if (y >= stop) if to_inf else (abs(y - limit) < stop):
        return np.array(out), kernels.LIMIT_REACHED
    return np.array(out), kernels.MAX_ITER


# ------------------------------------------------------ balanced canards

@dataclass(frozen=True)
class BalancedZero:
    y_hat: float
    multiplicity: int
    slope: float


@dataclass(frozen=True)
class BalancedScan:
    zeros: list = field(default_factory=list)
    degenerate: bool = False


def zero_multiplicity(fn: Callable[[float], float], y_hat: float,
                      decade: tuple[float, float] = (1e-4, 1e-2), n: int = 9) -> tuple[int, float]:
    """Order of a zero from the log-log slope of |fn| against the distance to it."""
    d = np.geomspace(decade[0], decade[1], n) * max(1.0, abs(y_hat))
    slopes = []
    for side in (-1.0, 1.0):
        v = np.abs([fn(y_hat + side * di) for di in d])
        if np.all(v > 0):
            slopes.append(np.polyfit(np.log(d), np.log(v), 1)[0])
    if not slopes:
        raise DomainError("cannot measure the multiplicity: |I| vanishes on the sample")
    slope = float(np.mean(slopes))
    return max(1, int(round(slope))), slope


def find_balanced(sys: PwsLienard, y_lo: float, y_hi: float, quad_tol: float = QUAD_TOL,
                  root_tol: float = ROOT_TOL, n_grid: int = 200) -> BalancedScan:
    """All zeros of I on [y_lo, y_hi] with multiplicity estimates.

    Odd-order zeros are found as sign changes.  Even-order zeros show up as
    local minima of |I| that reach the quadrature noise level.
    """
    grid = np.linspace(y_lo, y_hi, n_grid)
    pm = np.array([sdi_pm(sys, float(y), quad_tol) for y in grid])
    vals = pm[:, 1] - pm[:, 0]
    if _degenerate(vals, pm[:, 1], quad_tol):
        return BalancedScan([], True)

    def total(y):
        return sdi_total(sys, y, quad_tol)

    roots = []
    for i in range(grid.size - 1):
        a, b = vals[i], vals[i + 1]
        if a == 0.0:
            roots.append(float(grid[i]))
        elif a * b < 0.0:
            roots.append(brentq(total, grid[i], grid[i + 1], xtol=root_tol,
                                rtol=4 * np.finfo(float).eps))
    av = np.abs(vals)
    for i in range(1, grid.size - 1):
        if av[i] < av[i - 1] and av[i] < av[i + 1] and vals[i - 1] * vals[i + 1] > 0:
            res = minimize_scalar(lambda y: abs(total(y)), bracket=(grid[i - 1], grid[i], grid[i + 1]),
                                  tol=1e-12)
            if abs(res.fun) <= 100.0 * quad_tol * max(abs(pm[i, 1]), 1e-300):
                roots.append(float(res.x))
    zeros = []
    for r in sorted(roots):
        span = min(r - y_lo, y_hi - r)
        hi_dec = min(1e-2, 0.5 * span / max(1.0, abs(r)))
        m, slope = zero_multiplicity(total, r, (min(1e-4, hi_dec / 10), hi_dec))
        zeros.append(BalancedZero(r, m, slope))
    return BalancedScan(zeros, False)
