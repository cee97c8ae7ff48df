"""Truncated power series and the normal-form data built from them."""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import AssumptionViolation, SeriesError
from .model import PwsLienard, ScalarFn

DEFAULT_ORDER = 16
TOL_COEFF = 1e-9


@dataclass(frozen=True, eq=False)
class TruncatedSeries:
    """Coefficients c_0..c_M of a power series about 0, closed at order M."""

    coeffs: np.ndarray

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=float, copy=True).ravel()
        if c.size == 0:
            raise SeriesError("series needs at least one coefficient")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def from_coeffs(cls, coeffs, order: int = DEFAULT_ORDER) -> "TruncatedSeries":
        c = np.zeros(order + 1)
        src = np.asarray(coeffs, dtype=float).ravel()[: order + 1]
        c[: src.size] = src
        return cls(c)

    @classmethod
    def identity(cls, order: int = DEFAULT_ORDER) -> "TruncatedSeries":
        return cls.from_coeffs([0.0, 1.0], order)

    @classmethod
    def constant(cls, value: float, order: int = DEFAULT_ORDER) -> "TruncatedSeries":
        return cls.from_coeffs([value], order)

    @property
    def order(self) -> int:
        return self.coeffs.size - 1

    def valuation(self, tol: float = TOL_COEFF) -> int | None:
        """Index of the first coefficient above ``tol`` (relative to the largest)."""
        thr = tol * max(1.0, float(np.max(np.abs(self.coeffs))))
        nz = np.nonzero(np.abs(self.coeffs) > thr)[0]
        return int(nz[0]) if nz.size else None

    def _coerce(self, other) -> "TruncatedSeries":
        if isinstance(other, TruncatedSeries):
            if other.order != self.order:
                raise SeriesError(f"order mismatch: {self.order} vs {other.order}")
            return other
        return TruncatedSeries.constant(float(other), self.order)

    def __add__(self, other):
        return TruncatedSeries(self.coeffs + self._coerce(other).coeffs)

    __radd__ = __add__

    def __neg__(self):
        return TruncatedSeries(-self.coeffs)

    def __sub__(self, other):
        return TruncatedSeries(self.coeffs - self._coerce(other).coeffs)

    def __rsub__(self, other):
        return TruncatedSeries(self._coerce(other).coeffs - self.coeffs)

    def __mul__(self, other):
        if not isinstance(other, TruncatedSeries):
            return TruncatedSeries(self.coeffs * float(other))
        other = self._coerce(other)
        return TruncatedSeries(np.convolve(self.coeffs, other.coeffs)[: self.order + 1])

    __rmul__ = __mul__

    def __truediv__(self, other):
        if not isinstance(other, TruncatedSeries):
            return TruncatedSeries(self.coeffs / float(other))
        return self * self._coerce(other).reciprocal()

    def __call__(self, x):
        return np.polynomial.polynomial.polyval(x, self.coeffs)

    def reciprocal(self) -> "TruncatedSeries":
        c = self.coeffs
        if c[0] == 0.0:
            raise SeriesError("reciprocal needs a nonzero constant term")
        out = np.zeros_like(c)
        out[0] = 1.0 / c[0]
        for k in range(1, c.size):
            out[k] = -np.dot(c[1:k + 1], out[k - 1::-1][:k]) / c[0]
        return TruncatedSeries(out)

    def sqrt(self) -> "TruncatedSeries":
        c = self.coeffs
        if c[0] <= 0.0:
            raise SeriesError("sqrt needs a positive constant term")
        out = np.zeros_like(c)
        out[0] = np.sqrt(c[0])
        for k in range(1, c.size):
            out[k] = (c[k] - np.dot(out[1:k], out[k - 1:0:-1])) / (2.0 * out[0])
        return TruncatedSeries(out)

    def derivative(self) -> "TruncatedSeries":
        """Term-wise derivative; the top coefficient is unknown and set to 0."""
        c = self.coeffs
        out = np.zeros_like(c)
        out[:-1] = c[1:] * np.arange(1, c.size)
        return TruncatedSeries(out)

    def compose(self, inner: "TruncatedSeries") -> "TruncatedSeries":
        """self(inner(x)); ``inner`` must vanish at 0."""
        inner = self._coerce(inner)
        if inner.coeffs[0] != 0.0:
            raise SeriesError("composition needs an inner series with zero constant term")
        out = TruncatedSeries.constant(self.coeffs[-1], self.order)
        for c in self.coeffs[-2::-1]:
            out = out * inner + c
        return out

    def reflect(self) -> "TruncatedSeries":
        """x -> -x."""
        return TruncatedSeries(self.coeffs * (-1.0) ** np.arange(self.coeffs.size))

    def truncate(self, order: int) -> "TruncatedSeries":
        return TruncatedSeries.from_coeffs(self.coeffs, order)

    def radius_estimate(self) -> float:
        """Root-test estimate of the radius of convergence from the tail."""
        c = np.abs(self.coeffs)
        k = np.arange(c.size)
        tail = (k >= max(1, c.size // 2)) & (c > 0)
        if not np.any(tail):
            return np.inf
        return float(np.min(c[tail] ** (-1.0 / k[tail])))


def series_invert(s: TruncatedSeries, max_newton: int = 12) -> TruncatedSeries:
    """Compositional inverse of a series with s(0) = 0 and s'(0) != 0.

    Newton iteration g <- g - (s(g) - x) / s'(g) doubles the number of
    correct coefficients per step.
    """
    c = s.coeffs
    if abs(c[0]) > 1e-14 * max(1.0, np.max(np.abs(c))):
        raise SeriesError("series to invert must vanish at 0")
    if c.size < 2 or c[1] == 0.0:
        raise SeriesError("series is not invertible: linear coefficient vanishes")
    s = TruncatedSeries(np.concatenate([[0.0], c[1:]]))
    ident = TruncatedSeries.identity(s.order)
    ds = s.derivative()
    g = ident / c[1]
    for _ in range(max_newton):
        resid = s.compose(g) - ident
        if np.max(np.abs(resid.coeffs)) == 0.0:
            break
        g = g - resid * ds.compose(g).reciprocal()
        g = TruncatedSeries(np.concatenate([[0.0], g.coeffs[1:]]))
    return g


def series_invert_fixed_point(s: TruncatedSeries) -> TruncatedSeries:
    """Inverse by the linearly convergent iteration g <- (x - N(g)) / c1."""
    c = s.coeffs
    if c[1] == 0.0:
        raise SeriesError("series is not invertible: linear coefficient vanishes")
    nonlinear = TruncatedSeries(np.concatenate([[0.0, 0.0], c[2:]]))
    ident = TruncatedSeries.identity(s.order)
    g = ident / c[1]
    for _ in range(s.order + 1):
        g = (ident - nonlinear.compose(g)) / c[1]
    return g


def psi_series(f_side: ScalarFn, sign: int = 1, order: int = DEFAULT_ORDER) -> TruncatedSeries:
    """Inverse of x -> x sqrt(f(x)) where F(x) = x^2 f(x) on the given side.

    ``f_side`` is the side function F itself; f is read off by shifting its
    Taylor coefficients down by two.
    """
    tf = f_side.taylor(order + 2)
    if abs(tf[0]) > 1e-10 or abs(tf[1]) > 1e-10:
        raise AssumptionViolation(f"F{'+' if sign > 0 else '-'} must vanish to second order at 0")
    f = TruncatedSeries(tf[2:order + 3])
    if f.coeffs[0] <= 0.0:
        raise AssumptionViolation(f"F{'+' if sign > 0 else '-'}''(0) must be positive")
    s = TruncatedSeries.identity(order) * f.sqrt()
    return series_invert(s)


def side_g_series(sys: PwsLienard, sign: int, order: int = DEFAULT_ORDER) -> TruncatedSeries:
    """g(x) = G(psi(x)) psi'(x) for one side, to the given order."""
    F, G = sys.side(sign)
    work = order + 1
    psi = psi_series(F, sign, work)
    g_taylor = TruncatedSeries(G.taylor(work))
    g = g_taylor.compose(psi) * psi.derivative()
    return g.truncate(order)


def gbar_series(sys: PwsLienard, order: int = DEFAULT_ORDER) -> TruncatedSeries:
    """G-bar(x) = g_-(x) + g_+(-x)."""
    return side_g_series(sys, -1, order) + side_g_series(sys, 1, order).reflect()


class Multiplicity(NamedTuple):
    """Valuation of G-bar; ``m0 is None`` means every coefficient up to ``order`` vanished."""

    m0: int | None
    leading: float | None
    order: int

    @property
    def infinite(self) -> bool:
        return self.m0 is None

    @property
    def label(self) -> str:
        return f">={self.order}" if self.m0 is None else str(self.m0)


def multiplicity_m0(gbar: TruncatedSeries, tol_coeff: float = TOL_COEFF) -> Multiplicity:
    v = gbar.valuation(tol_coeff)
    if v is None:
        return Multiplicity(None, None, gbar.order)
    return Multiplicity(v, float(gbar.coeffs[v]), gbar.order)
