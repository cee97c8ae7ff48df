"""Piecewise-smooth Lienard systems and the standing assumptions on them."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from numpy.polynomial import polynomial as P

from .errors import AssumptionViolation, EvaluationError

EPS = np.finfo(float).eps
TOL_ASSUM_POLY = 1e-10
TOL_ASSUM_BLACKBOX = 1e-6


def _fd_step(x):
    return np.cbrt(EPS) * np.maximum(1.0, np.abs(x))


@dataclass(frozen=True, eq=False)
class ScalarFn:
    """A real function of one variable with derivative access.

    Polynomials (ascending coefficients) differentiate exactly.  Blackbox
    evaluators use supplied analytic derivatives when present and fourth
    order central differences otherwise.
    """

    coeffs: np.ndarray | None = None
    func: Callable | None = None
    derivs: tuple = ()
    h: float | None = None
    complex_ok: bool = False
    name: str = "f"

    def __post_init__(self):
        if (self.coeffs is None) == (self.func is None):
            raise ValueError("ScalarFn needs exactly one of coeffs or func")
        if self.coeffs is not None:
            c = np.atleast_1d(np.asarray(self.coeffs, dtype=float))
            object.__setattr__(self, "coeffs", c)

    @classmethod
    def poly(cls, coeffs: Sequence[float], name: str = "f") -> "ScalarFn":
        return cls(coeffs=np.asarray(coeffs, dtype=float), name=name)

    @classmethod
    def blackbox(cls, func: Callable, derivs: Sequence[Callable] = (), *,
                 h: float | None = None, complex_ok: bool = False,
                 name: str = "f") -> "ScalarFn":
        return cls(func=func, derivs=tuple(derivs), h=h, complex_ok=complex_ok, name=name)

    @property
    def is_polynomial(self) -> bool:
        return self.coeffs is not None

    def __call__(self, x):
        if self.coeffs is not None:
            return P.polyval(x, self.coeffs)
        try:
            out = self.func(x)
        except Exception as exc:  # noqa: BLE001 - re-raised with context
            raise EvaluationError(f"cannot evaluate {self.name} at {x!r}: {exc}") from exc
        out = np.asarray(out, dtype=float) if np.isrealobj(out) else np.asarray(out)
        if not np.all(np.isfinite(out)):
            raise EvaluationError(f"{self.name} is not finite at {x!r}")
        return out if out.ndim else float(out)

    def derivative(self, k: int = 1) -> "ScalarFn":
        if k == 0:
            return self
        if self.coeffs is not None:
            c = P.polyder(self.coeffs, k) if self.coeffs.size > k else np.zeros(1)
            return ScalarFn.poly(c, name=self.name + "'" * k)
        if len(self.derivs) >= k:
            rest = self.derivs[k:]
            return ScalarFn.blackbox(self.derivs[k - 1], rest, h=self.h,
                                     name=self.name + "'" * k)
        if k > 2:
            raise EvaluationError(f"{self.name}: derivative of order {k} needs an analytic form")
        return ScalarFn.blackbox(lambda x, _k=k: self._fd(x, _k), name=self.name + "'" * k)

    def _fd(self, x, k):
        x = np.asarray(x, dtype=float)
        h = self.h if self.h is not None else _fd_step(x)
        f = self.__call__
        if k == 1:
            return (-f(x + 2 * h) + 8 * f(x + h) - 8 * f(x - h) + f(x - 2 * h)) / (12 * h)
        return (-f(x + 2 * h) + 16 * f(x + h) - 30 * f(x) + 16 * f(x - h)
                - f(x - 2 * h)) / (12 * h * h)

    def taylor(self, order: int, radius: float = 0.5) -> np.ndarray:
        """Taylor coefficients at 0 up to ``order``.

        Exact for polynomials.  Blackbox functions that accept complex input
        go through a Cauchy integral on a circle (trapezoid rule / FFT).
        """
        if self.coeffs is not None:
            out = np.zeros(order + 1)
            m = min(order + 1, self.coeffs.size)
            out[:m] = self.coeffs[:m]
            return out
        if not self.complex_ok:
            raise EvaluationError(
                f"{self.name}: Taylor coefficients need a polynomial or a complex-capable evaluator")
        npts = 4 * (order + 1)
        z = radius * np.exp(2j * np.pi * np.arange(npts) / npts)
        vals = np.asarray(self.func(z), dtype=complex)
        c = np.fft.fft(vals) / npts
        return (c[: order + 1] / radius ** np.arange(order + 1)).real


@dataclass(frozen=True, eq=False)
class PwsLienard:
    """x' = y - F(x), y' = eps^2 (eps alpha + G(x)), with F, G split at x = 0.

    For the fractal analysis only eps = 0 matters; ``epsilon`` and the
    breaking parameters are used by the simulation module.
    """

    f_minus: ScalarFn
    f_plus: ScalarFn
    g_minus: ScalarFn
    g_plus: ScalarFn
    epsilon: float = 0.0
    alpha_minus: float = 0.0
    alpha_plus: float = 0.0
    name: str = "system"

    def __post_init__(self):
        if self.epsilon < 0:
            raise ValueError("epsilon must be >= 0")

    @classmethod
    def from_poly(cls, f_minus, f_plus, g_minus, g_plus, **kwargs) -> "PwsLienard":
        return cls(ScalarFn.poly(f_minus, "F-"), ScalarFn.poly(f_plus, "F+"),
                   ScalarFn.poly(g_minus, "G-"), ScalarFn.poly(g_plus, "G+"), **kwargs)

    @property
    def is_polynomial(self) -> bool:
        return all(f.is_polynomial for f in (self.f_minus, self.f_plus, self.g_minus, self.g_plus))

    def side(self, sign: int) -> tuple[ScalarFn, ScalarFn]:
        return (self.f_plus, self.g_plus) if sign > 0 else (self.f_minus, self.g_minus)

    def with_params(self, **kwargs) -> "PwsLienard":
        fields = dict(f_minus=self.f_minus, f_plus=self.f_plus, g_minus=self.g_minus,
                      g_plus=self.g_plus, epsilon=self.epsilon, alpha_minus=self.alpha_minus,
                      alpha_plus=self.alpha_plus, name=self.name)
        fields.update(kwargs)
        return PwsLienard(**fields)

    def default_tol(self) -> float:
        return TOL_ASSUM_POLY if self.is_polynomial else TOL_ASSUM_BLACKBOX


@dataclass(frozen=True)
class ClassicalLienard:
    """Normalised PWS classical Lienard system of degree n + 1.

    F-(x) = (-1)^(n+1) x^(n+1) + sum b_k^- x^k,  F+(x) = x^(n+1) + sum b_k^+ x^k,
    G+-(x) = -a1^+- x, with k running over 2..n.
    """

    n: int
    a1_minus: float
    a1_plus: float
    b_minus: tuple = ()
    b_plus: tuple = ()

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")
        object.__setattr__(self, "b_minus", tuple(float(b) for b in self.b_minus))
        object.__setattr__(self, "b_plus", tuple(float(b) for b in self.b_plus))
        if len(self.b_minus) != self.n - 1 or len(self.b_plus) != self.n - 1:
            raise ValueError(f"expected {self.n - 1} coefficients b_2..b_n per side")
        if self.a1_minus <= 0 or self.a1_plus <= 0:
            raise AssumptionViolation("a1 coefficients must be positive")
        if self.n >= 2 and (self.b_minus[0] <= 0 or self.b_plus[0] <= 0):
            raise AssumptionViolation("b_2 coefficients must be positive")

    def f_coeffs(self, sign: int) -> np.ndarray:
        c = np.zeros(self.n + 2)
        b = self.b_plus if sign > 0 else self.b_minus
        c[2:self.n + 1] = b
        c[self.n + 1] = 1.0 if sign > 0 else (-1.0) ** (self.n + 1)
        if self.n == 1:
            c[2] = 1.0
        return c

    def to_pws(self, name: str = "classical") -> PwsLienard:
        return PwsLienard.from_poly(self.f_coeffs(-1), self.f_coeffs(1),
                                    [0.0, -self.a1_minus], [0.0, -self.a1_plus], name=name)

    def check_intervals(self, x_max: float = 1e3, n_samples: int = 10_000) -> "AssumptionReport":
        return validate_interval(self.to_pws(), (-x_max, 0.0), (0.0, x_max), n_samples)


@dataclass
class AssumptionReport:
    """Outcome of assumption checks; ``None`` marks a check not performed."""

    hopf_ok: bool | None = None
    interval_ok: bool | None = None
    violations: list = field(default_factory=list)
    provenance: str = "exact"

    @property
    def ok(self) -> bool:
        return all(flag is not False for flag in (self.hopf_ok, self.interval_ok))

    def merge(self, other: "AssumptionReport") -> "AssumptionReport":
        prov = self.provenance if self.provenance == other.provenance else "mixed"
        return AssumptionReport(
            self.hopf_ok if other.hopf_ok is None else other.hopf_ok,
            self.interval_ok if other.interval_ok is None else other.interval_ok,
            self.violations + other.violations, prov)

    def to_dict(self) -> dict:
        return {"hopf_ok": self.hopf_ok, "interval_ok": self.interval_ok,
                "violations": [list(v) for v in self.violations],
                "provenance": self.provenance}


def _eval(fn: ScalarFn, x: float, k: int = 0) -> float:
    try:
        return float(fn.derivative(k)(x))
    except EvaluationError:
        raise
    except Exception as exc:  # noqa: BLE001
        raise EvaluationError(f"cannot evaluate {fn.name} (derivative {k}) at {x}: {exc}") from exc


def validate_hopf(sys: PwsLienard, tol_assum: float | None = None) -> AssumptionReport:
    """Check F(0) = F'(0) = G(0) = 0, F''(0) > 0, G'(0) < 0 on both sides."""
    tol = sys.default_tol() if tol_assum is None else tol_assum
    violations = []
    for tag, (F, G) in (("-", sys.side(-1)), ("+", sys.side(1))):
        checks = [
            (f"F{tag}(0)=0", _eval(F, 0.0), lambda v: abs(v) <= tol),
            (f"F{tag}'(0)=0", _eval(F, 0.0, 1), lambda v: abs(v) <= tol),
            (f"G{tag}(0)=0", _eval(G, 0.0), lambda v: abs(v) <= tol),
            (f"F{tag}''(0)>0", _eval(F, 0.0, 2), lambda v: v > tol),
            (f"G{tag}'(0)<0", _eval(G, 0.0, 1), lambda v: v < -tol),
        ]
        for cid, value, passes in checks:
            if not passes(value):
                violations.append((cid, 0.0, value))
    return AssumptionReport(hopf_ok=not violations, violations=violations)


def _sample_side(lo: float, hi: float, n: int) -> np.ndarray:
    """Samples of an interval with 0 as one endpoint, dense near 0."""
    far = hi if lo == 0.0 else lo
    if far == 0.0:
        raise ValueError("interval must have nonzero length")
    if lo != 0.0 and hi != 0.0:
        raise ValueError("interval must have 0 as an endpoint")
    half = n // 2
    mags = np.concatenate([np.geomspace(1e-8, 1.0, half), np.linspace(0.0, 1.0, n - half + 1)[1:]])
    return np.sort(np.unique(mags)) * far


def validate_interval(sys: PwsLienard, l_minus: tuple, l_plus: tuple,
                      n_samples: int = 10_000) -> AssumptionReport:
    """Sampled sign test of F-' < 0, G- > 0 on L- and F+' > 0, G+ < 0 on L+.

    Sign-definiteness on an interval cannot be decided for a blackbox, so
    the report carries ``provenance='sampled'``.
    """
    violations = []
    for tag, interval, sign in (("-", l_minus, -1), ("+", l_plus, 1)):
        F, G = sys.side(sign)
        xs = _sample_side(float(interval[0]), float(interval[1]), n_samples)
        dF = np.asarray(F.derivative(1)(xs), dtype=float)
        Gv = np.asarray(G(xs), dtype=float)
        bad_f = np.nonzero(sign * dF <= 0)[0]
        bad_g = np.nonzero(sign * Gv >= 0)[0]
        cond_f = f"F{tag}'{'<' if sign < 0 else '>'}0"
        cond_g = f"G{tag}{'>' if sign < 0 else '<'}0"
        for i in bad_f[:5]:
            violations.append((cond_f, float(xs[i]), float(dF[i])))
        for i in bad_g[:5]:
            violations.append((cond_g, float(xs[i]), float(Gv[i])))
    return AssumptionReport(interval_ok=not violations, violations=violations,
                            provenance="sampled")


def lienard_f_coeffs(cl: ClassicalLienard, tol_coeff: float = 1e-12):
    """Coefficients f_k of F+(x) - F-(-x) for k = 2..n, and k0 = max k with f_k != 0."""
    k = np.arange(2, cl.n + 1)
    f = np.asarray(cl.b_plus) + (-1.0) ** (k + 1) * np.asarray(cl.b_minus)
    nz = np.nonzero(np.abs(f) > tol_coeff)[0]
    k0 = int(k[nz[-1]]) if nz.size else None
    return f, k0


class SigmaRegion(str, enum.Enum):
    CROSSING = "crossing"
    SLIDING = "sliding"
    TANGENCY = "tangency"


def classify_sigma(sys: PwsLienard, y: float, tol: float = 1e-12) -> SigmaRegion:
    """Filippov classification of the point (0, y) of the switching line."""
    am = y - _eval(sys.f_minus, 0.0)
    ap = y - _eval(sys.f_plus, 0.0)
    if min(abs(am), abs(ap)) <= tol:
        return SigmaRegion.TANGENCY
    return SigmaRegion.SLIDING if am * ap < 0 else SigmaRegion.CROSSING
