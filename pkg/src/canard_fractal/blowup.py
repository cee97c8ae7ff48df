"""Family-chart blow-up of the Hopf point: first integrals and half-return maps."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from .errors import AssumptionViolation, FlowError
from .model import PwsLienard, validate_hopf


@dataclass(frozen=True)
class BlowupModel:
    beta_minus: float
    beta_plus: float
    g1_minus: float
    g1_plus: float
    f2_minus: float
    f2_plus: float

    def beta(self, side: int) -> float:
        return self.beta_plus if side > 0 else self.beta_minus

    def g1(self, side: int) -> float:
        return self.g1_plus if side > 0 else self.g1_minus

    def f2(self, side: int) -> float:
        return self.f2_plus if side > 0 else self.f2_minus

    @classmethod
    def from_betas(cls, beta_minus: float, beta_plus: float) -> "BlowupModel":
        """Model with F''(0) = 2, so that G'(0) = -beta."""
        return cls(beta_minus, beta_plus, -beta_minus, -beta_plus, 2.0, 2.0)


def beta_constants(sys: PwsLienard) -> BlowupModel:
    """beta = -2 G'(0) / F''(0) on both sides."""
    rep = validate_hopf(sys)
    if not rep.hopf_ok:
        raise AssumptionViolation(f"Hopf conditions fail: {rep.violations}")
    vals = {}
    for tag, sign in (("minus", -1), ("plus", 1)):
        F, G = sys.side(sign)
        g1 = float(G.derivative(1)(0.0))
        f2 = float(F.derivative(2)(0.0))
        vals[tag] = (-2.0 * g1 / f2, g1, f2)
    return BlowupModel(vals["minus"][0], vals["plus"][0], vals["minus"][1], vals["plus"][1],
                       vals["minus"][2], vals["plus"][2])


def first_integral(model: BlowupModel, side: int, xbar, ybar):
    """H(x, y) = exp(-2y/beta) (y/beta + G'(0) x^2/beta^2 + 1/2)."""
    b = model.beta(side)
    return np.exp(-2.0 * ybar / b) * (ybar / b + model.g1(side) * xbar ** 2 / b ** 2 + 0.5)


def _log2h(t: float) -> float:
    """log(2 h) = log(1 + 2t) - 2t for the scaled level h(t) = e^(-2t)(t + 1/2)."""
    z = 2.0 * t
    if abs(z) < 0.1:
        # -sum_{j>=2} (-z)^j / j, summed small terms first
        return -sum((-z) ** j / j for j in range(24, 1, -1))
    return math.log1p(z) - z


def _g(s: float) -> float:
    """s - (e^s - 1): the same level written in s = log(1 + 2t)."""
    if abs(s) < 0.1:
        return -sum(s ** j / math.factorial(j) for j in range(20, 1, -1))
    return s - math.expm1(s)


def half_return(model: BlowupModel, side: int, ybar: float, root_tol: float = 1e-14) -> float:
    """The u in ]-beta/2, 0[ on the level of H(0, ybar).

    Solved in s = log(1 + 2u/beta), where the level equation reads
    s - (e^s - 1) = log(1 + 2T) - 2T with T = ybar/beta; this stays
    accurate when the level is near 1/2 or underflows.  Results that round
    onto -beta/2 are nudged one ulp inside the range.
    """
    if not ybar > 0:
        raise ValueError("half-return map needs ybar > 0")
    b = model.beta(side)
    k = _log2h(ybar / b)
    if k == 0.0:
        return -math.nextafter(0.0, 1.0)
    # the root exceeds k - 1; k - 2 keeps the bracket sign-safe under rounding
    lo, hi = k - 2.0, 0.0
    s = brentq(lambda v: _g(v) - k, lo, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps,
               maxiter=500)
    u = 0.5 * b * math.expm1(s)
    floor = math.nextafter(-0.5 * b, 0.0)
    return min(max(u, floor), -math.nextafter(0.0, 1.0))


@dataclass(frozen=True)
class DeltaScan:
    sign: int | str  # +1, -1, 0 (identically zero) or "mixed"
    min_abs: float
    max_abs: float
    ybar: np.ndarray
    pi_minus: np.ndarray
    pi_plus: np.ndarray

    @property
    def delta(self) -> np.ndarray:
        return self.pi_plus - self.pi_minus

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["ybar", "pi_minus", "pi_plus", "delta"])
            for row in zip(self.ybar, self.pi_minus, self.pi_plus, self.delta):
                w.writerow([repr(float(v)) for v in row])


def delta_scan(model: BlowupModel, ybar_grid, root_tol: float = 1e-14) -> DeltaScan:
    """Sign of the difference map Pi+ - Pi- over a grid of ybar > 0."""
    ys = np.asarray(ybar_grid, dtype=float)
    pm = np.array([half_return(model, -1, y, root_tol) for y in ys])
    pp = np.array([half_return(model, 1, y, root_tol) for y in ys])
    d = pp - pm
    a = np.abs(d)
    if np.all(a <= 10.0 * root_tol):
        sign = 0
    elif np.all(d > 0):
        sign = 1
    elif np.all(d < 0):
        sign = -1
    else:
        sign = "mixed"
    return DeltaScan(sign, float(a.min()), float(a.max()), ys, pm, pp)


def _aux_rhs(beta):
    def rhs(t, z):
        u, y = z
        return [y * math.exp(-2.0 * y / beta), u * math.exp(-2.0 * u / beta)]
    return rhs


def separatrix_check(model: BlowupModel, side: int, ybar0: float = 1.0, ybar_end: float | None = None,
                     max_step: float = 0.05, root_tol: float = 1e-14, rtol: float = 1e-12) -> float:
    """Max |u - Pi(ybar)| along the auxiliary flow started on the graph of Pi.

    The graph of Pi is the stable manifold of the saddle at the origin of
    u' = y e^(-2y/beta), y' = u e^(-2u/beta).  Integrating backward in
    time moves away from the saddle and is numerically stable.
    """
    b = model.beta(side)
    if ybar0 == 0.0:
        rhs = _aux_rhs(b)
        return float(np.max(np.abs(rhs(0.0, [0.0, 0.0]))))
    end = 4.0 * b if ybar_end is None else ybar_end
    u0 = half_return(model, side, ybar0, root_tol)

    def reached(t, z):
        return z[1] - end
    reached.terminal = True

    sol = solve_ivp(_aux_rhs(b), (0.0, -1e4), [u0, ybar0], method="DOP853", rtol=rtol,
                    atol=1e-14, max_step=max_step, events=reached, dense_output=False)
    if sol.status < 0:
        raise FlowError(f"auxiliary integration failed: {sol.message}")
    us, ys = sol.y
    resid = [abs(u - half_return(model, side, y, root_tol)) for u, y in zip(us, ys) if y > 0]
    return float(max(resid))


def integrate_blowup(model: BlowupModel, side: int, state0, t_end: float, rtol: float = 1e-12):
    """Integrate x' = y - F''(0) x^2/2, y' = G'(0) x on one side (no switching)."""
    f2, g1 = model.f2(side), model.g1(side)

    def rhs(t, z):
        x, y = z
        return [y - 0.5 * f2 * x * x, g1 * x]

    sol = solve_ivp(rhs, (0.0, t_end), list(state0), method="DOP853", rtol=rtol,
                    atol=1e-14, dense_output=False, max_step=0.5)
    if sol.status < 0:
        raise FlowError(f"blow-up integration failed: {sol.message}")
    return sol.t, sol.y
