"""Direct integration of the PWS system, return maps on the switching line and cycle search."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq, minimize_scalar

from . import _jit, kernels
from .errors import FlowError
from .model import PwsLienard, SigmaRegion, classify_sigma

RK_TOL = 1e-10
EVENT_TOL = 1e-12
X_WINDOW = 50.0
MAX_STEPS = 2_000_000

STATUS = {
    kernels.FLOW_OK: "ok",
    kernels.FLOW_TIME_LIMIT: "time_limit",
    kernels.FLOW_TANGENCY: "tangency",
    kernels.FLOW_SLIDING: "sliding",
    kernels.FLOW_STEP_FAILURE: "step_failure",
    kernels.FLOW_ESCAPE: "escape",
}


class NoReturn(FlowError):
    """The orbit left the analysis window (or stopped) before coming back to the switching line."""


class UnresolvedCycles(FlowError):
    """The scanned map varies less than the integration noise, so its zeros mean nothing."""


@dataclass
class Trajectory:
    t: np.ndarray
    x: np.ndarray
    y: np.ndarray
    side: np.ndarray
    status: str
    crossing_t: np.ndarray
    crossing_y: np.ndarray
    crossing_div: np.ndarray  # divergence integrated up to each crossing
    divergence: float  # along the whole run, in the direction of integration

    @property
    def end(self) -> tuple:
        return float(self.x[-1]), float(self.y[-1])

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "x", "y", "side"])
            for row in zip(self.t, self.x, self.y, self.side):
                w.writerow([repr(float(row[0])), repr(float(row[1])), repr(float(row[2])),
                            int(row[3])])


def _poly_arrays(sys: PwsLienard):
    fm, fp = sys.f_minus.coeffs, sys.f_plus.coeffs
    dfm = np.polynomial.polynomial.polyder(fm) if fm.size > 1 else np.zeros(1)
    dfp = np.polynomial.polynomial.polyder(fp) if fp.size > 1 else np.zeros(1)
    return (np.ascontiguousarray(fm, float), np.ascontiguousarray(fp, float),
            np.ascontiguousarray(dfm, float), np.ascontiguousarray(dfp, float),
            np.ascontiguousarray(sys.g_minus.coeffs, float),
            np.ascontiguousarray(sys.g_plus.coeffs, float))


def _flow_kernel(sys, x0, y0, side0, tdir, n_cross, t_max, rtol, atol, event_tol, max_steps,
                 record, xwindow):
    fm, fp, dfm, dfp, gm, gp = _poly_arrays(sys)
    out = kernels.pws_flow(fm, fp, dfm, dfp, gm, gp, float(sys.epsilon), float(sys.alpha_minus),
                           float(sys.alpha_plus), float(x0), float(y0), float(side0), float(tdir),
                           int(n_cross), float(t_max), rtol, atol, event_tol, int(max_steps),
                           bool(record), float(xwindow))
    (x, y, z, t, side, status, nc, ts, xs, ys, sides, n_rec, ct, cy, cz) = out
    k = min(nc, ct.size)
    if record:
        rec = (ts[:n_rec].copy(), xs[:n_rec].copy(), ys[:n_rec].copy(), sides[:n_rec].copy())
    else:
        rec = (np.array([0.0, t]), np.array([x0, x]), np.array([y0, y]), np.array([side0, side]))
    return rec, int(status), ct[:k].copy(), cy[:k].copy(), cz[:k].copy(), float(z)


def _pick_side(sys, y, tdir, tang_tol):
    vm = tdir * (y - float(sys.f_minus(0.0)))
    vp = tdir * (y - float(sys.f_plus(0.0)))
    if abs(vm) <= tang_tol or abs(vp) <= tang_tol:
        return 0.0, kernels.FLOW_TANGENCY
    if vm * vp < 0.0:
        return 0.0, kernels.FLOW_SLIDING
    return (1.0 if vp > 0.0 else -1.0), kernels.FLOW_OK


def _flow_generic(sys, x0, y0, side0, tdir, n_cross, t_max, rtol, atol, event_tol, max_steps,
                  record, xwindow):
    """solve_ivp version: events located on the dense interpolant, one segment per side."""
    eps2 = sys.epsilon ** 2
    tang_tol = 1e3 * event_tol
    x, y, z, t = float(x0), float(y0), 0.0, 0.0
    side, status = float(side0), kernels.FLOW_OK
    if side == 0.0:
        if x0 != 0.0:
            side = 1.0 if x0 > 0 else -1.0
        else:
            side, status = _pick_side(sys, y, tdir, tang_tol)
    ts, xs, ys, ss = [np.array([t])], [np.array([x])], [np.array([y])], [np.array([side])]
    ct, cy, cz = [], [], []
    while status == kernels.FLOW_OK and (n_cross <= 0 or len(ct) < n_cross):
        if t >= t_max:
            status = kernels.FLOW_TIME_LIMIT
            break
        F, G = sys.side(int(side))
        dF = F.derivative(1)
        alpha = sys.alpha_plus if side > 0 else sys.alpha_minus
        eps_alpha = sys.epsilon * alpha

        def rhs(_, s, F=F, G=G, dF=dF, eps_alpha=eps_alpha):
            return [tdir * (s[1] - F(s[0])), tdir * eps2 * (eps_alpha + G(s[0])),
                    -tdir * dF(s[0])]

        def cross(_, s):
            return s[0]
        cross.terminal = True
        cross.direction = -1.0 if side > 0 else 1.0

        def escape(_, s):
            return xwindow - max(abs(s[0]), abs(s[1]) / xwindow)
        escape.terminal = True

        sol = solve_ivp(rhs, (t, t_max), [x, y, z], method="RK45", rtol=rtol, atol=atol,
                        events=(cross, escape))
        if sol.status < 0:
            status = kernels.FLOW_STEP_FAILURE
            break
        if record:
            ts.append(sol.t[1:])
            xs.append(sol.y[0, 1:])
            ys.append(sol.y[1, 1:])
            ss.append(np.full(sol.t.size - 1, side))
        t = float(sol.t[-1])
        x, y, z = (float(v) for v in sol.y[:, -1])
        if sol.t_events[1].size:
            status = kernels.FLOW_ESCAPE
            break
        if sol.t_events[0].size:
            t = float(sol.t_events[0][0])
            x, y, z = 0.0, float(sol.y_events[0][0][1]), float(sol.y_events[0][0][2])
            if record:
                ts[-1][-1], xs[-1][-1], ys[-1][-1] = t, 0.0, y
            ct.append(t)
            cy.append(y)
            cz.append(z)
            new_side, st = _pick_side(sys, y, tdir, tang_tol)
            if st != kernels.FLOW_OK or new_side == side:
                status = st if st != kernels.FLOW_OK else kernels.FLOW_TANGENCY
                break
            side = new_side
    if record:
        rec = tuple(np.concatenate(a) for a in (ts, xs, ys, ss))
    else:
        rec = (np.array([0.0, t]), np.array([x0, x]), np.array([y0, y]), np.array([side0, side]))
    return rec, status, np.array(ct), np.array(cy), np.array(cz), z


def integrate_pws(sys: PwsLienard, state0, t_span=(0.0, 1e4), rk_tol: float = RK_TOL,
                  event_tol: float = EVENT_TOL, n_cross: int = 0, record: bool = True,
                  xwindow: float = X_WINDOW, max_steps: int = MAX_STEPS,
                  side0: int = 0) -> Trajectory:
    """Integrate the PWS field from ``state0`` over ``t_span``.

    Integration runs backward when t_span[1] < t_span[0].  With
    ``n_cross > 0`` it stops at that many crossings of x = 0.  A start on
    x = 0 picks its side from the direction of the flow.  Sliding raises
    FlowError; tangency and escape are reported in ``status``.
    """
    if sys.epsilon < 0:
        raise ValueError("epsilon must be >= 0")
    t0, t1 = float(t_span[0]), float(t_span[1])
    tdir = 1.0 if t1 >= t0 else -1.0
    t_max = abs(t1 - t0)
    x0, y0 = float(state0[0]), float(state0[1])
    rtol, atol = rk_tol, rk_tol * 1e-2
    args = (sys, x0, y0, float(side0), tdir, n_cross, t_max, rtol, atol, event_tol, max_steps,
            record, xwindow)
    if sys.is_polynomial and _jit.USE_NUMBA:
        rec, status, ct, cy, cz, z = _flow_kernel(*args)
    else:
        rec, status, ct, cy, cz, z = _flow_generic(*args)
    if status == kernels.FLOW_SLIDING:
        raise FlowError("sliding motion on the switching line: the crossing assumption fails")
    ts, xs, ys, ss = rec
    return Trajectory(t0 + tdir * ts, xs, ys, ss, STATUS[status], t0 + tdir * ct, cy, cz, z)


@dataclass(frozen=True)
class HalfFlight:
    """From (0, y) on the upper switching line to the next crossing of x = 0."""
    y_start: float
    y_end: float
    time: float
    divergence: float


def half_flight(sys: PwsLienard, y: float, backward: bool = False, rk_tol: float = RK_TOL,
                event_tol: float = EVENT_TOL, t_max: float | None = None,
                xwindow: float = X_WINDOW) -> HalfFlight:
    """First crossing after leaving (0, y), forward (via x > 0) or backward (via x < 0)."""
    if not y > 0:
        raise ValueError("half flights start on the upper switching line, y > 0")
    tm = _default_tmax(sys) if t_max is None else t_max
    span = (0.0, -tm) if backward else (0.0, tm)
    tr = integrate_pws(sys, (0.0, y), span, rk_tol, event_tol, n_cross=1, record=False,
                       xwindow=xwindow)
    if tr.crossing_y.size < 1 or tr.status not in ("ok", "tangency"):
        raise NoReturn(f"no crossing after leaving (0, {y!r}): {tr.status}")
    return HalfFlight(y, float(tr.crossing_y[0]), abs(float(tr.crossing_t[0])),
                      float(tr.crossing_div[0]))


def _default_tmax(sys: PwsLienard) -> float:
    e2 = max(sys.epsilon ** 2, 1e-6)
    return 200.0 / e2


@dataclass(frozen=True)
class ReturnValue:
    y_up: float
    y_return: float
    y_down: float
    period: float
    log_multiplier: float  # integral of the divergence over the flight


def first_return(sys: PwsLienard, y_up: float, rk_tol: float = RK_TOL,
                 event_tol: float = EVENT_TOL, t_max: float | None = None,
                 xwindow: float = X_WINDOW) -> ReturnValue:
    if not y_up > 0:
        raise ValueError("return map starts on the upper switching line, y_up > 0")
    tm = _default_tmax(sys) if t_max is None else t_max
    tr = integrate_pws(sys, (0.0, y_up), (0.0, tm), rk_tol, event_tol, n_cross=2, record=False,
                       xwindow=xwindow)
    if tr.crossing_y.size < 2 or tr.status != "ok":
        raise NoReturn(f"no return from (0, {y_up!r}): {tr.status}")
    y_ret = float(tr.crossing_y[1])
    if not y_ret > 0:
        raise NoReturn("second crossing is not on the upper switching line")
    return ReturnValue(y_up, y_ret, float(tr.crossing_y[0]), float(tr.crossing_t[1]),
                       float(tr.crossing_div[1]))


def return_map(sys: PwsLienard, y_up: float, rk_tol: float = RK_TOL,
               event_tol: float = EVENT_TOL, t_max: float | None = None,
               xwindow: float = X_WINDOW) -> float:
    """First return ordinate on {x = 0, y > 0} after two crossings."""
    return first_return(sys, y_up, rk_tol, event_tol, t_max, xwindow).y_return


def difference_map(sys: PwsLienard, y_up: float, rk_tol: float = RK_TOL,
                   event_tol: float = EVENT_TOL, t_max: float | None = None,
                   xwindow: float = X_WINDOW) -> tuple:
    """D(y) = y_fwd - y_bwd on the lower switching line, with both half flights.

    The forward flight runs along the attracting branch and the backward
    one along the repelling branch (attracting in reversed time), so D is
    well conditioned where the return map itself is not.  D(y) = 0 iff
    the orbit through (0, y) is periodic.
    """
    fw = half_flight(sys, y_up, False, rk_tol, event_tol, t_max, xwindow)
    bw = half_flight(sys, y_up, True, rk_tol, event_tol, t_max, xwindow)
    return fw.y_end - bw.y_end, fw, bw


ATTRACTING = "attracting"
REPELLING = "repelling"
NEUTRAL = "neutral"


def _stability(log_mult: float, tol: float = 1e-9) -> str:
    if abs(log_mult) <= tol:
        return NEUTRAL
    return ATTRACTING if log_mult < 0 else REPELLING


@dataclass(frozen=True)
class CrossingCycle:
    y_up: float
    y_down: float
    period: float
    stability: str
    log_multiplier: float
    residual: float
    params: dict = field(default_factory=dict)

    @property
    def sigma_points(self) -> tuple:
        return (self.y_up, self.y_down)

    def to_dict(self) -> dict:
        return {"sigma_points": [self.y_up, self.y_down], "period": self.period,
                "stability": self.stability, "log_multiplier": self.log_multiplier,
                "residual": self.residual, "params": dict(self.params)}


def _params(sys: PwsLienard, extra: dict | None) -> dict:
    p = {"epsilon": sys.epsilon, "alpha_minus": sys.alpha_minus, "alpha_plus": sys.alpha_plus}
    if extra:
        p.update(extra)
    return p


def _scan_roots(fn, ys, vals, tol):
    """Root brackets from sign changes, plus pairs hidden inside one grid cell.

    At an interior extremum of fn toward zero, fn is minimised (in the
    direction of its sign) over the two adjacent cells: crossing zero gives
    two brackets, a minimum within ``tol`` of zero a touching (double) root.
    """
    out = []
    for i in range(ys.size - 1):
        a, b = vals[i], vals[i + 1]
        if not (math.isfinite(a) and math.isfinite(b)):
            continue
        if a == 0.0:
            out.append(("exact", ys[i]))
        elif a * b < 0:
            out.append(("bracket", (ys[i], ys[i + 1])))
    if math.isfinite(vals[-1]) and vals[-1] == 0.0:
        out.append(("exact", ys[-1]))
    av = np.abs(vals)
    for i in range(1, ys.size - 1):
        trio = vals[i - 1:i + 2]
        if not np.all(np.isfinite(trio)) or not (np.all(trio > 0) or np.all(trio < 0)):
            continue
        if not (av[i] < av[i - 1] and av[i] < av[i + 1]):
            continue
        s = 1.0 if vals[i] > 0 else -1.0
        res = minimize_scalar(lambda v: s * fn(v), bounds=(ys[i - 1], ys[i + 1]),
                              method="bounded", options={"xatol": tol})
        ym, fm = float(res.x), s * float(res.fun)
        if not math.isfinite(fm):
            continue
        if fm * s < 0:
            out.append(("bracket", (ys[i - 1], ym)))
            out.append(("bracket", (ym, ys[i + 1])))
        elif abs(fm) <= tol:
            out.append(("touch", ym))
    return out


def _guarded(fn):
    def inner(v):
        try:
            return fn(v)
        except NoReturn:
            return math.nan
    return inner


def cycle_search(sys: PwsLienard, y_bracket, rk_tol: float = RK_TOL, cycle_tol: float = 1e-9,
                 n_grid: int = 41, method: str = "difference", event_tol: float = EVENT_TOL,
                 t_max: float | None = None, xwindow: float = X_WINDOW,
                 extra_params: dict | None = None, noise_factor: float = 100.0) -> list:
    """Crossing limit cycles whose upper crossing lies in ``y_bracket``.

    ``method="return"`` scans P(y) - y; ``method="difference"`` scans the
    two-sided map D(y), whose zeros are the same cycles but which stays
    well conditioned along canard (repelling) segments.  Roots are refined
    by Brent's method to ``cycle_tol``; a touching zero (double cycle) is
    reported once, as neutral.  Stability uses the multiplier
    P'(y*) = exp(integral of the divergence over one period).  Raises
    UnresolvedCycles when zeros are found but the map's variation over the
    bracket is below ``noise_factor * rk_tol`` times the ordinate scale.
    """
    lo, hi = float(y_bracket[0]), float(y_bracket[1])
    if not 0 < lo < hi:
        raise ValueError("bracket must satisfy 0 < lo < hi")
    opts = (rk_tol, event_tol, t_max, xwindow)
    scale = []  # magnitudes of the compared ordinates, for the noise floor
    if method == "return":
        def raw(v):
            r = return_map(sys, v, *opts)
            scale.append(abs(r))
            return r - v
    elif method == "difference":
        def raw(v):
            d, fw, _ = difference_map(sys, v, *opts)
            scale.append(abs(fw.y_end))
            return d
    else:
        raise ValueError(f"unknown method {method!r}")
    fn = _guarded(raw)

    ys = np.linspace(lo, hi, n_grid)
    vals = np.array([fn(v) for v in ys])
    roots = _scan_roots(fn, ys, vals, cycle_tol)
    finite = vals[np.isfinite(vals)]
    if roots and finite.size:
        floor = noise_factor * rk_tol * max(scale)
        if finite.max() - finite.min() < floor:
            raise UnresolvedCycles(
                f"scanned map varies by {finite.max() - finite.min():.3g} over the bracket, "
                f"below the integration noise floor {floor:.3g}")
    cycles = []
    for kind, where in roots:
        if kind == "bracket":
            a, b = where
            ystar = brentq(fn, a, b, xtol=cycle_tol, rtol=4 * np.finfo(float).eps)
        else:
            ystar = float(where)
        cycles.append(_make_cycle(sys, ystar, fn, kind, method, opts, extra_params))
    cycles.sort(key=lambda c: c.y_up)
    return cycles


def _make_cycle(sys, ystar, fn, kind, method, opts, extra):
    if method == "return":
        rv = first_return(sys, ystar, *opts)
        log_mult, y_down, period = rv.log_multiplier, rv.y_down, rv.period
    else:
        _, fw, bw = difference_map(sys, ystar, *opts)
        # backward flight accumulated minus its divergence
        log_mult, y_down, period = fw.divergence - bw.divergence, fw.y_end, fw.time + bw.time
    stability = NEUTRAL if kind == "touch" else _stability(log_mult)
    for yy in (ystar, y_down):
        if classify_sigma(sys, yy) != SigmaRegion.CROSSING:
            raise FlowError(f"cycle point y = {yy!r} is not a crossing point")
    return CrossingCycle(float(ystar), float(y_down), float(period), stability, float(log_mult),
                         float(abs(fn(ystar))), _params(sys, extra))


def return_map_derivative(sys: PwsLienard, y: float, h: float = 1e-6, **kw) -> float:
    """Two-sided finite difference of the return map."""
    return (return_map(sys, y + h, **kw) - return_map(sys, y - h, **kw)) / (2.0 * h)


UNRESOLVED = -1


@dataclass(frozen=True)
class AlphaSweep:
    alphas: np.ndarray
    counts: np.ndarray
    cycles: list
    y_bracket: tuple = (math.nan, math.nan)

    def transitions(self) -> list:
        """Distinct consecutive counts along the sweep, e.g. [2, 1, 0]."""
        seq = []
        for c in self.counts:
            if not seq or seq[-1] != c:
                seq.append(int(c))
        return seq

    @property
    def resolved(self) -> bool:
        return bool(np.all(self.counts != UNRESOLVED))

    def has_saddle_node(self) -> bool:
        seq = self.transitions()
        return any(seq[i:i + 3] in ([2, 1, 0], [0, 1, 2]) for i in range(len(seq) - 2))

    def fold(self) -> tuple | None:
        """(alpha, y) of the first touching cycle in the sweep."""
        for a, cs in zip(self.alphas, self.cycles):
            for c in cs:
                if c.stability == NEUTRAL:
                    return float(a), c.y_up
        return None

    def to_dict(self) -> dict:
        return {"y_bracket": list(self.y_bracket),
                "alphas": [float(a) for a in self.alphas],
                "counts": [int(c) for c in self.counts],
                "transitions": self.transitions(), "resolved": self.resolved,
                "saddle_node": self.has_saddle_node(),
                "cycles": [[c.to_dict() for c in cs] for cs in self.cycles]}

    def to_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2)


def alpha_sweep(sys: PwsLienard, alphas, y_bracket, rk_tol: float = RK_TOL,
                cycle_tol: float = 1e-9, n_grid: int = 41, method: str = "difference",
                xwindow: float = X_WINDOW, refine: int = 60) -> AlphaSweep:
    """Cycle count along alpha- = alpha+ = alpha (saddle-node detection by count change).

    Where the count drops by two between neighbouring alphas, the gap is
    bisected (up to ``refine`` times) until the touching cycle at the fold
    is found, and that alpha is inserted into the sweep.
    """
    def search(a):
        s = sys.with_params(alpha_minus=float(a), alpha_plus=float(a))
        try:
            return cycle_search(s, y_bracket, rk_tol, cycle_tol, n_grid, method, xwindow=xwindow)
        except UnresolvedCycles:
            return None

    alphas = [float(a) for a in np.asarray(alphas, dtype=float)]
    found = [search(a) for a in alphas]
    out_a, out_c = [alphas[0]], [found[0]]
    for a0, a1, c0, c1 in zip(alphas, alphas[1:], found, found[1:]):
        if c0 is not None and c1 is not None and abs(len(c0) - len(c1)) == 2 and refine > 0:
            lo, hi, clo = a0, a1, len(c0)
            for _ in range(refine):
                mid = 0.5 * (lo + hi)
                cm = search(mid)
                if cm is None:
                    break
                if len(cm) == clo:
                    lo = mid
                elif abs(len(cm) - clo) == 2:
                    hi = mid
                else:
                    out_a.append(mid)
                    out_c.append(cm)
                    break
        out_a.append(a1)
        out_c.append(c1)
    counts = np.array([UNRESOLVED if c is None else len(c) for c in out_c])
    return AlphaSweep(np.array(out_a), counts, [c or [] for c in out_c],
                      (float(y_bracket[0]), float(y_bracket[1])))


def canard_alpha(sys: PwsLienard, y_up: float, alpha_range=(-0.5, 0.5), n_scan: int = 41,
                 rk_tol: float = RK_TOL, xwindow: float = X_WINDOW) -> float:
    """The alpha (alpha- = alpha+) for which the orbit through (0, y_up) closes."""
    def d(a):
        s = sys.with_params(alpha_minus=float(a), alpha_plus=float(a))
        return difference_map(s, y_up, rk_tol, xwindow=xwindow)[0]
    fn = _guarded(d)
    grid = np.linspace(alpha_range[0], alpha_range[1], n_scan)
    vals = np.array([fn(a) for a in grid])
    for i in range(n_scan - 1):
        if math.isfinite(vals[i]) and math.isfinite(vals[i + 1]) and vals[i] * vals[i + 1] <= 0:
            if vals[i] == 0.0:
                return float(grid[i])
            return float(brentq(fn, grid[i], grid[i + 1], xtol=1e-16, rtol=4 * np.finfo(float).eps))
    raise FlowError(f"no closing alpha in {tuple(alpha_range)} for y = {y_up!r}")


def alpha_window(sys: PwsLienard, y_bracket, n_y: int = 11, margin: float = 0.25,
                 **kw) -> tuple:
    """Alpha range covering the extremum of alpha_c(y) over ``y_bracket``.

    Returns (lo, hi, ys, alpha_c): the window runs from the larger of the
    endpoint values to the interior extremum, widened by ``margin`` of its
    width on both sides.
    """
    ys = np.linspace(y_bracket[0], y_bracket[1], n_y)
    ac = np.array([canard_alpha(sys, y, **kw) for y in ys])
    k = int(np.argmax(np.abs(ac - 0.5 * (ac[0] + ac[-1]))))
    edge = max(ac[0], ac[-1]) if ac[k] >= max(ac[0], ac[-1]) else min(ac[0], ac[-1])
    lo, hi = sorted((edge, ac[k]))
    w = max(hi - lo, 1e-15 * max(1.0, abs(hi)))
    return lo - margin * w, hi + margin * w, ys, ac


def cycles_to_json(cycles, path) -> None:
    with open(path, "w") as fh:
        json.dump([c.to_dict() for c in cycles], fh, indent=2)
