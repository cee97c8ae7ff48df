"""Hot numeric loops for polynomial systems.

Every function here is written with scalar loops so numba can compile it.
They are only used when ``_jit.USE_NUMBA`` is true; otherwise callers take
the vectorised numpy path in :mod:`canard_fractal.quadrature` and friends.
"""

from __future__ import annotations

import math

import numpy as np

from ._jit import njit

# Gauss-Kronrod 7/15 abscissae and weights (QUADPACK qk15).
XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])

# orbit termination codes
LIMIT_REACHED = 0
MAX_ITER = 1
STALLED = 2
OUT_OF_DOMAIN = 3
NUMERIC_FAILURE = 4

_STACK = 400


@njit
def polyval(c, x):
    acc = 0.0
    for i in range(c.shape[0] - 1, -1, -1):
        acc = acc * x + c[i]
    return acc


@njit
def _gk15_panel(num, den, a, b):
    c = 0.5 * (a + b)
    h = 0.5 * (b - a)
    fc = polyval(num, c) / polyval(den, c)
    resk = fc * WGK[7]
    resg = fc * WG[3]
    for j in range(7):
        dx = h * XGK[j]
        f1 = polyval(num, c - dx) / polyval(den, c - dx)
        f2 = polyval(num, c + dx) / polyval(den, c + dx)
        resk += WGK[j] * (f1 + f2)
        if j % 2 == 1:
            resg += WG[j // 2] * (f1 + f2)
    return resk * h, abs((resk - resg) * h)


@njit
def gk15_ratio(num, den, a, b, rtol, atol):
    """Adaptive GK15 integral of num(x)/den(x) over [a, b].

    Returns (value, error_estimate, ok).  ``ok`` is False when the panel
    budget is exhausted or the integrand is not finite.
    """
    if a == b:
        return 0.0, 0.0, True
    total, err0 = _gk15_panel(num, den, a, b)
    if not math.isfinite(total):
        return math.nan, math.inf, False
    tol = max(atol, rtol * abs(total))
    if err0 <= tol:
        return total, err0, True
    width = b - a
    lo = np.empty(_STACK)
    hi = np.empty(_STACK)
    lo[0] = a
    hi[0] = b
    top = 1
    value = 0.0
    err = 0.0
    ok = True
    panels = 0
    while top > 0:
        top -= 1
        pa = lo[top]
        pb = hi[top]
        mid = 0.5 * (pa + pb)
        v1, e1 = _gk15_panel(num, den, pa, mid)
        v2, e2 = _gk15_panel(num, den, mid, pb)
        panels += 1
        if not (math.isfinite(v1) and math.isfinite(v2)):
            return math.nan, math.inf, False
        local = tol * (pb - pa) / width
        if e1 + e2 <= local or top + 2 > _STACK or panels > 5000 or mid == pa or mid == pb:
            if e1 + e2 > local:
                ok = False
            value += v1 + v2
            err += e1 + e2
        else:
            lo[top] = mid
            hi[top] = pb
            lo[top + 1] = pa
            hi[top + 1] = mid
            top += 2
    return value, err, ok


@njit
def monotone_root(c, dc, target, lo, hi, tol):
    """Root of polyval(c, x) = target on a sign-changing bracket [lo, hi].

    Newton steps are kept inside the bracket; bisection takes over whenever
    a step would leave it.
    """
    flo = polyval(c, lo) - target
    fhi = polyval(c, hi) - target
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if flo * fhi > 0.0:
        return math.nan
    x = 0.5 * (lo + hi)
    for _ in range(200):
        fx = polyval(c, x) - target
        if fx == 0.0:
            return x
        if (fx < 0.0) == (flo < 0.0):
            lo = x
            flo = fx
        else:
            hi = x
        d = polyval(dc, x)
        xn = x - fx / d if d != 0.0 else 0.5 * (lo + hi)
        if not (min(lo, hi) < xn < max(lo, hi)):
            xn = 0.5 * (lo + hi)
        if abs(xn - x) <= tol * max(1.0, abs(x)) or abs(hi - lo) <= tol * max(1.0, abs(x)):
            return xn
        x = xn
    return x


@njit
def side_root(c, dc, y, sign, guess, xbound, tol):
    """x of the given sign with F(x) = y, F monotone on that half-line.

    The bracket grows geometrically from ``guess`` up to ``xbound``; NaN
    signals that no bracket exists inside the bound.
    """
    g = abs(guess)
    if not g > 0.0:
        g = 1.0
    inner = 0.0
    outer = g
    for _ in range(400):
        if polyval(c, sign * outer) >= y:
            break
        inner = outer
        outer *= 2.0
        if outer > xbound:
            outer = xbound
            if polyval(c, sign * outer) < y:
                return math.nan
            break
    return monotone_root(c, dc, y, sign * inner, sign * outer, tol)


@njit
def side_sdi(num, den, x, rtol):
    """-integral_x^0 num/den, the one-sided slow divergence integral."""
    v, e, ok = gk15_ratio(num, den, x, 0.0, rtol, 0.0)
    if not ok:
        return math.nan
    return -v


@njit
def solve_side_sdi(num, den, sign, target, guess, xbound, rtol):
    """x of the given sign where the one-sided integral reaches ``target``.

    The integral is monotone in |x| (derivative num/den), so a bracketed
    Newton iteration on x converges quadratically.
    """
    g = abs(guess)
    if not g > 0.0:
        g = 1.0
    inner = 0.0
    outer = g
    # integral at |x| -> more negative as |x| grows
    for _ in range(400):
        v = side_sdi(num, den, sign * outer, rtol)
        if not math.isfinite(v):
            return math.nan
        if v <= target:
            break
        inner = outer
        outer *= 2.0
        if outer > xbound:
            outer = xbound
            if side_sdi(num, den, sign * outer, rtol) > target:
                return math.nan
            break
    lo = inner
    hi = outer
    x = g if lo < g < hi else 0.5 * (lo + hi)
    for _ in range(100):
        v = side_sdi(num, den, sign * x, rtol)
        if not math.isfinite(v):
            return math.nan
        r = v - target
        if r == 0.0:
            return sign * x
        if r > 0.0:
            lo = x
        else:
            hi = x
        d = sign * polyval(num, sign * x) / polyval(den, sign * x)
        xn = x - r / d if d != 0.0 else 0.5 * (lo + hi)
        if not (lo < xn < hi):
            xn = 0.5 * (lo + hi)
        if abs(xn - x) <= 4e-16 * x or hi - lo <= 4e-16 * hi:
            return sign * xn
        x = xn
    return sign * x


@njit
def orbit_poly(fm, dfm, fp, dfp, hm, gm, hp, gp, y0, forward, limit, stop_tol,
               to_infinity, max_iter, rtol, xbound_m, xbound_p):
    """Iterate the slow relation function (or its inverse) from y0.

    forward: I-(y[l+1]) = I+(y[l]); otherwise I-(y[l]) = I+(y[l+1]).
    Stops when |y - limit| < stop_tol (or y > stop_tol when heading to
    infinity).  Returns (values, count, termination_code).
    """
    out = np.empty(max_iter + 1)
    out[0] = y0
    y = y0
    if forward:
        src_c, src_dc, src_h, src_g, src_sign, src_bound = fp, dfp, hp, gp, 1.0, xbound_p
        tgt_c, tgt_h, tgt_g, tgt_sign, tgt_bound = fm, hm, gm, -1.0, xbound_m
        tgt_dc = dfm
    else:
        src_c, src_dc, src_h, src_g, src_sign, src_bound = fm, dfm, hm, gm, -1.0, xbound_m
        tgt_c, tgt_h, tgt_g, tgt_sign, tgt_bound = fp, hp, gp, 1.0, xbound_p
        tgt_dc = dfp
    xs = side_root(src_c, src_dc, y, src_sign, math.sqrt(y), src_bound, 1e-15)
    xt = side_root(tgt_c, tgt_dc, y, tgt_sign, math.sqrt(y), tgt_bound, 1e-15)
    if not (math.isfinite(xs) and math.isfinite(xt)):
        return out, 1, OUT_OF_DOMAIN
    direction = 0.0
    for k in range(max_iter):
        if to_infinity:
            if y >= stop_tol:
                return out, k + 1, LIMIT_REACHED
        elif abs(y - limit) < stop_tol:
            return out, k + 1, LIMIT_REACHED
        target = side_sdi(src_h, src_g, xs, rtol)
        if not math.isfinite(target):
            return out, k + 1, NUMERIC_FAILURE
        xt = solve_side_sdi(tgt_h, tgt_g, tgt_sign, target, xt, tgt_bound, rtol)
        if not math.isfinite(xt):
            return out, k + 1, OUT_OF_DOMAIN
        ynew = polyval(tgt_c, xt)
        step = ynew - y
        if step == 0.0 or (direction != 0.0 and step * direction < 0.0):
            return out, k + 1, STALLED
        direction = 1.0 if step > 0.0 else -1.0
        y = ynew
        out[k + 1] = y
        xs = side_root(src_c, src_dc, y, src_sign, xs, src_bound, 1e-15)
        if not math.isfinite(xs):
            return out, k + 2, OUT_OF_DOMAIN
    if to_infinity:
        if y >= stop_tol:
            return out, max_iter + 1, LIMIT_REACHED
    elif abs(y - limit) < stop_tol:
        return out, max_iter + 1, LIMIT_REACHED
    return out, max_iter + 1, MAX_ITER


@njit
def neighborhood_lengths(points, deltas):
    """Exact |U_delta| for a finite set of reals, one value per delta.

    ``points`` must be sorted ascending.  Gaps below 2 delta count in
    full, the others contribute 2 delta each.
    """
    n = points.shape[0]
    gaps = np.sort(points[1:] - points[:-1])
    csum = np.empty(n)
    csum[0] = 0.0
    for i in range(n - 1):
        csum[i + 1] = csum[i] + gaps[i]
    out = np.empty(deltas.shape[0])
    for j in range(deltas.shape[0]):
        w = 2.0 * deltas[j]
        k = np.searchsorted(gaps, w)
        out[j] = w + csum[k] + w * (n - 1 - k)
    return out


# Dormand-Prince 5(4) tableau
_C2, _C3, _C4, _C5 = 1.0 / 5, 3.0 / 10, 4.0 / 5, 8.0 / 9
_A21 = 1.0 / 5
_A31, _A32 = 3.0 / 40, 9.0 / 40
_A41, _A42, _A43 = 44.0 / 45, -56.0 / 15, 32.0 / 9
_A51, _A52, _A53, _A54 = 19372.0 / 6561, -25360.0 / 2187, 64448.0 / 6561, -212.0 / 729
_A61, _A62, _A63, _A64, _A65 = 9017.0 / 3168, -355.0 / 33, 46732.0 / 5247, 49.0 / 176, -5103.0 / 18656
_B1, _B3, _B4, _B5, _B6 = 35.0 / 384, 500.0 / 1113, 125.0 / 192, -2187.0 / 6784, 11.0 / 84
_E1, _E3, _E4, _E5, _E6, _E7 = (71.0 / 57600, -71.0 / 16695, 71.0 / 1920,
                               -17253.0 / 339200, 22.0 / 525, -1.0 / 40)

# flow status codes
FLOW_OK = 0
FLOW_TIME_LIMIT = 1
FLOW_TANGENCY = 2
FLOW_SLIDING = 3
FLOW_STEP_FAILURE = 4
FLOW_ESCAPE = 5


@njit
def _rhs(F, dF, G, eps, alpha, tdir, x, y):
    # third component accumulates the divergence -F'(x) of the field
    e2 = eps * eps
    return (tdir * (y - polyval(F, x)), tdir * e2 * (eps * alpha + polyval(G, x)),
            -tdir * polyval(dF, x))


@njit
def _dopri_step(F, dF, G, eps, alpha, tdir, x, y, z, h):
    k1x, k1y, k1z = _rhs(F, dF, G, eps, alpha, tdir, x, y)
    k2x, k2y, k2z = _rhs(F, dF, G, eps, alpha, tdir, x + h * _A21 * k1x, y + h * _A21 * k1y)
    k3x, k3y, k3z = _rhs(F, dF, G, eps, alpha, tdir, x + h * (_A31 * k1x + _A32 * k2x),
                         y + h * (_A31 * k1y + _A32 * k2y))
    k4x, k4y, k4z = _rhs(F, dF, G, eps, alpha, tdir,
                         x + h * (_A41 * k1x + _A42 * k2x + _A43 * k3x),
                         y + h * (_A41 * k1y + _A42 * k2y + _A43 * k3y))
    k5x, k5y, k5z = _rhs(F, dF, G, eps, alpha, tdir,
                         x + h * (_A51 * k1x + _A52 * k2x + _A53 * k3x + _A54 * k4x),
                         y + h * (_A51 * k1y + _A52 * k2y + _A53 * k3y + _A54 * k4y))
    k6x, k6y, k6z = _rhs(F, dF, G, eps, alpha, tdir,
                         x + h * (_A61 * k1x + _A62 * k2x + _A63 * k3x + _A64 * k4x + _A65 * k5x),
                         y + h * (_A61 * k1y + _A62 * k2y + _A63 * k3y + _A64 * k4y + _A65 * k5y))
    xn = x + h * (_B1 * k1x + _B3 * k3x + _B4 * k4x + _B5 * k5x + _B6 * k6x)
    yn = y + h * (_B1 * k1y + _B3 * k3y + _B4 * k4y + _B5 * k5y + _B6 * k6y)
    zn = z + h * (_B1 * k1z + _B3 * k3z + _B4 * k4z + _B5 * k5z + _B6 * k6z)
    k7x, k7y, _ = _rhs(F, dF, G, eps, alpha, tdir, xn, yn)
    ex = h * (_E1 * k1x + _E3 * k3x + _E4 * k4x + _E5 * k5x + _E6 * k6x + _E7 * k7x)
    ey = h * (_E1 * k1y + _E3 * k3y + _E4 * k4y + _E5 * k5y + _E6 * k6y + _E7 * k7y)
    return xn, yn, zn, ex, ey


@njit
def _locate_event(F, dF, G, eps, alpha, tdir, x, y, z, h, event_tol):
    """Sub-step s in (0, h] with x(s) = 0, by Illinois false position on re-steps."""
    a = 0.0
    fa = x
    b = h
    xb, yb, zb, _, _ = _dopri_step(F, dF, G, eps, alpha, tdir, x, y, z, h)
    fb = xb
    side = 0
    s = b
    ys = yb
    zs = zb
    for _ in range(200):
        s = (a * fb - b * fa) / (fb - fa)
        if not (min(a, b) < s < max(a, b)):
            s = 0.5 * (a + b)
        xs, ys, zs, _, _ = _dopri_step(F, dF, G, eps, alpha, tdir, x, y, z, s)
        if abs(xs) < event_tol or abs(b - a) < 1e-15 * h:
            return s, ys, zs
        if (xs > 0.0) == (fb > 0.0):
            b = s
            fb = xs
            if side == -1:
                fa *= 0.5
            side = -1
        else:
            a = s
            fa = xs
            if side == 1:
                fb *= 0.5
            side = 1
    return s, ys, zs


@njit
def _pick_side(fm, fp, y, tdir, tangency_tol):
    """Side entered from a point (0, y) of the switching line.

    Returns (side, status): side +1 for x >= 0, -1 for x <= 0.
    """
    vm = tdir * (y - polyval(fm, 0.0))
    vp = tdir * (y - polyval(fp, 0.0))
    if abs(vm) <= tangency_tol or abs(vp) <= tangency_tol:
        return 0.0, FLOW_TANGENCY
    if vm * vp < 0.0:
        return 0.0, FLOW_SLIDING
    return (1.0 if vp > 0.0 else -1.0), FLOW_OK


@njit
def pws_flow(fm, fp, dfm, dfp, gm, gp, eps, alpha_m, alpha_p, x0, y0, side0, tdir,
             n_cross, t_max, rtol, atol, event_tol, max_steps, record, xwindow):
    """Integrate the PWS field until ``n_cross`` switching-line crossings.

    ``side0`` is +1/-1, or 0 to choose it from the flow at (0, y0).  The
    state carries z, the divergence integrated along the run (in the
    direction of integration).  Returns (x, y, z, t, side, status,
    crossings, ts, xs, ys, sides, n_rec, cross_t, cross_y, cross_z);
    recording arrays hold ``n_rec`` entries when ``record`` is true.
    """
    cap = max_steps + 2 if record else 1
    ts = np.empty(cap)
    xs = np.empty(cap)
    ys = np.empty(cap)
    sides = np.empty(cap)
    ccap = max(n_cross, 1) + 1
    cross_t = np.empty(ccap)
    cross_y = np.empty(ccap)
    cross_z = np.empty(ccap)
    tang_tol = 1e3 * event_tol
    x = x0
    y = y0
    z = 0.0
    t = 0.0
    side = side0
    status = FLOW_OK
    if side == 0.0:
        if x0 != 0.0:
            side = 1.0 if x0 > 0.0 else -1.0
        else:
            side, status = _pick_side(fm, fp, y, tdir, tang_tol)
            if status != FLOW_OK:
                return (x, y, z, t, side, status, 0, ts, xs, ys, sides, 0,
                        cross_t, cross_y, cross_z)
    n_rec = 0
    if record:
        ts[0] = t
        xs[0] = x
        ys[0] = y
        sides[0] = side
        n_rec = 1
    crossings = 0
    h = 1e-3
    err = 0.0
    for _ in range(max_steps):
        if crossings >= n_cross and n_cross > 0:
            break
        if t >= t_max:
            status = FLOW_TIME_LIMIT
            break
        if h > t_max - t:
            h = t_max - t
        F = fp if side > 0.0 else fm
        dF = dfp if side > 0.0 else dfm
        G = gp if side > 0.0 else gm
        alpha = alpha_p if side > 0.0 else alpha_m
        xn, yn, zn, ex, ey = _dopri_step(F, dF, G, eps, alpha, tdir, x, y, z, h)
        sx = atol + rtol * max(abs(x), abs(xn))
        sy = atol + rtol * max(abs(y), abs(yn))
        err = max(abs(ex) / sx, abs(ey) / sy)
        if not math.isfinite(err):
            h *= 0.1
            if h < 1e-14:
                status = FLOW_STEP_FAILURE
                break
            continue
        if err > 1.0:
            h *= max(0.2, 0.9 * err ** -0.2)
            if h < 1e-14:
                status = FLOW_STEP_FAILURE
                break
            continue
        if side * xn < 0.0 or (xn == 0.0 and x != 0.0):
            s, ye, ze = _locate_event(F, dF, G, eps, alpha, tdir, x, y, z, h, event_tol)
            t += s
            x = 0.0
            y = ye
            z = ze
            k = min(crossings, ccap - 1)
            cross_t[k] = t
            cross_y[k] = y
            cross_z[k] = z
            crossings += 1
            new_side, st = _pick_side(fm, fp, y, tdir, tang_tol)
            if st != FLOW_OK or new_side == side:
                status = st if st != FLOW_OK else FLOW_TANGENCY
                if record:
                    ts[n_rec] = t
                    xs[n_rec] = x
                    ys[n_rec] = y
                    sides[n_rec] = side
                    n_rec += 1
                break
            side = new_side
        else:
            t += h
            x = xn
            y = yn
            z = zn
        if record:
            ts[n_rec] = t
            xs[n_rec] = x
            ys[n_rec] = y
            sides[n_rec] = side
            n_rec += 1
        if abs(x) > xwindow or abs(y) > xwindow * xwindow:
            status = FLOW_ESCAPE
            break
        fac = 5.0 if err == 0.0 else min(5.0, max(0.2, 0.9 * err ** -0.2))
        h *= fac
    else:
        status = FLOW_STEP_FAILURE
    return (x, y, z, t, side, status, crossings, ts, xs, ys, sides, n_rec,
            cross_t, cross_y, cross_z)
