"""Minkowski dimension of orbits: estimators, nondegeneracy and the predicted values."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

from . import _jit, kernels
from .errors import EstimatorError, UnsupportedCase
from .relation import BOUNDED, HOPF, UNBOUNDED, Orbit

BOX = "box_count"
GAP = "gap_exponent"


@dataclass(frozen=True)
class DimensionEstimate:
    value: float
    method: str
    ci_halfwidth: float
    scales_used: int
    nondegenerate_hint: str = "inconclusive"
    content_bounds: tuple = (math.nan, math.nan)
    exponent: float | None = None
    deltas: np.ndarray | None = None
    lengths: np.ndarray | None = None

    def to_dict(self) -> dict:
        d = {"value": self.value, "method": self.method, "ci_halfwidth": self.ci_halfwidth,
             "scales_used": self.scales_used, "nondegenerate_hint": self.nondegenerate_hint,
             "content_bounds": list(self.content_bounds)}
        if self.exponent is not None:
            d["exponent"] = self.exponent
        return d

    def ladder_csv(self, path) -> None:
        if self.deltas is None:
            raise EstimatorError("this estimate carries no delta ladder")
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["delta", "neighborhood_length", "ratio"])
            d = 1.0 - self.value
            for delta, length in zip(self.deltas, self.lengths):
                w.writerow([repr(float(delta)), repr(float(length)),
                            repr(float(length / delta ** d))])


def neighborhood_length(points, deltas) -> np.ndarray:
    """Exact length of the union of [p - delta, p + delta] over a finite set."""
    p = np.sort(np.asarray(points, dtype=float))
    deltas = np.atleast_1d(np.asarray(deltas, dtype=float))
    if _jit.USE_NUMBA:
        return kernels.neighborhood_lengths(p, deltas)
    gaps = np.sort(np.diff(p))
    csum = np.concatenate([[0.0], np.cumsum(gaps)])
    w = 2.0 * deltas
    k = np.searchsorted(gaps, w)
    return w + csum[k] + w * (gaps.size - k)


def default_ladder(points, n_scales: int = 48) -> np.ndarray:
    """Geometric ladder from the 5th-smallest gap up to a tenth of the largest gap."""
    gaps = np.sort(np.abs(np.diff(np.sort(np.asarray(points, dtype=float)))))
    gaps = gaps[gaps > 0]
    if gaps.size < 5:
        raise EstimatorError("too few distinct points for a delta ladder")
    lo, hi = gaps[4], 0.1 * gaps[-1]
    if not hi > lo:
        raise EstimatorError("delta ladder is empty: gaps span too narrow a range")
    return np.geomspace(lo, hi, n_scales)


def _fit(x, y):
    """Slope, 95% half-width, and half-window discrepancy of a least-squares line."""
    res = stats.linregress(x, y)
    tq = stats.t.ppf(0.975, max(1, x.size - 2))
    half = x.size // 2
    if half >= 3:
        s1 = stats.linregress(x[:half], y[:half]).slope
        s2 = stats.linregress(x[half:], y[half:]).slope
        spread = abs(s1 - s2)
    else:
        spread = 0.0
    return res.slope, tq * res.stderr, spread


def box_dimension(points, delta_ladder=None, min_points: int = 50,
                  min_decades: float = 3.0) -> DimensionEstimate:
    """Box dimension from the scaling |U_delta| ~ delta^(1 - d)."""
    p = np.asarray(points, dtype=float)
    if p.size < min_points:
        raise EstimatorError(f"box counting needs at least {min_points} points, got {p.size}")
    deltas = default_ladder(p) if delta_ladder is None else np.asarray(delta_ladder, dtype=float)
    if deltas.size < 3 or math.log10(deltas.max() / deltas.min()) < min_decades:
        raise EstimatorError(f"delta ladder must span at least {min_decades} decades")
    lengths = neighborhood_length(p, deltas)
    slope, stat, spread = _fit(np.log(deltas), np.log(lengths))
    value = float(np.clip(1.0 - slope, 0.0, 1.0))
    ci = float(max(stat, spread))
    lower, upper, hint = nondegeneracy_bounds(p, value, deltas, lengths=lengths)
    if value - ci <= 0.0 or value + ci >= 1.0:
        hint = "inconclusive"
    return DimensionEstimate(value, BOX, ci, int(deltas.size), hint, (lower, upper),
                             deltas=deltas, lengths=lengths)


def _window(dist: np.ndarray, decades: float, min_terms: int) -> np.ndarray:
    end = dist[-1]
    idx = np.nonzero(dist <= end * 10.0 ** decades)[0]
    if idx.size < min_terms:
        idx = np.arange(max(0, dist.size - min_terms), dist.size)
    return idx


def gap_dimension(orbit: Orbit, decades: float = 2.0, min_terms: int = 100) -> DimensionEstimate:
    """Dimension 1 - 1/nu from the gap law  gap_l ~ dist_l^nu.

    The distance is taken to the orbit's limit (in the chart variable
    r = y^(-1/(n+1)) for orbits going to infinity).  The fit uses the
    last ``decades`` of distance, or the last ``min_terms`` terms when the
    orbit converges too fast to fill them (geometric convergence gives
    nu = 1, hence dimension 0).
    """
    dist = orbit.distance_to_limit()
    if dist.size < 8:
        raise EstimatorError("gap fit needs at least 8 orbit terms")
    steps = np.diff(dist)
    if not (np.all(steps < 0) or np.all(steps > 0)):
        raise EstimatorError("orbit is not strictly monotone")
    gaps = np.abs(steps)
    d = dist[:-1]
    idx = _window(d, decades, min_terms)
    x, y = np.log(d[idx]), np.log(gaps[idx])
    nu, stat, spread = _fit(x, y)
    if nu <= 1.0 + 1e-12:
        value, ci = 0.0, float(max(stat, spread))
    else:
        value = float(np.clip(1.0 - 1.0 / nu, 0.0, 1.0))
        ci = float(max(stat, spread) / nu ** 2)
    return DimensionEstimate(value, GAP, ci, int(idx.size), exponent=float(nu))


def unbounded_embed(values, n: int) -> np.ndarray:
    """r_l = y_l^(-1/(n+1)), the chart coordinate of the orbit at infinity."""
    v = np.asarray(values, dtype=float)
    if n < 1:
        raise ValueError("n must be >= 1")
    if np.any(v <= 0):
        raise ValueError("orbit values must be positive")
    return v ** (-1.0 / (n + 1))


def predict_dimension(regime: str, m: int | None = None, n: int | None = None,
                      k0: int | None = None, a1_mismatch: bool = False,
                      infinite: bool = False) -> float:
    """Closed-form dimension of an orbit.

    hopf: (m - 1)/(m + 1) with m = m0;  bounded: (m - 1)/m;
    unbounded: 0 when a1- != a1+, else (n + 1 - k0)/(n + 2 - k0).
    """
    if infinite:
        return 1.0
    if regime == HOPF:
        if m is None or m < 1:
            raise ValueError("hopf prediction needs m0 >= 1")
        return (m - 1) / (m + 1)
    if regime == BOUNDED:
        if m is None or m < 1:
            raise ValueError("bounded prediction needs m >= 1")
        return (m - 1) / m
    if regime == UNBOUNDED:
        if a1_mismatch:
            return 0.0
        if n is None:
            raise ValueError("unbounded prediction needs n")
        if k0 is None:
            return 0.0
        if k0 == n - 1:
            raise UnsupportedCase("the case k0 = n - 1 has no known dimension formula")
        return (n + 1 - k0) / (n + 2 - k0)
    raise ValueError(f"unknown regime {regime!r}")


def multiplicity_from_dimension(regime: str, d: float) -> float:
    if regime == HOPF:
        return (1.0 + d) / (1.0 - d)
    if regime == BOUNDED:
        return 1.0 / (1.0 - d)
    raise ValueError(f"no inverse formula for regime {regime!r}")


def nondegeneracy_bounds(points, d: float, delta_ladder=None, lengths=None,
                         min_decades: float = 2.0, max_ratio: float = 10.0):
    """(min, max, hint) of |U_delta| / delta^(1-d) over the ladder.

    The hint is a finite-data heuristic: ``yes`` when max/min stays below
    ``max_ratio`` over at least ``min_decades`` decades of delta.
    """
    deltas = default_ladder(points) if delta_ladder is None else np.asarray(delta_ladder, float)
    if lengths is None:
        lengths = neighborhood_length(points, deltas)
    ratio = lengths / deltas ** (1.0 - d)
    lower, upper = float(ratio.min()), float(ratio.max())
    if not 0.0 < d < 1.0 or math.log10(deltas.max() / deltas.min()) < min_decades:
        hint = "inconclusive"
    else:
        hint = "yes" if upper / lower < max_ratio else "no"
    return lower, upper, hint
