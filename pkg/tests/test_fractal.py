import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from canard_fractal import _jit
from canard_fractal.errors import EstimatorError, UnsupportedCase
from canard_fractal.fractal import (BOX, GAP, box_dimension, default_ladder, gap_dimension,
                                    multiplicity_from_dimension, neighborhood_length,
                                    nondegeneracy_bounds, predict_dimension, unbounded_embed)
from canard_fractal.relation import BOUNDED, HOPF, UNBOUNDED, Orbit


def brute_force_length(points, delta):
    """Union length of [p - delta, p + delta] by merging sorted intervals."""
    total, end = 0.0, -math.inf
    for p in sorted(points):
        lo, hi = p - delta, p + delta
        if lo > end:
            total += hi - lo
        else:
            total += max(0.0, hi - end)
        end = max(end, hi)
    return total


@settings(max_examples=40, deadline=None)
@given(pts=st.lists(st.floats(-5, 5), min_size=1, max_size=60),
       delta=st.floats(1e-4, 2.0))
def test_neighborhood_length_matches_merge(pts, delta):
    ref = brute_force_length(pts, delta)
    for flag in (True, False):
        with _jit.use_numba(flag):
            assert neighborhood_length(pts, delta)[0] == pytest.approx(ref, rel=1e-12, abs=1e-12)


@pytest.mark.parametrize("a", [1, 2])
def test_box_dimension_power_sequence(a):
    pts = np.arange(1, 20001, dtype=float) ** -a
    est = box_dimension(pts)
    assert est.method == BOX
    assert abs(est.value - 1.0 / (1 + a)) < 0.05
    assert est.ci_halfwidth < 0.05


def test_box_estimator_rejects_short_data():
    with pytest.raises(EstimatorError):
        box_dimension(np.arange(1, 20, dtype=float) ** -1)
    with pytest.raises(EstimatorError):
        box_dimension(np.arange(1, 200, dtype=float) ** -1, delta_ladder=[1e-3, 1e-2, 1e-1])


def test_default_ladder_range():
    pts = np.arange(1, 1001, dtype=float) ** -1.0
    lad = default_ladder(pts, 20)
    gaps = np.sort(np.diff(np.sort(pts)))
    assert lad[0] == pytest.approx(gaps[4]) and lad[-1] == pytest.approx(0.1 * gaps[-1])


def _orbit(values, regime=HOPF, limit=0.0, n=None):
    return Orbit(np.asarray(values, float), regime, "forward_H", "max_iter", limit, n)


@pytest.mark.parametrize("a", [0.5, 1.0, 2.0])
def test_gap_dimension_power_law(a):
    l = np.arange(1, 50001, dtype=float)
    est = gap_dimension(_orbit(l ** -a))
    assert est.method == GAP
    assert est.value == pytest.approx(1.0 / (1 + a), abs=2e-3)


def test_gap_dimension_geometric_is_zero():
    est = gap_dimension(_orbit(0.5 ** np.arange(40)))
    assert est.value == 0.0 and est.exponent == pytest.approx(1.0, abs=1e-9)


def test_gap_dimension_bounded_limit():
    l = np.arange(1, 20001, dtype=float)
    est = gap_dimension(_orbit(0.4 + l ** -1.0, BOUNDED, 0.4))
    assert est.value == pytest.approx(0.5, abs=2e-3)


def test_gap_dimension_rejects_non_monotone():
    with pytest.raises(EstimatorError):
        gap_dimension(_orbit([1, 0.5, 0.7, 0.2, 0.1, 0.05, 0.02, 0.01, 0.005]))
    with pytest.raises(EstimatorError):
        gap_dimension(_orbit([1, 0.5, 0.2]))


def test_unbounded_embedding():
    assert np.allclose(unbounded_embed([1.0, 16.0], 3), [1.0, 0.5])
    with pytest.raises(ValueError):
        unbounded_embed([0.0], 3)


@pytest.mark.parametrize("regime,kw,expected", [
    (HOPF, dict(m=1), 0.0), (HOPF, dict(m=3), 0.5), (HOPF, dict(m=5), 2 / 3),
    (BOUNDED, dict(m=1), 0.0), (BOUNDED, dict(m=2), 0.5),
    (UNBOUNDED, dict(n=4, k0=2), 0.75), (UNBOUNDED, dict(n=3, k0=2, a1_mismatch=True), 0.0),
    (UNBOUNDED, dict(n=5, k0=3), 0.75),
])
def test_predictions(regime, kw, expected):
    assert predict_dimension(regime, **kw) == pytest.approx(expected)


def test_prediction_unsupported_case():
    with pytest.raises(UnsupportedCase):
        predict_dimension(UNBOUNDED, n=3, k0=2)
    with pytest.raises(ValueError):
        predict_dimension(HOPF, m=0)


@settings(max_examples=30)
@given(m=st.integers(1, 40))
def test_multiplicity_roundtrip(m):
    for regime in (HOPF, BOUNDED):
        d = predict_dimension(regime, m=m)
        assert multiplicity_from_dimension(regime, d) == pytest.approx(m)


def test_nondegeneracy_hint():
    pts = np.arange(1, 20001, dtype=float) ** -1.0
    lo, hi, hint = nondegeneracy_bounds(pts, 0.5)
    assert 0 < lo <= hi and hint == "yes"
    # log-corrected sequence: the content drifts and the hint cannot stay "yes" for d = 0.5
    q = np.arange(2, 20001, dtype=float)
    lo, hi, hint = nondegeneracy_bounds(1.0 / (q * np.log(q) ** 4), 0.5)
    assert hint == "no"


def test_ladder_csv(tmp_path):
    est = box_dimension(np.arange(1, 5001, dtype=float) ** -1.0)
    est.ladder_csv(tmp_path / "ladder.csv")
    rows = (tmp_path / "ladder.csv").read_text().splitlines()
    assert rows[0] == "delta,neighborhood_length,ratio" and len(rows) == est.scales_used + 1
    d = est.to_dict()
    assert d["method"] == BOX and len(d["content_bounds"]) == 2
