"""Command-line front end: load a config, run one analysis, write the report and CSV files."""

from __future__ import annotations

import argparse
import copy
import csv
import json
import math
import sys
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from . import __version__
from .blowup import beta_constants, delta_scan, separatrix_check, BlowupModel
from .errors import AssumptionViolation, CanardFractalError, EstimatorError
from .fractal import (box_dimension, gap_dimension, predict_dimension, unbounded_embed)
from .model import (ClassicalLienard, PwsLienard, lienard_f_coeffs, validate_hopf,
                    validate_interval)
from .relation import (BOUNDED, FORWARD, HOPF, UNBOUNDED, find_balanced, hopf_window,
                       orbit_generate, slow_dynamics_root, slow_vector_field)
from .sdi import (QUAD_TOL, ROOT_TOL, X_BOUND, infinity_chart, invariance_check_inf,
                  sdi_normal_form, sdi_pm, sdi_profile, side_root)
from .series import DEFAULT_ORDER, gbar_series, multiplicity_m0, side_g_series
from . import simulate as sim

EXIT_CONSISTENT = 0
EXIT_INCONSISTENT = 2
EXIT_ASSUMPTION = 3
EXIT_NUMERIC = 4

CONSISTENT = "consistent"
INCONSISTENT = "inconsistent"
INCONCLUSIVE = "inconclusive"

GAP_TOL = 0.02
BOX_TOL = 0.05


class ConfigError(AssumptionViolation):
    """The configuration file is missing, unparsable, or fails the schema."""


# ------------------------------------------------------------------ config

def _schema() -> dict:
    text = resources.files("canard_fractal").joinpath("schema/config.schema.json").read_text()
    return json.loads(text)


def shipped_configs() -> list:
    root = resources.files("canard_fractal").joinpath("configs")
    return sorted(p.name for p in root.iterdir() if p.name.endswith(".json"))


def load_config(path) -> dict:
    """Read a config file; bare names fall back to the shipped examples."""
    p = Path(path)
    if p.is_file():
        text = p.read_text()
    else:
        name = p.name if p.suffix == ".json" else p.name + ".json"
        res = resources.files("canard_fractal").joinpath("configs", name)
        if not res.is_file():
            raise ConfigError(f"config {path!s} not found (shipped: {', '.join(shipped_configs())})")
        text = res.read_text()
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path!s} is not valid JSON: {exc}") from exc
    try:
        jsonschema.validate(cfg, _schema())
    except jsonschema.ValidationError as exc:
        raise ConfigError(f"config {path!s} fails the schema: {exc.message}") from exc
    return cfg


def _poly(entry: dict, delta: float) -> np.ndarray:
    base = np.asarray(entry["poly"], dtype=float)
    extra = entry.get("delta_poly")
    if extra is None or delta == 0.0:
        return base
    extra = np.asarray(extra, dtype=float)
    out = np.zeros(max(base.size, extra.size))
    out[:base.size] += base
    out[:extra.size] += delta * extra
    return out


def build_system(cfg: dict) -> tuple:
    """(PwsLienard, ClassicalLienard or None) from a parsed config."""
    p = {"epsilon": 0.0, "alpha_minus": 0.0, "alpha_plus": 0.0, "delta": 0.0}
    p.update(cfg.get("params", {}))
    kw = dict(epsilon=float(p["epsilon"]), alpha_minus=float(p["alpha_minus"]),
              alpha_plus=float(p["alpha_plus"]), name=cfg["system_id"])
    if "classical" in cfg:
        c = cfg["classical"]
        cl = ClassicalLienard(int(c["n"]), float(c["a1_minus"]), float(c["a1_plus"]),
                              tuple(c["b_minus"]), tuple(c["b_plus"]))
        return cl.to_pws(cfg["system_id"]).with_params(**kw), cl
    d = float(p["delta"])
    s = cfg["side"]
    return PwsLienard.from_poly(_poly(s["minus"]["F"], d), _poly(s["plus"]["F"], d),
                                _poly(s["minus"]["G"], d), _poly(s["plus"]["G"], d), **kw), None


def resolve_config(cfg: dict, quad_tol=None, max_iter=None, seed: int = 0) -> dict:
    """Copy of the config with command-line overrides and defaults filled in."""
    out = copy.deepcopy(cfg)
    params = {"epsilon": 0.0, "alpha_minus": 0.0, "alpha_plus": 0.0, "delta": 0.0}
    params.update(out.get("params", {}))
    out["params"] = params
    a = out.setdefault("analysis", {})
    a.setdefault("quad_tol", QUAD_TOL)
    a.setdefault("root_tol", ROOT_TOL)
    a.setdefault("max_iter", 100_000)
    a.setdefault("gap_tol", GAP_TOL)
    a.setdefault("box_tol", BOX_TOL)
    if quad_tol is not None:
        a["quad_tol"] = float(quad_tol)
    if max_iter is not None:
        a["max_iter"] = int(max_iter)
    out["seed"] = int(seed)
    return out


# ------------------------------------------------------------------ report

@dataclass
class AnalysisReport:
    system_id: str
    command: str
    regime: str | None = None
    assumptions: dict = field(default_factory=dict)
    invariants: dict = field(default_factory=dict)
    predicted_dim: float | None = None
    estimated_dims: dict = field(default_factory=dict)
    residuals: dict = field(default_factory=dict)
    details: dict = field(default_factory=dict)
    verdict: str = INCONCLUSIVE
    exit_code: int = EXIT_CONSISTENT
    error: str | None = None
    config: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"system_id": self.system_id, "command": self.command, "regime": self.regime,
                "assumptions": self.assumptions, "invariants": self.invariants,
                "predicted_dim": self.predicted_dim, "estimated_dims": self.estimated_dims,
                "residuals": self.residuals, "details": self.details, "verdict": self.verdict,
                "exit_code": self.exit_code, "error": self.error, "version": __version__,
                "config": self.config}


def _fmt(x: float) -> str:
    if not math.isfinite(x):
        return "null"
    s = format(x, ".17g")
    if "e" not in s and "." not in s and "n" not in s:
        s += ".0"
    return s


def dumps(obj, indent: int = 2, _level: int = 0) -> str:
    """Deterministic JSON: sorted keys, floats at 17 significant digits."""
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {dumps(v, indent, _level + 1)}"
                 for k, v in sorted(obj.items(), key=lambda kv: str(kv[0]))]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        return "[\n" + ",\n".join(pad + dumps(v, indent, _level + 1) for v in obj) + "\n" + end + "]"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _fmt(float(obj))
    return json.dumps(str(obj))


def _verdict(checks: list) -> str:
    """consistent when every check passes; None entries are undecided."""
    decided = [c for c in checks if c is not None]
    if not decided:
        return INCONCLUSIVE
    return CONSISTENT if all(decided) else INCONSISTENT


def _exit_for(verdict: str) -> int:
    return EXIT_INCONSISTENT if verdict == INCONSISTENT else EXIT_CONSISTENT


# ------------------------------------------------------------- estimators

def _estimate(orbit, points, predicted, a) -> tuple:
    """Gap and box estimates with their comparison against ``predicted``."""
    est, checks, ladder = {}, [], None
    try:
        g = gap_dimension(orbit)
        d = g.to_dict()
        if predicted is not None:
            d["tolerance"] = g.ci_halfwidth + a["gap_tol"]
            d["consistent"] = abs(g.value - predicted) <= d["tolerance"]
            checks.append(d["consistent"])
        est["gap_exponent"] = d
    except EstimatorError as exc:
        est["gap_exponent"] = {"error": str(exc)}
    try:
        b = box_dimension(points)
        d = b.to_dict()
        if predicted is not None:
            d["tolerance"] = b.ci_halfwidth + a["box_tol"]
            d["consistent"] = abs(b.value - predicted) <= d["tolerance"]
            checks.append(d["consistent"])
        est["box_count"] = d
        ladder = b
    except EstimatorError as exc:
        est["box_count"] = {"error": str(exc)}
    return est, checks, ladder


def _independence(e1: dict, e2: dict):
    g1, g2 = e1.get("gap_exponent", {}), e2.get("gap_exponent", {})
    if "value" not in g1 or "value" not in g2:
        return None, {}
    diff = abs(g1["value"] - g2["value"])
    tol = g1["ci_halfwidth"] + g2["ci_halfwidth"] + 1e-12
    return diff <= tol, {"difference": diff, "combined_ci": tol, "ok": diff <= tol}


def _orbit_info(o) -> dict:
    return {"length": len(o), "direction": o.direction, "termination": o.termination,
            "flags": list(o.flags), "first": float(o.values[0]), "last": float(o.values[-1])}


def _require_hopf(psys: PwsLienard) -> dict:
    rep = validate_hopf(psys)
    if not rep.hopf_ok:
        raise AssumptionViolation(f"Hopf conditions fail: {rep.violations}")
    return rep.to_dict()


# ---------------------------------------------------------------- commands

def cmd_hopf(cfg: dict, out: Path | None = None) -> AnalysisReport:
    """Multiplicity of Gbar, an orbit tending to the Hopf point, and its dimension."""
    a = cfg["analysis"]
    psys, _ = build_system(cfg)
    rep = AnalysisReport(cfg["system_id"], "hopf", HOPF, config=cfg)
    rep.assumptions["hopf"] = _require_hopf(psys)
    radius = float(a.get("radius", 1.0))
    xb = tuple(a.get("xbound", (X_BOUND, X_BOUND)))
    lm = side_root(psys, -1, radius, xbound=xb[0])
    lp = side_root(psys, 1, radius, xbound=xb[1])
    interval = validate_interval(psys, (lm, 0.0), (0.0, lp))
    rep.assumptions["interval"] = interval.to_dict()
    if not interval.interval_ok:
        raise AssumptionViolation(f"interval assumption fails on y <= {radius}: "
                                  f"{interval.violations[:3]}")
    order = int(a.get("series_order", DEFAULT_ORDER))
    gbar = gbar_series(psys, order)
    mult = multiplicity_m0(gbar)
    rep.invariants = {"m0": None if mult.infinite else mult.m0, "m0_label": mult.label,
                      "leading_coefficient": mult.leading, "series_order": order,
                      "gbar_coeffs": [float(c) for c in gbar.coeffs]}
    y_star, shrunk = hopf_window(psys, radius, a["quad_tol"])
    rep.details["window"] = {"radius": radius, "y_star": y_star, "shrunk": shrunk}
    starts = [float(a["y0"]), float(a.get("y0_alt", 0.5 * a["y0"]))]
    for y0 in starts:
        if y0 > y_star:
            raise AssumptionViolation(f"start y0={y0} lies outside the window ]0, {y_star}]")
    kw = dict(max_iter=int(a["max_iter"]), quad_tol=a["quad_tol"], root_tol=a["root_tol"],
              xbound=xb)
    orbits = [orbit_generate(psys, y0, HOPF, **kw) for y0 in starts]
    rep.details["orbits"] = [_orbit_info(o) for o in orbits]
    if out is not None:
        orbits[0].to_csv(out / "orbit.csv")
        lo = max(float(orbits[0].values[-1]), 1e-6 * starts[0])
        sdi_profile(psys, np.geomspace(lo, starts[0], 60), a["quad_tol"], HOPF).to_csv(
            out / "sdi.csv")

    if "degenerate_identity" in orbits[0].flags:
        rep.details["degenerate"] = {"slow_relation": "identity", "reason": "I vanishes identically"}
        rep.verdict = INCONCLUSIVE
        return rep
    if mult.infinite:
        rep.details["degenerate"] = {"reason": f"Gbar flat to order {order} but I is not"}
        rep.verdict = INCONCLUSIVE
        return rep

    m0 = mult.m0
    rep.predicted_dim = predict_dimension(HOPF, m=m0)
    expected_dir = FORWARD if (-1) ** (m0 + 1) * mult.leading > 0 else "inverse_H"
    checks = [orbits[0].direction == expected_dir]
    rep.invariants["direction_rule"] = {"expected": expected_dir, "observed": orbits[0].direction}
    ests = []
    ladder = None
    for o in orbits:
        e, c, lad = _estimate(o, o.values, rep.predicted_dim, a)
        ests.append(e)
        checks += c
        ladder = ladder or lad
    rep.estimated_dims = {"start": ests[0], "alt_start": ests[1]}
    ok, info = _independence(*ests)
    rep.details["independence"] = info
    checks.append(ok)
    if m0 == 1:
        v = orbits[0].values
        ratio = float(v[-1] / v[-2])
        g1m = float(side_g_series(psys, -1, order).coeffs[1])
        g1p = float(side_g_series(psys, 1, order).coeffs[1])
        expected = g1m / g1p if orbits[0].direction == FORWARD else g1p / g1m
        rel = abs(ratio - expected) / abs(expected)
        rep.details["ratio"] = {"observed": ratio, "expected": expected, "relative_error": rel}
        checks.append(rel <= 0.01)
    if out is not None and ladder is not None:
        ladder.ladder_csv(out / "ladder.csv")
    rep.verdict = _verdict(checks)
    return rep


def cmd_canard(cfg: dict, out: Path | None = None) -> AnalysisReport:
    """Balanced canard cycles: zeros of I, multiplicity, and orbits tending to them."""
    a = cfg["analysis"]
    psys, _ = build_system(cfg)
    rep = AnalysisReport(cfg["system_id"], "canard", BOUNDED, config=cfg)
    rep.assumptions["hopf"] = _require_hopf(psys)
    y_lo, y_hi = map(float, a["y_bracket"])
    xb = [X_BOUND, X_BOUND]
    if "slow_bracket" in a:
        side = int(a.get("slow_side", 1))
        x0 = slow_dynamics_root(slow_vector_field(psys, side), tuple(a["slow_bracket"]))
        y_lim = float(psys.side(side)[0](x0))
        rep.invariants["slow_dynamics_root"] = {"side": side, "x0": x0, "y_limit": y_lim}
        xb[0 if side < 0 else 1] = abs(x0)
        if y_hi >= y_lim:
            raise AssumptionViolation(f"bracket top {y_hi} reaches the slow-dynamics limit {y_lim}")
    lm = side_root(psys, -1, y_hi, xbound=xb[0])
    lp = side_root(psys, 1, y_hi, xbound=xb[1])
    interval = validate_interval(psys, (lm, 0.0), (0.0, lp))
    rep.assumptions["interval"] = interval.to_dict()
    if not interval.interval_ok:
        raise AssumptionViolation(f"interval assumption fails: {interval.violations[:3]}")
    scan = find_balanced(psys, y_lo, y_hi, a["quad_tol"], a["root_tol"])
    if out is not None:
        sdi_profile(psys, np.linspace(y_lo, y_hi, 120), a["quad_tol"], BOUNDED).to_csv(
            out / "sdi.csv")
    rep.invariants["balanced_zeros"] = [{"y_hat": z.y_hat, "multiplicity": z.multiplicity,
                                         "slope": z.slope} for z in scan.zeros]
    if scan.degenerate or not scan.zeros:
        rep.details["reason"] = "I vanishes identically" if scan.degenerate else "no zero of I"
        rep.verdict = INCONCLUSIVE
        return rep
    z = scan.zeros[0]
    rep.invariants["m_yhat"] = z.multiplicity
    rep.predicted_dim = predict_dimension(BOUNDED, m=z.multiplicity)
    offs = [float(v) for v in a.get("y0_offsets", (0.1, -0.1))]
    kw = dict(max_iter=int(a["max_iter"]), quad_tol=a["quad_tol"], root_tol=a["root_tol"],
              xbound=tuple(xb), y_hat=z.y_hat)
    orbits = [orbit_generate(psys, z.y_hat + d, BOUNDED, **kw) for d in offs]
    rep.details["orbits"] = [_orbit_info(o) for o in orbits]
    checks, ests, ladder = [], [], None
    for o in orbits:
        e, c, lad = _estimate(o, o.values, rep.predicted_dim, a)
        ests.append(e)
        checks += c
        ladder = ladder or lad
    rep.estimated_dims = {"start": ests[0], "alt_start": ests[1]}
    ok, info = _independence(*ests)
    rep.details["independence"] = info
    checks.append(ok)
    if out is not None:
        orbits[0].to_csv(out / "orbit.csv")
        if ladder is not None:
            ladder.ladder_csv(out / "ladder.csv")
    rep.verdict = _verdict(checks)
    return rep


def cmd_infinity(cfg: dict, out: Path | None = None) -> AnalysisReport:
    """Unbounded canard cycle of a classical PWS Lienard system."""
    a = cfg["analysis"]
    if "classical" not in cfg:
        raise ConfigError("the infinity analysis needs a 'classical' system block")
    psys, cl = build_system(cfg)
    rep = AnalysisReport(cfg["system_id"], "infinity", UNBOUNDED, config=cfg)
    rep.assumptions["hopf"] = _require_hopf(psys)
    interval = cl.check_intervals()
    rep.assumptions["interval"] = interval.to_dict()
    if not interval.interval_ok:
        raise AssumptionViolation(f"interval assumption fails: {interval.violations[:3]}")
    f, k0 = lienard_f_coeffs(cl)
    mismatch = cl.a1_minus != cl.a1_plus
    rep.invariants = {"n": cl.n, "k0": k0, "f_k": [float(v) for v in f],
                      "a1_mismatch": mismatch}
    rep.predicted_dim = predict_dimension(UNBOUNDED, n=cl.n, k0=k0, a1_mismatch=mismatch)
    starts = [float(a["y0"]), float(a.get("y0_alt", 2.0 * a["y0"]))]
    kw = dict(max_iter=int(a["max_iter"]), quad_tol=a["quad_tol"], root_tol=a["root_tol"],
              n=cl.n, stop_tol=float(a.get("r_stop", 1e-10)))
    orbits = [orbit_generate(psys, y0, UNBOUNDED, **kw) for y0 in starts]
    rep.details["orbits"] = [_orbit_info(o) for o in orbits]
    checks, ests, ladder = [], [], None
    for o in orbits:
        e, c, lad = _estimate(o, unbounded_embed(o.values, cl.n), rep.predicted_dim, a)
        ests.append(e)
        checks += c
        ladder = ladder or lad
    rep.estimated_dims = {"start": ests[0], "alt_start": ests[1]}
    ok, info = _independence(*ests)
    rep.details["independence"] = info
    checks.append(ok)
    if mismatch:
        r = unbounded_embed(orbits[0].values, cl.n)
        ratio = float(r[-1] / r[-2])
        q = (cl.a1_plus / cl.a1_minus) ** (1.0 / (2 * cl.n))
        expected = min(q, 1.0 / q)
        rel = abs(ratio - expected) / expected
        rep.details["r_ratio"] = {"observed": ratio, "expected": expected, "relative_error": rel}
        checks.append(rel <= 0.01)
    r_tilde = float(a.get("r_tilde", 0.5))
    r_grid = [float(r) for r in a.get("r_grid", np.linspace(0.1, 0.45, 10))]
    res = [invariance_check_inf(cl, r, r_tilde, a["quad_tol"]) for r in r_grid]
    rep.residuals["infinity_chart"] = max(res)
    if out is not None:
        orbits[0].to_csv(out / "orbit.csv")
        if ladder is not None:
            ladder.ladder_csv(out / "ladder.csv")
        ch = infinity_chart(cl, r_grid, r_tilde, a["quad_tol"])
        with open(out / "sdi.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["r", "phi_minus", "phi_plus", "J_minus", "J_plus"])
            for row in zip(ch.r, ch.phi_minus, ch.phi_plus, ch.j_minus, ch.j_plus):
                w.writerow([repr(float(v)) for v in row])
    rep.verdict = _verdict(checks)
    return rep


def _grid(g) -> np.ndarray:
    """[lo, hi, n] as a geometric grid, or an explicit list."""
    if len(g) == 3 and float(g[2]).is_integer() and g[2] > 3 and g[1] > g[0]:
        return np.geomspace(float(g[0]), float(g[1]), int(g[2]))
    return np.asarray(g, dtype=float)


def cmd_blowup(cfg: dict, out: Path | None = None) -> AnalysisReport:
    """beta constants, the half-return difference map, and its sign pattern."""
    a = cfg["analysis"]
    psys, _ = build_system(cfg)
    rep = AnalysisReport(cfg["system_id"], "blowup", HOPF, config=cfg)
    rep.assumptions["hopf"] = _require_hopf(psys)
    model = beta_constants(psys)
    rep.invariants = {"beta_minus": model.beta_minus, "beta_plus": model.beta_plus}
    checks = []
    exp = a.get("expect", {})
    for key in ("beta_minus", "beta_plus"):
        if key in exp:
            err = abs(getattr(model, key) - float(exp[key]))
            ok = err <= 4.0 * np.finfo(float).eps * max(1.0, abs(float(exp[key])))
            rep.details[f"{key}_check"] = {"expected": float(exp[key]), "abs_error": err, "ok": ok}
            checks.append(ok)
    grid = _grid(a.get("ybar_grid", [1e-3, 50.0, 200]))
    scan = delta_scan(model, grid)
    equal = model.beta_minus == model.beta_plus
    ok = scan.max_abs < 1e-9 if equal else scan.sign in (1, -1)
    rep.details["delta_scan"] = {"sign": scan.sign, "min_abs": scan.min_abs,
                                 "max_abs": scan.max_abs, "ok": ok}
    checks.append(ok)
    rng = np.random.default_rng(cfg.get("seed", 0))
    lo, hi = map(float, a.get("beta_range", (0.2, 5.0)))
    pairs = []
    for _ in range(int(a.get("random_pairs", 20))):
        bm, bp = rng.uniform(lo, hi, 2)
        s = delta_scan(BlowupModel.from_betas(float(bm), float(bp)), grid)
        pairs.append({"beta_minus": float(bm), "beta_plus": float(bp), "sign": s.sign,
                      "ok": s.sign in (1, -1)})
    sym = delta_scan(BlowupModel.from_betas(1.5, 1.5), grid)
    rep.details["random_pairs"] = pairs
    rep.details["symmetric_collapse"] = {"max_abs": sym.max_abs, "ok": sym.max_abs < 1e-9}
    checks += [p["ok"] for p in pairs] + [sym.max_abs < 1e-9]
    rep.residuals["separatrix"] = {"minus": separatrix_check(model, -1),
                                   "plus": separatrix_check(model, 1)}
    checks.append(max(rep.residuals["separatrix"].values()) < 1e-8)
    if out is not None:
        scan.to_csv(out / "delta_scan.csv")
    rep.verdict = _verdict(checks)
    return rep


def cmd_simulate(cfg: dict, out: Path | None = None) -> AnalysisReport:
    """Direct integration: cycle search, or an alpha sweep for the saddle-node signature."""
    a = cfg["analysis"]
    psys, _ = build_system(cfg)
    rep = AnalysisReport(cfg["system_id"], "simulate", None, config=cfg)
    rep.assumptions["hopf"] = validate_hopf(psys).to_dict()
    mode = a.get("mode", "cycles")
    rk_tol = float(a.get("rk_tol", sim.RK_TOL))
    bracket = tuple(float(v) for v in a["y_bracket"])
    n_grid = int(a.get("n_grid", 41))
    method = a.get("method", "difference")
    if mode == "cycles":
        cycles = sim.cycle_search(psys, bracket, rk_tol, n_grid=n_grid, method=method)
        rep.details["cycles"] = [c.to_dict() for c in cycles]
        checks = []
        exp = a.get("expect", {})
        if "n_cycles" in exp:
            checks.append(len(cycles) == int(exp["n_cycles"]))
        if "stability" in exp:
            checks.append(all(c.stability == exp["stability"] for c in cycles))
        if cycles and "starts" in a:
            turns = int(a.get("n_turns", 6))
            ends = []
            for y0 in a["starts"]:
                tr = sim.integrate_pws(psys, (0.0, float(y0)), (0.0, 1e7), rk_tol,
                                       n_cross=2 * turns, record=False)
                ups = tr.crossing_y[1::2]
                ends.append(float(ups[-1]) if ups.size else math.nan)
            target = cycles[0].y_up
            dev = max(abs(e - target) for e in ends)
            rep.details["convergence"] = {"starts": a["starts"], "last_upper_crossings": ends,
                                          "cycle_y_up": target, "max_deviation": dev}
            checks.append(dev < 1e-6)
        if out is not None:
            sim.cycles_to_json(cycles, out / "cycles.json")
            y_start = cycles[0].y_up if cycles else bracket[0]
            sim.integrate_pws(psys, (0.0, y_start), (0.0, 1e7), rk_tol, n_cross=2).to_csv(
                out / "orbit.csv")
        rep.verdict = _verdict(checks)
        return rep

    if mode != "sweep":
        raise ConfigError(f"unknown simulate mode {mode!r}")
    lo, hi, ys, ac = sim.alpha_window(psys, bracket, alpha_range=tuple(a.get("alpha_range",
                                                                              (-0.5, 0.5))))
    rep.details["alpha_c_profile"] = {"y": [float(v) for v in ys], "alpha_c": [float(v) for v in ac],
                                      "variation": float(np.ptp(ac))}
    alphas = np.linspace(lo, hi, int(a.get("n_alpha", 13)))
    sweep = sim.alpha_sweep(psys, alphas, bracket, rk_tol, n_grid=n_grid, method=method)
    rep.details["sweep"] = {"transitions": sweep.transitions(), "resolved": sweep.resolved,
                            "saddle_node": sweep.has_saddle_node(), "fold": sweep.fold(),
                            "alpha_window": [lo, hi]}
    controls = {}
    for d in a.get("control_deltas", []):
        cfg_d = copy.deepcopy(cfg)
        cfg_d["params"]["delta"] = float(d)
        sys_d, _ = build_system(cfg_d)
        sw = sim.alpha_sweep(sys_d, alphas, bracket, rk_tol, n_grid=n_grid, method=method)
        controls[repr(float(d))] = sw
    rep.details["controls"] = {k: {"counts": [int(c) for c in v.counts], "resolved": v.resolved}
                               for k, v in controls.items()}
    if out is not None:
        data = {"sweep": sweep.to_dict(), "controls": {k: v.to_dict() for k, v in controls.items()}}
        (out / "cycles.json").write_text(dumps(data) + "\n")
        fold = sweep.fold()
        if fold is not None:
            s = psys.with_params(alpha_minus=fold[0], alpha_plus=fold[0])
            sim.integrate_pws(s, (0.0, fold[1]), (0.0, 1e7), rk_tol, n_cross=2).to_csv(
                out / "orbit.csv")
    if not sweep.resolved or not all(v.resolved for v in controls.values()):
        rep.verdict = INCONCLUSIVE
        rep.exit_code = EXIT_NUMERIC
        rep.error = ("the difference map is flat to within integration noise over the bracket; "
                     "the alpha window of the canard explosion is below double precision "
                     "at this epsilon")
        return rep
    checks = [sweep.has_saddle_node()]
    checks += [bool(np.all(v.counts == 0)) for v in controls.values()]
    rep.verdict = _verdict(checks)
    return rep


def cmd_verify(cfg: dict, out: Path | None = None) -> AnalysisReport:
    """Invariance suite: normal-form SDI near the Hopf point, chart SDI at infinity."""
    a = cfg["analysis"]
    psys, cl = build_system(cfg)
    rep = AnalysisReport(cfg["system_id"], "verify", None, config=cfg)
    rep.assumptions["hopf"] = _require_hopf(psys)
    th = {"sdi": 1e-8, "infinity": 1e-7}
    th.update(a.get("thresholds", {}))
    order = int(a.get("series_order", 32))
    ys = _grid(a.get("y_grid", [1e-3, 0.05, 20]))
    rows, worst = [], 0.0
    for y in ys:
        im, ip = sdi_pm(psys, float(y), a["quad_tol"])
        nm, np_ = sdi_normal_form(psys, float(y), a["quad_tol"], order)
        worst = max(worst, abs(nm - im), abs(np_ - ip))
        rows.append((y, im, ip, nm, np_))
    rep.residuals["normal_form"] = worst
    checks = [worst < th["sdi"]]
    if cl is not None:
        g = a.get("r_grid", [0.1, 0.45, 10])
        r_grid = np.linspace(g[0], g[1], int(g[2])) if len(g) == 3 else np.asarray(g, float)
        r_tilde = float(a.get("r_tilde", 0.5))
        res = [invariance_check_inf(cl, float(r), r_tilde, a["quad_tol"]) for r in r_grid]
        rep.residuals["infinity_chart"] = max(res)
        checks.append(max(res) < th["infinity"])
    rep.details["thresholds"] = th
    rep.details["grid_sizes"] = {"y": int(ys.size)}
    if out is not None:
        with open(out / "sdi.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["y", "I_minus", "I_plus", "I_minus_normal_form", "I_plus_normal_form"])
            for row in rows:
                w.writerow([repr(float(v)) for v in row])
    rep.verdict = _verdict(checks)
    return rep


COMMANDS = {"hopf": cmd_hopf, "canard": cmd_canard, "infinity": cmd_infinity,
            "blowup": cmd_blowup, "simulate": cmd_simulate, "verify": cmd_verify}


def run(command: str, config, out=None, seed: int = 0, quad_tol=None,
        max_iter=None) -> AnalysisReport:
    """Load, resolve, run and (when ``out`` is given) write report.json and the CSVs."""
    outdir = None if out is None else Path(out)
    if outdir is not None:
        outdir.mkdir(parents=True, exist_ok=True)
    raw = config if isinstance(config, dict) else None
    system_id = raw.get("system_id", "?") if raw else Path(str(config)).stem
    try:
        if raw is None:
            raw = load_config(config)
        else:
            jsonschema.validate(raw, _schema())
        cfg = resolve_config(raw, quad_tol, max_iter, seed)
        system_id = cfg["system_id"]
        rep = COMMANDS[command](cfg, outdir)
        if rep.exit_code == EXIT_CONSISTENT:
            rep.exit_code = _exit_for(rep.verdict)
    except jsonschema.ValidationError as exc:
        rep = AnalysisReport(system_id, command, error=f"config fails the schema: {exc.message}",
                             exit_code=EXIT_ASSUMPTION, config=raw or {})
    except CanardFractalError as exc:
        rep = AnalysisReport(system_id, command, error=f"{type(exc).__name__}: {exc}",
                             exit_code=exc.exit_code, config=raw or {})
    if outdir is not None:
        (outdir / "report.json").write_text(dumps(rep.to_dict()) + "\n")
    return rep


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="canard-fractal",
                                 description="Fractal analysis of PWS slow-fast Lienard systems.")
    ap.add_argument("command", choices=sorted(COMMANDS))
    ap.add_argument("--config", required=True,
                    help="config file, or the name of a shipped example")
    ap.add_argument("--out", default="canard_out", help="output directory")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--quad-tol", type=float, default=None)
    ap.add_argument("--max-iter", type=int, default=None)
    args = ap.parse_args(argv)
    if not 0 <= args.seed < 2 ** 64:
        ap.error("--seed must be an unsigned 64-bit integer")
    rep = run(args.command, args.config, args.out, args.seed, args.quad_tol, args.max_iter)
    line = f"{rep.system_id}: {rep.command} -> {rep.verdict}"
    if rep.predicted_dim is not None:
        line += f" (predicted dimension {rep.predicted_dim:.6g})"
    if rep.error:
        line += f"\n  {rep.error}"
    print(line)
    return rep.exit_code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
