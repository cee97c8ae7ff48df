"""Wall-clock comparison of the numba kernels against the numpy fallback.

    python benchmarks/bench_kernels.py [--repeat 3] [--quick]

The first compiled call of each kernel is excluded (warm-up), so the
numbers compare steady-state throughput.
"""

import argparse
import time

import numpy as np

from canard_fractal import _jit
from canard_fractal import simulate as sim
from canard_fractal.fractal import neighborhood_length
from canard_fractal.model import PwsLienard
from canard_fractal.relation import HOPF, orbit_generate
from canard_fractal.sdi import sdi_pm


def _cases(quick: bool):
    cubic = PwsLienard.from_poly([0, 0, 1], [0, 0, 1], [0, -1, 0, 1], [0, -1])
    g = [0.0, -1.0, -0.5, 0.0, 1.0]
    quartic = PwsLienard.from_poly([0, 0, 0.5], [0, 0, 0.5], g, g, epsilon=0.2,
                                alpha_minus=0.07, alpha_plus=0.07)
    n_orbit = 300 if quick else 3000
    n_pts = 20_000 if quick else 200_000
    pts = np.arange(1, n_pts + 1, dtype=float) ** -1.0
    deltas = np.geomspace(1e-9, 1e-3, 48)
    ys = np.linspace(0.01, 0.6, 20 if quick else 200)
    return {
        "neighborhood_length": lambda: neighborhood_length(pts, deltas),
        f"orbit_generate ({n_orbit} steps)":
            lambda: orbit_generate(cubic, 0.5, HOPF, max_iter=n_orbit, xbound=(1.0, 1e6)),
        f"sdi_pm ({ys.size} heights)": lambda: [sdi_pm(quartic, float(y), 1e-12) for y in ys],
        "difference_map (eps=0.2)": lambda: sim.difference_map(quartic, 0.4),
    }


def _time(fn, repeat):
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def run(repeat: int = 3, quick: bool = False) -> list:
    rows = []
    for name, fn in _cases(quick).items():
        with _jit.use_numba(True):
            fn()
            t_nb = _time(fn, repeat) if _jit.USE_NUMBA else float("nan")
        with _jit.use_numba(False):
            t_np = _time(fn, repeat)
        rows.append((name, t_nb, t_np))
    return rows


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--quick", action="store_true")
    args = ap.parse_args()
    if _jit.DISABLED:
        print("numba disabled through CANARD_FRACTAL_DISABLE_NUMBA; only the numpy column is timed")
    rows = run(args.repeat, args.quick)
    print(f"{'kernel':34s} {'numba [s]':>11s} {'numpy [s]':>11s} {'speed-up':>9s}")
    for name, t_nb, t_np in rows:
        print(f"{name:34s} {t_nb:11.4g} {t_np:11.4g} {t_np / t_nb:9.1f}")


if __name__ == "__main__":
    main()
