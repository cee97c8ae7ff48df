import numpy as np

from canard_fractal.model import ClassicalLienard, PwsLienard

# The recurring polynomial systems, ascending coefficients.
QUARTIC_F = [0.0, 0.0, 0.5]
QUARTIC_G = [0.0, -1.0, -0.5, 0.0, 1.0]
Y_HAT = 0.41427219411439


def quartic(delta=0.0, **params):
    g_minus = np.array(QUARTIC_G)
    g_minus[1] -= delta
    return PwsLienard.from_poly(QUARTIC_F, QUARTIC_F, g_minus, QUARTIC_G, name="quartic", **params)


def gbar_cubic():
    return PwsLienard.from_poly([0, 0, 1], [0, 0, 1], [0, -1, 0, 1], [0, -1], name="gbar_cubic")


def asymmetric_linear():
    return PwsLienard.from_poly([0, 0, 1], [0, 0, 1], [0, -1], [0, -2], name="asym")


def symmetric():
    return PwsLienard.from_poly([0, 0, 1, -1], [0, 0, 1, 1], [0, -1, 1], [0, -1, -1],
                                name="symmetric")


def relaxation(eps=0.05, alpha=-1.0):
    f = [0.0, 0.0, 0.5, 1.0 / 3.0]
    return PwsLienard.from_poly(f, f, [0, -1], [0, -1], epsilon=eps, alpha_minus=alpha,
                                alpha_plus=alpha, name="relaxation")


def mismatch_n3():
    return ClassicalLienard(3, 2.0, 1.0, (2.0, 0.0), (1.0, 0.0))


def n4k2():
    return ClassicalLienard(4, 1.0, 1.0, (2.0, 0.0, 0.0), (1.0, 0.0, 0.0))


# one summary line per acceptance criterion, printed after the run
ACCEPTANCE = {}


def record_criterion(number, ok, detail):
    ACCEPTANCE[number] = (bool(ok), detail)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
