"""Independent reference computations used by several test modules."""

import math

import numpy as np

from sideband_thermo.params import DriveParams, SystemParams


def bisect(f, lo, hi, rtol=1e-15):
    f_lo = f(lo)
    for _ in range(400):
        mid = 0.5 * (lo + hi)
        if hi - lo <= rtol * abs(mid):
            break
        f_mid = f(mid)
        if f_mid == 0.0:
            return mid
        if (f_mid > 0) == (f_lo > 0):
            lo, f_lo = mid, f_mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def scan_roots(p: SystemParams, d: DriveParams, points=20000):
    """Positive roots of the steady-state cubic by a log-spaced sign scan plus bisection."""
    alpha_sq = p.eta * p.kappa * d.p_op / (p.hbar * d.omega_l)
    k = 2 * p.g0**2 * p.omega_m / (p.omega_m**2 + p.gamma_m**2 / 4)

    def f(n):
        return n * (p.kappa**2 / 4 + (k * n + d.detuning) ** 2) - alpha_sq

    upper = 4 * alpha_sq / p.kappa**2 * 1.01
    grid = np.concatenate([[0.0], np.geomspace(upper * 1e-30, upper, points)])
    vals = f(grid)
    roots = []
    for i in np.nonzero(np.sign(vals[:-1]) != np.sign(vals[1:]))[0]:
        roots.append(bisect(f, grid[i], grid[i + 1]))
    return roots


def random_system(rng):
    omega = 2 * math.pi * 10 ** rng.uniform(5, 8)
    return SystemParams(
        omega_m=omega,
        kappa=omega * 10 ** rng.uniform(-3, 1),
        gamma_m=omega * 10 ** rng.uniform(-6, -2),
        g0=2 * math.pi * 10 ** rng.uniform(0, 4),
        omega_c=2 * math.pi * 10 ** rng.uniform(11, 14.5),
        eta=rng.uniform(0.05, 1.0),
    )


def bistable_threshold_power(p: SystemParams):
    """Smallest pump power with a bistable window (pump frequency taken as omega_c)."""
    k = 2 * p.g0**2 * p.omega_m / (p.omega_m**2 + p.gamma_m**2 / 4)
    return p.kappa**3 / (3 * math.sqrt(3)) * p.hbar * p.omega_c / (p.eta * p.kappa * k)
