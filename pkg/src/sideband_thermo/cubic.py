"""Closed-form real roots of a cubic polynomial.

Hyperbolic/trigonometric forms are used instead of the textbook Cardano
sum so that small roots do not suffer from cancellation. Every root is then
polished with a few guarded Newton steps.
"""

from __future__ import annotations

import math


def _poly(coeffs, x):
    a, b, c, d = coeffs
    return ((a * x + b) * x + c) * x + d


def _dpoly(coeffs, x):
    a, b, c, _ = coeffs
    return (3.0 * a * x + 2.0 * b) * x + c


def newton_polish(func, dfunc, x, steps=2):
    """Run ``steps`` Newton iterations, keeping a step only if it lowers |f|."""
    fx = func(x)
    for _ in range(steps):
        dfx = dfunc(x)
        if dfx == 0.0 or not math.isfinite(dfx):
            break
        x_new = x - fx / dfx
        f_new = func(x_new)
        if abs(f_new) <= abs(fx):
            x, fx = x_new, f_new
        else:
            break
    return x


def _depressed_roots(p, q):
    """Real roots of t^3 + p t + q = 0."""
    if p == 0.0:
        return [-math.copysign(abs(q) ** (1.0 / 3.0), q)]
    disc = (q / 2.0) ** 2 + (p / 3.0) ** 3
    if p > 0.0:
        # monotone cubic: exactly one real root
        r = 2.0 * math.sqrt(p / 3.0)
        arg = (3.0 * q / (2.0 * p)) * math.sqrt(3.0 / p)
        return [-r * math.sinh(math.asinh(arg) / 3.0)]
    r = 2.0 * math.sqrt(-p / 3.0)
    if disc > 0.0:
        arg = (-3.0 * abs(q) / (2.0 * p)) * math.sqrt(-3.0 / p)
        arg = max(arg, 1.0)
        return [-math.copysign(r * math.cosh(math.acosh(arg) / 3.0), q)]
    arg = (3.0 * q / (2.0 * p)) * math.sqrt(-3.0 / p)
    arg = min(1.0, max(-1.0, arg))
    theta = math.acos(arg) / 3.0
    return [r * math.cos(theta - 2.0 * math.pi * k / 3.0) for k in range(3)]


def real_roots(a, b, c, d, polish_steps=2):
    """Sorted real roots of ``a x^3 + b x^2 + c x + d``.

    A double root from the three-root branch is returned twice; callers that
    need distinct roots should deduplicate.
    """
    if a == 0.0:
        raise ValueError("leading coefficient must be non-zero")
    coeffs = (float(a), float(b), float(c), float(d))
    b1, c1, d1 = b / a, c / a, d / a
    # rescale x = s*y so the monic coefficients are O(1)
    s = max(abs(b1), math.sqrt(abs(c1)), abs(d1) ** (1.0 / 3.0))
    if s == 0.0:
        return [0.0, 0.0, 0.0]
    bb, cc, dd = b1 / s, c1 / s**2, d1 / s**3
    p = cc - bb * bb / 3.0
    q = 2.0 * bb**3 / 27.0 - bb * cc / 3.0 + dd
    roots = [s * (t - bb / 3.0) for t in _depressed_roots(p, q)]
    roots = [
        newton_polish(lambda x: _poly(coeffs, x), lambda x: _dpoly(coeffs, x), x, polish_steps)
        for x in roots
    ]
    return sorted(roots)
