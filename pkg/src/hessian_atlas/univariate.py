"""Real root isolation for univariate polynomials.

Roots are bracketed by a descending-derivative cascade: the real roots of
g' split the line into monotone intervals of g, and a sign change on a
monotone interval brackets exactly one simple root.  Brackets are refined
by Newton steps guarded by bisection, so convergence is unconditional.
Even-multiplicity roots produce no sign change; they are surfaced
separately as critical points where g itself is numerically zero.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import polynomial as npoly

# Bracket width at which refinement stops (scaled by root magnitude).
REFINE_WIDTH = 1e-12
# |g(c)| below this multiple of the local evaluation scale at a critical
# point c flags a repeated root.
MULTIPLE_ROOT_TOL = 1e-10


@dataclass
class UnivariateRoots:
    """Refined real roots plus repeated-root diagnostics."""

    roots: list = field(default_factory=list)
    critical_points: list = field(default_factory=list)
    suspect_multiple: list = field(default_factory=list)
    is_zero: bool = False


def _strip(coeffs: np.ndarray) -> np.ndarray:
    """Remove numerically-zero leading coefficients."""
    c = np.asarray(coeffs, dtype=float)
    scale = np.max(np.abs(c)) if c.size else 0.0
    if scale == 0.0:
        return np.zeros(0)
    keep = np.nonzero(np.abs(c) > 1e-14 * scale)[0]
    if keep.size == 0:
        return np.zeros(0)
    return c[: keep[-1] + 1]


def _local_scale(coeffs: np.ndarray, x: float) -> float:
    """Natural evaluation magnitude sum |a_i| |x|^i (backward-error scale)."""
    powers = np.abs(x) ** np.arange(len(coeffs))
    return float(np.abs(coeffs) @ powers) or 1.0


def _refine(coeffs: np.ndarray, deriv: np.ndarray, a: float, b: float) -> float:
    """Shrink a sign-change bracket [a, b] to a root, Newton inside bisection."""
    fa = npoly.polyval(a, coeffs)
    for _ in range(200):
        if b - a < REFINE_WIDTH * max(1.0, abs(a), abs(b)):
            break
        mid = 0.5 * (a + b)
        x = mid
        d = npoly.polyval(mid, deriv)
        if d != 0.0:
            step = mid - npoly.polyval(mid, coeffs) / d
            if a < step < b:
                x = step
        fx = npoly.polyval(x, coeffs)
        if fx == 0.0:
            return float(x)
        if (fx > 0) == (fa > 0):
            a, fa = x, fx
        else:
            b = x
    return float(0.5 * (a + b))


def real_roots(coeffs) -> UnivariateRoots:
    """All real roots of ``sum coeffs[i] * t**i``, with multiplicity flags."""
    c = _strip(coeffs)
    if c.size == 0:
        return UnivariateRoots(is_zero=True)
    if c.size == 1:
        return UnivariateRoots()
    c = c / np.max(np.abs(c))
    deg = c.size - 1
    if deg == 1:
        return UnivariateRoots(roots=[float(-c[0] / c[1])])

    deriv = npoly.polyder(c)
    crit = real_roots(deriv).roots

    # Cauchy bound on root magnitude.
    bound = 1.0 + float(np.max(np.abs(c[:-1]))) / abs(c[-1])
    pts = [-bound] + sorted(t for t in crit if -bound < t < bound) + [bound]

    roots: list[float] = []
    suspects: list[float] = []
    vals = [npoly.polyval(p, c) for p in pts]
    for i in range(len(pts) - 1):
        a, b, fa, fb = pts[i], pts[i + 1], vals[i], vals[i + 1]
        if fa == 0.0 and i == 0:
            roots.append(a)
        if fa * fb < 0:
            roots.append(_refine(c, deriv, a, b))
        elif fb == 0.0 and i == len(pts) - 2:
            roots.append(b)

    for t, ft in zip(pts[1:-1], vals[1:-1]):
        if abs(ft) < MULTIPLE_ROOT_TOL * _local_scale(c, t):
            suspects.append(float(t))
            if not any(abs(t - r) < 1e-8 * max(1.0, abs(t)) for r in roots):
                roots.append(float(t))

    roots.sort()
    return UnivariateRoots(
        roots=roots, critical_points=list(crit), suspect_multiple=suspects
    )
