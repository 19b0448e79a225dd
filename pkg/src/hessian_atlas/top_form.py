"""Analysis of the leading homogeneous form of the input polynomial.

Counts and certifies the distinct real linear factors (the projective real
roots of the binary form), and classifies forms as hyperbolic or elliptic
according to the sign behavior of their own Hessian form.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import polynomial as npoly

from .polynomials import BivariatePolynomial, HomogeneousPolynomial
from .univariate import real_roots

# Projective (chordal) separation below which two roots count as a cluster.
CLUSTER_TOL = 1e-8
# Circle sweep resolution for sign certification of a root-free form.
SIGN_SWEEP_SAMPLES = 361

HYPERBOLIC = "hyperbolic"
ELLIPTIC = "elliptic"
MIXED = "mixed"
DEGENERATE = "degenerate"


class RootClusterError(ValueError):
    """Two real roots too close to certify simplicity."""


class DegenerateTopFormError(ValueError):
    """The Hessian of the form vanishes identically (repeated real factor)."""


@dataclass(frozen=True)
class TopFormAnalysis:
    """Real linear factor structure of a leading form."""

    k: int
    factor_directions: list = field(default_factory=list)  # unit (u, v) per line
    all_real_factors_simple: bool = True
    classification: str | None = None


def _canonical_direction(u: float, v: float) -> tuple:
    norm = float(np.hypot(u, v))
    u, v = u / norm, v / norm
    if v < 0 or (v == 0 and u < 0):
        u, v = -u, -v
    return (u, v)


def _chordal(d1: tuple, d2: tuple) -> float:
    """Distance between projective directions (lines, not vectors)."""
    a = np.hypot(d1[0] - d2[0], d1[1] - d2[1])
    b = np.hypot(d1[0] + d2[0], d1[1] + d2[1])
    return float(min(a, b))


def real_linear_factors(fn: HomogeneousPolynomial) -> TopFormAnalysis:
    """Count distinct real projective roots of a binary form.

    Works in the chart t -> fn(1, t), testing the direction (0, 1)
    separately (the chart's blind spot).  Simplicity of each root is
    certified by separation from the roots of the t-derivative; an
    unresolvable cluster raises :class:`RootClusterError`.
    """
    if fn.is_zero:
        raise ValueError("top form is zero")
    d = fn.degree
    scale = fn.coeff_scale

    directions: list[tuple] = []
    simple = True

    if d == 0:
        return TopFormAnalysis(k=0, factor_directions=[], all_real_factors_simple=True)

    g = fn.restrict_chart_x()  # coefficients of fn(1, t), ascending
    rr = real_roots(g)
    if rr.suspect_multiple:
        simple = False
    for t in rr.roots:
        directions.append(_canonical_direction(1.0, t))

    # Direction (0, 1): fn(0, 1) is the coefficient of y^d.
    c0d = fn.coeffs.get((0, d), 0.0)
    if abs(c0d) <= 1e-12 * scale:
        directions.append((0.0, 1.0))
        c1 = fn.coeffs.get((1, d - 1), 0.0)
        if abs(c1) <= 1e-12 * scale:
            simple = False

    for i in range(len(directions)):
        for j in range(i + 1, len(directions)):
            if _chordal(directions[i], directions[j]) < CLUSTER_TOL:
                raise RootClusterError("root cluster - simplicity undecidable")

    # Separation of each chart root from the derivative's roots.
    if len(g) > 2:
        dcrit = real_roots(npoly.polyder(g)).roots
        for t in rr.roots:
            for c in dcrit:
                if abs(t - c) < CLUSTER_TOL * max(1.0, abs(t)):
                    simple = False

    return TopFormAnalysis(
        k=len(directions),
        factor_directions=directions,
        all_real_factors_simple=simple,
    )


def hessian_of_form(fn: HomogeneousPolynomial) -> BivariatePolynomial:
    """The Hessian determinant fn_xx * fn_yy - fn_xy^2 of a binary form."""
    a = fn.differentiate("x", 2)
    c = fn.differentiate("y", 2)
    b = fn.differentiate("x").differentiate("y")
    return a * c - b * b


def classify_form(fn: HomogeneousPolynomial) -> str:
    """Classify a binary form by the sign of its Hessian form.

    Hyperbolic: the Hessian form has no real projective roots and is
    non-positive; elliptic: no real roots and non-negative; anything with a
    real root is mixed.  An identically-zero Hessian signals a repeated
    real linear factor and raises :class:`DegenerateTopFormError`.
    """
    if fn.is_zero:
        raise ValueError("top form is zero")
    if fn.degree < 2:
        raise ValueError("classification needs degree >= 2")
    h = hessian_of_form(fn)
    if h.is_zero:
        raise DegenerateTopFormError("degenerate top form")
    hform = HomogeneousPolynomial(h.coeffs)
    analysis = real_linear_factors(hform)
    if analysis.k > 0 or not analysis.all_real_factors_simple:
        return MIXED

    theta = np.linspace(0.0, np.pi, SIGN_SWEEP_SAMPLES)
    vals = hform.evaluate(np.cos(theta), np.sin(theta))
    if np.max(vals) < 0:
        return HYPERBOLIC
    if np.min(vals) > 0:
        return ELLIPTIC
    return MIXED


def analyze_top_form(fn: HomogeneousPolynomial) -> TopFormAnalysis:
    """Factor count plus classification, tolerating degenerate forms."""
    base = real_linear_factors(fn)
    try:
        cls = classify_form(fn) if fn.degree >= 2 else MIXED
        simple = base.all_real_factors_simple
    except DegenerateTopFormError:
        # Identically-zero Hessian form implies a repeated real factor.
        cls = DEGENERATE
        simple = False
    return TopFormAnalysis(
        k=base.k,
        factor_directions=base.factor_directions,
        all_real_factors_simple=simple,
        classification=cls,
    )
