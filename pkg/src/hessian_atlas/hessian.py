"""Hessian determinant, second fundamental form, and projective closure.

The parabolic locus of the graph of f is the zero set of
``hess = f_xx * f_yy - f_xy**2``.  Its projective closure is carried by the
homogenization of ``hess`` to degree 2n-4, whose restriction to the line at
infinity equals the Hessian form of the leading part of f.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .polynomials import BivariatePolynomial, TrivariateHomogeneous, homogenize
from .top_form import TopFormAnalysis, real_linear_factors, RootClusterError

# Gradient magnitude (relative to coefficient scale) below which a curve
# point counts as a singularity candidate.
SINGULAR_GRAD_TOL = 1e-7


class HessianIdenticallyZeroError(ValueError):
    """The Hessian determinant vanishes identically (e.g. f = x^3)."""


class TransversalityUndecidedError(ValueError):
    """No certificate available: the curve's top form is identically zero."""


@dataclass(frozen=True)
class SecondFundamentalForm:
    """Coefficients a dx^2 + 2 b dx dy + c dy^2 with a=f_xx, b=f_xy, c=f_yy."""

    a: BivariatePolynomial
    b: BivariatePolynomial
    c: BivariatePolynomial

    def matrix_at(self, x: float, y: float) -> np.ndarray:
        a = self.a.evaluate(x, y)
        b = self.b.evaluate(x, y)
        c = self.c.evaluate(x, y)
        return np.array([[a, b], [b, c]])

    def value(self, x, y, dx, dy):
        return (
            self.a.evaluate(x, y) * dx * dx
            + 2.0 * self.b.evaluate(x, y) * dx * dy
            + self.c.evaluate(x, y) * dy * dy
        )


@dataclass
class HessianData:
    """Affine Hessian determinant and its projective closure."""

    f: BivariatePolynomial
    second_form: SecondFundamentalForm
    hess: BivariatePolynomial
    hf: TrivariateHomogeneous
    smooth: bool = True
    smooth_evidence: dict = field(default_factory=dict)

    @property
    def degree(self) -> int:
        return self.f.degree


def build_hessian(f: BivariatePolynomial) -> HessianData:
    """Assemble hess, the second fundamental form, and the projective closure."""
    n = f.degree
    if n < 3:
        raise ValueError(f"degree must be >= 3, got {n}")
    a = f.differentiate("x", 2)
    b = f.differentiate("x").differentiate("y")
    c = f.differentiate("y", 2)
    hess = a * c - b * b
    if hess.is_zero:
        raise HessianIdenticallyZeroError("Hessian identically zero")
    hf = homogenize(hess, 2 * n - 4)
    return HessianData(
        f=f, second_form=SecondFundamentalForm(a, b, c), hess=hess, hf=hf
    )


def check_transversality_at_infinity(hd: HessianData, tfa: TopFormAnalysis) -> bool:
    """Whether the projective curve meets the line at infinity transversally.

    True iff every real root of the curve's restriction to that line is
    simple and the curve gradient there is not normal to the line.  An
    empty intersection is vacuously transverse.
    """
    h_inf = hd.hf.restrict_to_infinity()
    if h_inf.is_zero:
        raise TransversalityUndecidedError("no transversality certificate")
    try:
        analysis = real_linear_factors(h_inf)
    except RootClusterError:
        return False
    if not analysis.all_real_factors_simple:
        return False
    scale = max(hd.hf.coeff_scale, 1e-300)
    for (u, v) in analysis.factor_directions:
        grad = hd.hf.gradient(u, v, 0.0)
        if np.hypot(grad[0], grad[1]) <= 1e-9 * max(np.linalg.norm(grad), scale):
            return False
    return True


def certify_smoothness(hd: HessianData, sample_lifts: np.ndarray) -> bool:
    """Numerically screen the projective curve for singular points.

    Checks the gradient magnitude at every accepted curve point and runs
    damped Newton searches for common zeros of the polynomial and its
    gradient seeded from the curve.  This can refute smoothness, not prove
    it; a clean screen is recorded as evidence only.
    """
    hf = hd.hf
    scale = max(hf.coeff_scale, 1e-300)
    thresh = SINGULAR_GRAD_TOL * scale
    evidence = {"min_gradient": None, "singular_point": None}

    if sample_lifts.size:
        grads = np.stack(
            [np.asarray(g.evaluate(*sample_lifts.T), dtype=float)
             for g in hf.gradient_parts],
            axis=-1,
        )
        gnorm = np.linalg.norm(grads, axis=-1)
        evidence["min_gradient"] = float(np.min(gnorm))
        if np.min(gnorm) <= thresh:
            hd.smooth = False
            hd.smooth_evidence = evidence
            return False

        # Newton search for simultaneous zeros of value and gradient,
        # seeded from the lowest-gradient curve points.
        order = np.argsort(gnorm)[:12]
        second = [[hf.gradient_parts[i].partial(j) for j in range(3)] for i in range(3)]
        for idx in order:
            p = sample_lifts[idx].astype(float)
            for _ in range(20):
                g = hf.gradient(*p)
                val = hf.evaluate(*p)
                res = np.concatenate([[val], g])
                jac = np.zeros((4, 3))
                jac[0] = g
                for i in range(3):
                    for j in range(3):
                        jac[1 + i, j] = second[i][j].evaluate(*p)
                step, *_ = np.linalg.lstsq(jac, -res, rcond=None)
                if not np.all(np.isfinite(step)):
                    break
                p = p + np.clip(step, -0.2, 0.2)
                nrm = np.linalg.norm(p)
                if nrm < 1e-9:
                    break
                p = p / nrm
            g = hf.gradient(*p)
            if (
                np.linalg.norm(g) < thresh
                and abs(hf.evaluate(*p)) < 1e-9 * scale
                and np.linalg.norm(p) > 0.5
            ):
                evidence["singular_point"] = [float(t) for t in p]
                hd.smooth = False
                hd.smooth_evidence = evidence
                return False

    hd.smooth_evidence = evidence
    return hd.smooth


@dataclass(frozen=True)
class GenericityScreen:
    """Necessary-condition flags for genericity; any failure disables audits.

    A numerical screen can refute genericity, never certify it.
    """

    curve_smooth: bool
    folds_nondegenerate: bool
    top_factors_simple: bool

    @property
    def passed(self) -> bool:
        return self.curve_smooth and self.folds_nondegenerate and self.top_factors_simple

    def to_dict(self) -> dict:
        return {
            "curve_smooth": self.curve_smooth,
            "folds_nondegenerate": self.folds_nondegenerate,
            "top_factors_simple": self.top_factors_simple,
            "passed": self.passed,
        }
