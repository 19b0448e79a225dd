"""Invariant inventory of the parabolic curve of polynomial graph surfaces.

Given a real bivariate polynomial f, the package traces the projective
closure of the curve ``f_xx f_yy - f_xy**2 = 0``, computes its oval
topology, locates and classifies the special parabolic points of the graph
of f, measures the half-integer indices of the asymptotic direction fields
at infinity on the Poincare sphere, and audits the index identities and
inequalities that tie these quantities together.
"""

from .polynomials import (
    BivariatePolynomial,
    HomogeneousPolynomial,
    TrivariateHomogeneous,
    homogenize,
)
from .parsing import ParseError, parse_polynomial
from .top_form import TopFormAnalysis, analyze_top_form, classify_form, real_linear_factors
from .hessian import HessianData, build_hessian, check_transversality_at_infinity
from .tracer import ChartPoint, CurveBranch, CurveSet, trace_curve
from .report import AnalysisOptions, AnalysisReport, analyze, emit_json
from .plots import emit_svg

__all__ = [
    "BivariatePolynomial",
    "HomogeneousPolynomial",
    "TrivariateHomogeneous",
    "homogenize",
    "ParseError",
    "parse_polynomial",
    "TopFormAnalysis",
    "analyze_top_form",
    "classify_form",
    "real_linear_factors",
    "HessianData",
    "build_hessian",
    "check_transversality_at_infinity",
    "ChartPoint",
    "CurveBranch",
    "CurveSet",
    "trace_curve",
    "AnalysisOptions",
    "AnalysisReport",
    "analyze",
    "emit_json",
    "emit_svg",
]

__version__ = "0.1.0"
