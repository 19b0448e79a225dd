"""Special parabolic points: detection along the traced curve and
classification of the folded singularity type.

At a parabolic point the second fundamental form has a one-dimensional
kernel (the unique asymptotic direction).  A special parabolic point is a
point where that direction is tangent to the parabolic curve.  Each one
lifts to a genuine singular point of a vector field on the double cover
of direction elements; the sign of the determinant of the linearization,
restricted to the cover's tangent plane, separates folded saddles
(index -1) from folded nodes and foci (index +1).  An independent winding
number of the projected planar field serves as the classification oracle.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .hessian import HessianData
from .polynomials import BivariatePolynomial, homogenize
from .tracer import (
    CHART_AXIS,
    ChartPoint,
    CurveSet,
    _ChartFrame,
    best_chart,
    chart_coords,
    lift_from_chart,
    projective_dist,
)

# Normalized tangency residual accepted after bisection refinement.
TANGENCY_TOL = 1e-10
# Candidates closer than this (projectively) are merged.
MERGE_TOL = 1e-6
# Relative determinant scale below which a fold is reported degenerate.
FOLD_DEGENERACY_TOL = 1e-9

SADDLE = "saddle"
NODE = "node"
FOCUS = "focus"


class FlatUmbilicError(ValueError):
    """All second derivatives vanish at the point; no kernel direction."""


class DegenerateTangencyError(RuntimeError):
    """The tangency function is numerically zero along a whole arc."""


class DegenerateFoldError(RuntimeError):
    """The folded singularity has a near-singular linearization."""


@dataclass(frozen=True)
class AsymptoticDirection:
    """The kernel line of the second fundamental form at a parabolic point."""

    point: ChartPoint
    direction: tuple  # unit (dx, dy); a line, so the sign is arbitrary


@dataclass
class GodronCandidate:
    """Refined tangency location prior to classification."""

    lift: np.ndarray
    direction: tuple
    tau_residual: float

    @property
    def point(self) -> ChartPoint:
        return ChartPoint.from_lift(self.lift)


@dataclass
class SpecialParabolicPoint:
    """A classified special parabolic point."""

    location: ChartPoint
    direction: AsymptoticDirection
    folded_type: str
    index: int
    lie_cartan_det: float
    lie_cartan_trace: float
    slope_chart: str
    residuals: dict = field(default_factory=dict)


def kernel_direction(hd: HessianData, point) -> AsymptoticDirection:
    """Unique asymptotic direction at an affine parabolic point.

    Uses the dominant row of the Hessian matrix of f; raises if the point
    is off the curve or all second derivatives vanish.
    """
    if isinstance(point, ChartPoint):
        lift = np.asarray(point.sphere_coords)
        if abs(lift[2]) < 1e-12:
            raise ValueError("kernel direction is an affine notion; point at infinity")
        x, y = lift[0] / lift[2], lift[1] / lift[2]
    else:
        x, y = float(point[0]), float(point[1])

    sf = hd.second_form
    fxx = sf.a.evaluate(x, y)
    fxy = sf.b.evaluate(x, y)
    fyy = sf.c.evaluate(x, y)
    scale = max(abs(fxx), abs(fxy), abs(fyy))
    if scale < 1e-10:
        raise FlatUmbilicError("flat umbilic - non-generic")

    hval = hd.hess.evaluate(x, y)
    gx = hd.hess.differentiate("x").evaluate(x, y)
    gy = hd.hess.differentiate("y").evaluate(x, y)
    eps = 1e-8 * (np.hypot(gx, gy) + 1e-6 * max(hd.hess.coeff_scale, 1e-300))
    if abs(hval) > eps:
        raise ValueError("point not on the parabolic curve")

    v1 = np.array([fyy, -fxy])
    v2 = np.array([-fxy, fxx])
    v = v1 if np.linalg.norm(v1) >= np.linalg.norm(v2) else v2
    v = v / np.linalg.norm(v)
    cp = point if isinstance(point, ChartPoint) else ChartPoint.from_lift(
        np.array([x, y, 1.0]) / np.linalg.norm([x, y, 1.0])
    )
    return AsymptoticDirection(point=cp, direction=(float(v[0]), float(v[1])))


# --------------------------------------------------------------------------
# Detection along the traced curve
# --------------------------------------------------------------------------


class _TangencyField:
    """Tangency functional along the curve, in homogeneous coordinates.

    The kernel representative rows (F_vv, -F_uv) and (-F_uv, F_uu) of the
    homogenized second-derivative matrix stay bounded across the line at
    infinity, so sign changes can be scanned on whole projective branches.
    """

    def __init__(self, hd: HessianData):
        n = hd.f.degree
        F3 = homogenize(hd.f, n)
        fu = F3.partial(0)
        fv = F3.partial(1)
        self.fuu = fu.partial(0)
        self.fuv = fu.partial(1)
        self.fvv = fv.partial(1)
        self.hu = hd.hf.gradient_parts[0]
        self.hv = hd.hf.gradient_parts[1]
        self.row_scale = max(
            self.fuu.coeff_scale, self.fuv.coeff_scale, self.fvv.coeff_scale, 1e-300
        )
        self.grad_scale = max(self.hu.coeff_scale, self.hv.coeff_scale, 1e-300)
        self.frames = {c: _ChartFrame(hd.hf, c) for c in ("z", "x", "y")}
        self.hf = hd.hf

    def reps_and_grad(self, lifts: np.ndarray):
        u, v, w = lifts[..., 0], lifts[..., 1], lifts[..., 2]
        a = np.asarray(self.fvv.evaluate(u, v, w), dtype=float)
        b = np.asarray(self.fuv.evaluate(u, v, w), dtype=float)
        c = np.asarray(self.fuu.evaluate(u, v, w), dtype=float)
        gu = np.asarray(self.hu.evaluate(u, v, w), dtype=float)
        gv = np.asarray(self.hv.evaluate(u, v, w), dtype=float)
        return a, b, c, gu, gv

    def aligned_tau(self, lifts: np.ndarray):
        """Tangency values with a continuously sign-aligned kernel line."""
        a, b, c, gu, gv = self.reps_and_grad(np.atleast_2d(lifts))
        m = len(a)
        tau = np.full(m, np.nan)
        dirs = np.zeros((m, 2))
        prev = None
        row_floor = 1e-10 * self.row_scale
        grad_floor = 1e-10 * self.grad_scale
        for i in range(m):
            v1 = np.array([a[i], -b[i]])
            v2 = np.array([-b[i], c[i]])
            n1, n2 = np.linalg.norm(v1), np.linalg.norm(v2)
            if max(n1, n2) < row_floor:
                prev = None
                continue
            vec = v1 / n1 if n1 >= n2 else v2 / n2
            if prev is not None and vec @ prev < 0:
                vec = -vec
            prev = vec
            dirs[i] = vec
            g = np.array([gu[i], gv[i]])
            gn = np.linalg.norm(g)
            if gn < grad_floor:
                continue
            tau[i] = float(vec @ (g / gn))
        return tau, dirs

    def project(self, lift: np.ndarray, slack: float = 0.5):
        """Newton-project a nearby point onto the curve.

        The tangency refinement needs residuals well below the tracing
        tolerance (the reported tangency bound is 1e-10), so a small
        ``slack`` drives Newton toward the floating-point floor, keeping
        the best iterate if progress stalls.
        """
        chart = best_chart(lift)
        frame = self.frames[chart]
        c = chart_coords(chart, lift)
        best_c, best_ratio = c, np.inf
        for _ in range(25):
            val, grad = frame.value_grad(c[0], c[1])
            den = grad @ grad
            if den == 0.0:
                break
            ratio = abs(val) / np.sqrt(den)
            if ratio < best_ratio:
                best_c, best_ratio = c, ratio
            elif ratio > 2.0 * best_ratio:
                break
            if frame.residual_ok(val, grad, slack=slack):
                best_c = c
                break
            c = c - val * grad / den
        out = lift_from_chart(chart, best_c)
        return out if np.linalg.norm(out - lift) < np.linalg.norm(out + lift) else -out

    def tau_single(self, lift: np.ndarray, ref_dir: np.ndarray):
        a, b, c, gu, gv = self.reps_and_grad(lift[None, :])
        v1 = np.array([a[0], -b[0]])
        v2 = np.array([-b[0], c[0]])
        n1, n2 = np.linalg.norm(v1), np.linalg.norm(v2)
        vec = v1 / n1 if n1 >= n2 else v2 / n2
        if vec @ ref_dir < 0:
            vec = -vec
        g = np.array([gu[0], gv[0]])
        gn = np.linalg.norm(g)
        if gn == 0.0:
            return np.nan, vec
        return float(vec @ (g / gn)), vec


def detect_godrons(cs: CurveSet, hd: HessianData) -> list:
    """Scan branches for tangencies of the asymptotic line with the curve.

    Sign changes of the aligned tangency functional are refined by
    bisection along the curve to ``TANGENCY_TOL``; candidates on the line
    at infinity are discarded, near-duplicates merged.
    """
    field_ = _TangencyField(hd)
    candidates: list[GodronCandidate] = []
    for branch in cs.branches:
        tau, dirs = field_.aligned_tau(branch.lifts)
        finite = np.isfinite(tau)
        # Degenerate-arc guard: long runs of numerically-zero tangency.
        tiny = finite & (np.abs(tau) < 1e-9)
        run = 0
        for flag in tiny:
            run = run + 1 if flag else 0
            if run > 100:
                raise DegenerateTangencyError("degenerate tangency arc - non-generic")

        for i in range(len(tau) - 1):
            if not (finite[i] and finite[i + 1]):
                continue
            if tau[i] == 0.0:
                cand = _refine(field_, branch.lifts[i], branch.lifts[i], dirs[i])
                if cand is not None:
                    candidates.append(cand)
                continue
            if tau[i] * tau[i + 1] < 0:
                cand = _refine(
                    field_, branch.lifts[i], branch.lifts[i + 1], dirs[i]
                )
                if cand is not None:
                    candidates.append(cand)

    merged: list[GodronCandidate] = []
    for cand in candidates:
        if all(projective_dist(cand.lift, m.lift) > MERGE_TOL for m in merged):
            merged.append(cand)
    return merged


def _refine(field_: _TangencyField, la, lb, ref_dir) -> GodronCandidate | None:
    la, lb = la.copy(), lb.copy()
    ta, va = field_.tau_single(la, ref_dir)
    tb, _ = field_.tau_single(lb, va)
    best_lift, best_tau, best_dir = la, abs(ta), va
    for _ in range(80):
        if np.linalg.norm(la - lb) < 1e-14:
            break
        mid = la + lb
        mid /= np.linalg.norm(mid)
        mid = field_.project(mid, slack=1e-4)
        tm, vm = field_.tau_single(mid, va)
        if abs(tm) < best_tau:
            best_lift, best_tau, best_dir = mid, abs(tm), vm
        if best_tau < 0.1 * TANGENCY_TOL:
            break
        if np.isnan(tm) or np.isnan(ta):
            return None
        if (tm > 0) == (ta > 0):
            la, ta = mid, tm
        else:
            lb, tb = mid, tm
    if best_tau > TANGENCY_TOL:
        return None
    if abs(best_lift[2]) < 1e-6:
        return None  # tangency at infinity is not an affine special point
    return GodronCandidate(
        lift=best_lift, direction=(float(best_dir[0]), float(best_dir[1])),
        tau_residual=float(best_tau),
    )


# --------------------------------------------------------------------------
# Classification via the lifted field on the double cover
# --------------------------------------------------------------------------


def derivative_table(f: BivariatePolynomial, max_order: int = 4) -> dict:
    """All mixed partials of f up to the given total order, as polynomials."""
    table = {(0, 0): f}
    for order in range(1, max_order + 1):
        for i in range(order + 1):
            j = order - i
            if i > 0:
                table[(i, j)] = table[(i - 1, j)].differentiate("x")
            else:
                table[(i, j)] = table[(i, j - 1)].differentiate("y")
    return table


def _eval_table(table: dict, x: float, y: float) -> dict:
    return {e: p.evaluate(x, y) for e, p in table.items()}


def _lifted_jacobian_p(d: dict, p: float):
    """Jacobian of the lifted field (B_p, p B_p, -(B_x + p B_y)) at slope p."""
    B = d[(2, 0)] + 2 * p * d[(1, 1)] + p * p * d[(0, 2)]
    B_x = d[(3, 0)] + 2 * p * d[(2, 1)] + p * p * d[(1, 2)]
    B_y = d[(2, 1)] + 2 * p * d[(1, 2)] + p * p * d[(0, 3)]
    B_p = 2 * d[(1, 1)] + 2 * p * d[(0, 2)]
    B_xx = d[(4, 0)] + 2 * p * d[(3, 1)] + p * p * d[(2, 2)]
    B_xy = d[(3, 1)] + 2 * p * d[(2, 2)] + p * p * d[(1, 3)]
    B_yy = d[(2, 2)] + 2 * p * d[(1, 3)] + p * p * d[(0, 4)]
    B_px = 2 * d[(2, 1)] + 2 * p * d[(1, 2)]
    B_py = 2 * d[(1, 2)] + 2 * p * d[(0, 3)]
    B_pp = 2 * d[(0, 2)]
    jac = np.array(
        [
            [B_px, B_py, B_pp],
            [p * B_px, p * B_py, p * B_pp + B_p],
            [-(B_xx + p * B_xy), -(B_xy + p * B_yy), -(B_px + B_y + p * B_py)],
        ]
    )
    residuals = {"form": B, "fold": B_p, "tangency": B_x + p * B_y}
    basis = np.array([[1.0, p, 0.0], [0.0, 0.0, 1.0]])
    basis[0] /= np.linalg.norm(basis[0])
    return jac, residuals, basis


def _lifted_jacobian_q(d: dict, q: float):
    """Same construction in the reciprocal-slope chart q = dx/dy."""
    B = q * q * d[(2, 0)] + 2 * q * d[(1, 1)] + d[(0, 2)]
    B_x = q * q * d[(3, 0)] + 2 * q * d[(2, 1)] + d[(1, 2)]
    B_y = q * q * d[(2, 1)] + 2 * q * d[(1, 2)] + d[(0, 3)]
    B_q = 2 * q * d[(2, 0)] + 2 * d[(1, 1)]
    B_xx = q * q * d[(4, 0)] + 2 * q * d[(3, 1)] + d[(2, 2)]
    B_xy = q * q * d[(3, 1)] + 2 * q * d[(2, 2)] + d[(1, 3)]
    B_yy = q * q * d[(2, 2)] + 2 * q * d[(1, 3)] + d[(0, 4)]
    B_qx = 2 * q * d[(3, 0)] + 2 * d[(2, 1)]
    B_qy = 2 * q * d[(2, 1)] + 2 * d[(1, 2)]
    B_qq = 2 * d[(2, 0)]
    jac = np.array(
        [
            [q * B_qx, q * B_qy, q * B_qq + B_q],
            [B_qx, B_qy, B_qq],
            [-(B_xy + q * B_xx), -(B_yy + q * B_xy), -(B_qy + B_x + q * B_qx)],
        ]
    )
    residuals = {"form": B, "fold": B_q, "tangency": B_y + q * B_x}
    basis = np.array([[q, 1.0, 0.0], [0.0, 0.0, 1.0]])
    basis[0] /= np.linalg.norm(basis[0])
    return jac, residuals, basis


def classify_godron(
    cand: GodronCandidate, hd: HessianData, table: dict | None = None
) -> SpecialParabolicPoint:
    """Saddle/node/focus type and index of one special parabolic point.

    The linearization of the lifted field is restricted to the tangent
    plane of the double cover; a negative determinant is a saddle (index
    -1), a positive one a node or focus (index +1), split by the
    discriminant of the restricted map.
    """
    if table is None:
        table = derivative_table(hd.f)
    lift = cand.lift
    x, y = lift[0] / lift[2], lift[1] / lift[2]
    d = _eval_table(table, x, y)

    dx, dy = cand.direction
    if abs(dy) <= abs(dx):
        chart, slope = "p", dy / dx
        jac, residuals, basis = _lifted_jacobian_p(d, slope)
    else:
        chart, slope = "q", dx / dy
        jac, residuals, basis = _lifted_jacobian_q(d, slope)

    form_scale = max(abs(d[(2, 0)]), abs(d[(1, 1)]), abs(d[(0, 2)]), 1e-300)
    checks = {k: abs(v) / form_scale for k, v in residuals.items()}

    r = basis @ jac @ basis.T
    det = float(np.linalg.det(r))
    trace = float(np.trace(r))
    scale = float(np.sum(r * r)) or 1e-300
    if abs(det) <= FOLD_DEGENERACY_TOL * scale:
        raise DegenerateFoldError("degenerate folded singularity - non-generic")

    if det < 0:
        ftype, index = SADDLE, -1
    elif trace * trace - 4.0 * det >= 0:
        ftype, index = NODE, +1
    else:
        ftype, index = FOCUS, +1

    location = cand.point
    direction = AsymptoticDirection(point=location, direction=cand.direction)
    return SpecialParabolicPoint(
        location=location,
        direction=direction,
        folded_type=ftype,
        index=index,
        lie_cartan_det=det,
        lie_cartan_trace=trace,
        slope_chart=chart,
        residuals=checks,
    )


# --------------------------------------------------------------------------
# Winding-number oracle on the double cover
# --------------------------------------------------------------------------


def winding_oracle(
    cand: GodronCandidate, hd: HessianData, table: dict | None = None
) -> int:
    """Index of the lifted field by direct winding on the cover surface.

    Walks a small loop in the surface chart (base coordinate, slope),
    solving for the remaining coordinate on the cover by Newton
    continuation, and accumulates the rotation of the projected field.
    """
    if table is None:
        table = derivative_table(hd.f)
    lift = cand.lift
    x0, y0 = lift[0] / lift[2], lift[1] / lift[2]
    dx, dy = cand.direction
    use_p = abs(dy) <= abs(dx)
    slope = dy / dx if use_p else dx / dy

    span = 1.0 + abs(x0) + abs(y0) + abs(slope)
    for radius in (1e-3 * span, 3e-3 * span, 3e-4 * span, 1e-2 * span):
        result = _winding_once(table, x0, y0, slope, use_p, radius)
        if result is not None:
            return result
    raise DegenerateFoldError("winding oracle failed to stabilize")


def _winding_once(table, x0, y0, slope, use_p, radius, samples=360):
    theta = np.linspace(0.0, 2.0 * np.pi, samples, endpoint=False)
    solved = y0 if use_p else x0
    angles = np.empty(samples)
    d = None
    for j, t in enumerate(theta):
        a = (x0 if use_p else y0) + radius * np.cos(t)
        s = slope + radius * np.sin(t)
        solved = _solve_cover(table, a, s, solved, use_p)
        if solved is None:
            return None
        if use_p:
            x, y, p = a, solved, s
            d = _eval_table(table, x, y)
            vx = 2 * d[(1, 1)] + 2 * p * d[(0, 2)]
            vy = -(
                d[(3, 0)] + 2 * p * d[(2, 1)] + p * p * d[(1, 2)]
                + p * (d[(2, 1)] + 2 * p * d[(1, 2)] + p * p * d[(0, 3)])
            )
        else:
            x, y, q = solved, a, s
            d = _eval_table(table, x, y)
            vx = 2 * q * d[(2, 0)] + 2 * d[(1, 1)]
            vy = -(
                (q * q * d[(2, 1)] + 2 * q * d[(1, 2)] + d[(0, 3)])
                + q * (q * q * d[(3, 0)] + 2 * q * d[(2, 1)] + d[(1, 2)])
            )
        if np.hypot(vx, vy) == 0.0:
            return None
        angles[j] = np.arctan2(vy, vx)
    steps = np.diff(np.concatenate([angles, angles[:1]]))
    steps = (steps + np.pi) % (2.0 * np.pi) - np.pi
    total = float(np.sum(steps))
    raw = total / (2.0 * np.pi)
    idx = int(round(raw))
    if abs(raw - idx) > 0.05 or idx not in (-1, 1):
        return None
    return idx


def _solve_cover(table, a, s, guess, use_p):
    """Newton solve for the cover's remaining coordinate along the loop."""
    val = guess
    for _ in range(40):
        if use_p:
            x, y, p = a, val, s
            d20 = table[(2, 0)].evaluate(x, y)
            d11 = table[(1, 1)].evaluate(x, y)
            d02 = table[(0, 2)].evaluate(x, y)
            b = d20 + 2 * p * d11 + p * p * d02
            db = (
                table[(2, 1)].evaluate(x, y)
                + 2 * p * table[(1, 2)].evaluate(x, y)
                + p * p * table[(0, 3)].evaluate(x, y)
            )
        else:
            x, y, q = val, a, s
            d20 = table[(2, 0)].evaluate(x, y)
            d11 = table[(1, 1)].evaluate(x, y)
            d02 = table[(0, 2)].evaluate(x, y)
            b = q * q * d20 + 2 * q * d11 + d02
            db = (
                q * q * table[(3, 0)].evaluate(x, y)
                + 2 * q * table[(2, 1)].evaluate(x, y)
                + table[(1, 2)].evaluate(x, y)
            )
        scale = max(abs(d20), abs(d11), abs(d02), 1e-300)
        if abs(b) < 1e-12 * scale:
            return val
        if db == 0.0 or not np.isfinite(db):
            return None
        step = b / db
        if abs(step) > 1.0:
            step = np.sign(step)
        val -= step
    return None
