"""Extension of the asymptotic direction fields to the Poincare sphere.

The affine quadratic equation for asymptotic directions extends to an
analytic quadratic differential form on the whole sphere, built from the
homogenization F of the input polynomial.  The equator is an integral
curve of the extended fields; their singular points all sit on the equator
at the real zero directions of the leading form.  Line-field indices are
measured by doubled-angle winding around geodesic loops, giving
half-integers; the global audit checks the index identities.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .hessian import HessianData
from .polynomials import BivariatePolynomial, TrivariateHomogeneous, homogenize
from .top_form import TopFormAnalysis

# Angular separation of the two line solutions below which sheet matching
# is ambiguous at a sample.
BRANCH_AMBIGUITY_TOL = 1e-3
# Quantization residual allowed when rounding an index to a half-integer.
INDEX_RESIDUAL_TOL = 0.05
DEFAULT_LOOP_RADIUS = 0.05
MIN_LOOP_RADIUS = 1e-4


class FormConsistencyError(RuntimeError):
    """The sphere form failed to reproduce the affine equation on pullback."""


class InconsistentRootError(RuntimeError):
    """A claimed leading-form root is not a singular point of the form."""


class IndexUndecidableError(RuntimeError):
    """Sheet matching stayed ambiguous down to the minimum loop radius."""


@dataclass(frozen=True)
class SphereForm:
    """Matrix data of the extended quadratic differential form."""

    F: TrivariateHomogeneous
    F_uu: TrivariateHomogeneous
    F_uv: TrivariateHomogeneous
    F_vv: TrivariateHomogeneous
    A: TrivariateHomogeneous
    B: TrivariateHomogeneous
    S: TrivariateHomogeneous
    degree: int

    def matrices(self, pts: np.ndarray) -> np.ndarray:
        """Symmetric 3x3 form matrices at unit triples, shape (m, 3, 3)."""
        pts = np.atleast_2d(pts)
        u, v, w = pts[:, 0], pts[:, 1], pts[:, 2]
        fuu = np.asarray(self.F_uu.evaluate(u, v, w))
        fuv = np.asarray(self.F_uv.evaluate(u, v, w))
        fvv = np.asarray(self.F_vv.evaluate(u, v, w))
        a = np.asarray(self.A.evaluate(u, v, w))
        b = np.asarray(self.B.evaluate(u, v, w))
        s = np.asarray(self.S.evaluate(u, v, w))
        m = np.empty(pts.shape[:1] + (3, 3))
        w2 = w * w
        m[:, 0, 0] = w2 * fuu
        m[:, 0, 1] = m[:, 1, 0] = w2 * fuv
        m[:, 1, 1] = w2 * fvv
        m[:, 0, 2] = m[:, 2, 0] = w * a
        m[:, 1, 2] = m[:, 2, 1] = w * b
        m[:, 2, 2] = s
        return m


@dataclass
class InfinitySingularPoint:
    """A singular point of the extended fields on the equator."""

    direction: tuple  # unit (u, v) with leading form zero
    hf_sign_nearby: int
    index: float | None = None
    index_raw: float | None = None
    index_residual: float | None = None

    @property
    def sphere_point(self) -> np.ndarray:
        return np.array([self.direction[0], self.direction[1], 0.0])


def build_sphere_form(f: BivariatePolynomial, check_points: int = 100) -> SphereForm:
    """Assemble the form matrix polynomials from the homogenization of f.

    A pullback consistency check at random affine points verifies that the
    form restricted to the image of the affine plane reproduces the second
    fundamental form up to a positive factor.
    """
    n = f.degree
    if n < 3:
        raise ValueError(f"degree must be >= 3, got {n}")
    F = homogenize(f, n)
    fu = F.partial(0)
    fv = F.partial(1)
    F_uu, F_uv, F_vv = fu.partial(0), fu.partial(1), fv.partial(1)
    U = TrivariateHomogeneous({(1, 0, 0): 1.0})
    V = TrivariateHomogeneous({(0, 1, 0): 1.0})
    A = -(U * F_uu) - (V * F_uv)
    B = -(U * F_uv) - (V * F_vv)
    S = (U * U * F_uu) + 2.0 * (U * V * F_uv) + (V * V * F_vv)
    sf = SphereForm(F=F, F_uu=F_uu, F_uv=F_uv, F_vv=F_vv, A=A, B=B, S=S, degree=n)

    if check_points:
        _pullback_check(sf, f, check_points)
    return sf


def _pullback_check(sf: SphereForm, f: BivariatePolynomial, count: int) -> None:
    rng = np.random.default_rng(1729)
    fxx = f.differentiate("x", 2)
    fxy = f.differentiate("x").differentiate("y")
    fyy = f.differentiate("y", 2)
    for _ in range(count):
        x, y = rng.uniform(-2.0, 2.0, size=2)
        rho = np.sqrt(1.0 + x * x + y * y)
        s = np.array([x, y, 1.0]) / rho
        ds_dx = np.array([1.0, 0.0, 0.0]) / rho - np.array([x, y, 1.0]) * x / rho**3
        ds_dy = np.array([0.0, 1.0, 0.0]) / rho - np.array([x, y, 1.0]) * y / rho**3
        jac = np.column_stack([ds_dx, ds_dy])
        m = sf.matrices(s[None, :])[0]
        q_pull = jac.T @ m @ jac
        q_aff = np.array(
            [
                [fxx.evaluate(x, y), fxy.evaluate(x, y)],
                [fxy.evaluate(x, y), fyy.evaluate(x, y)],
            ]
        )
        denom = float(np.sum(q_aff * q_aff))
        if denom < 1e-300:
            continue
        lam = float(np.sum(q_pull * q_aff)) / denom
        resid = np.linalg.norm(q_pull - lam * q_aff)
        if lam <= 0 or resid > 1e-6 * (np.linalg.norm(q_pull) + 1e-12):
            raise FormConsistencyError(
                f"pullback mismatch at ({x:.3f}, {y:.3f}): factor {lam:.3e}, "
                f"residual {resid:.3e}"
            )


def singular_points_at_infinity(
    sf: SphereForm, tfa: TopFormAnalysis, hd: HessianData
) -> list:
    """One equator singular point per real linear factor direction.

    Verifies the form matrix vanishes there and records the sign of the
    curve polynomial at the point (negative for simple factors, which is
    what makes the index well defined).
    """
    points = []
    scale = max(sf.S.coeff_scale, 1e-300)
    for (u, v) in tfa.factor_directions:
        m = sf.matrices(np.array([[u, v, 0.0]]))[0]
        if np.max(np.abs(m)) > 1e-9 * scale:
            raise InconsistentRootError(
                f"inconsistent top-form root at direction ({u:.6f}, {v:.6f})"
            )
        hval = hd.hf.evaluate(u, v, 0.0)
        sign = -1 if hval < 0 else (1 if hval > 0 else 0)
        points.append(InfinitySingularPoint(direction=(u, v), hf_sign_nearby=sign))
    return points


# --------------------------------------------------------------------------
# Line-field index by doubled-angle winding
# --------------------------------------------------------------------------


def _loop_frame(center: np.ndarray, radius: float, samples: int):
    """Geodesic circle in the projective plane with a transported frame.

    The sphere circle around the center is folded into the closed upper
    hemisphere (southern samples are replaced by their antipodes), which
    realizes a loop in the quotient: around an equator point it runs
    through the collars of both representatives.  The orthonormal tangent
    frame is carried along by projection (discrete parallel transport),
    which is continuous across the folds because antipodal tangent planes
    coincide; its own winding is of the order of the enclosed area.
    """
    c = np.asarray(center, dtype=float)
    c = c / np.linalg.norm(c)
    if c[2] < 0 or (c[2] == 0 and (c[1] < 0 or (c[1] == 0 and c[0] < 0))):
        c = -c
    ref = np.eye(3)[int(np.argmin(np.abs(c)))]
    e1 = ref - (ref @ c) * c
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(c, e1)
    theta = np.linspace(0.0, 2.0 * np.pi, samples, endpoint=False)
    pts = (
        np.cos(radius) * c[None, :]
        + np.sin(radius)
        * (np.cos(theta)[:, None] * e1[None, :] + np.sin(theta)[:, None] * e2[None, :])
    )
    south = pts[:, 2] < 0
    pts[south] *= -1.0

    t1 = np.empty_like(pts)
    t2 = np.empty_like(pts)
    u = ref - (ref @ pts[0]) * pts[0]
    u /= np.linalg.norm(u)
    v = np.cross(pts[0], u)
    for j in range(samples):
        p = pts[j]
        u = u - (u @ p) * p
        u /= np.linalg.norm(u)
        v = v - (v @ p) * p - (v @ u) * u
        v /= np.linalg.norm(v)
        t1[j] = u
        t2[j] = v
    return pts, t1, t2


def _null_angles(q: np.ndarray):
    """Angles (mod pi) of the two null lines of each 2x2 form.

    The forms are indefinite inside the hyperbolic region but degenerate to
    a double line where the loop crosses the equator; a slightly positive
    smaller eigenvalue there is clamped to zero (double root) rather than
    rejected.
    """
    a, b, c = q[:, 0, 0], q[:, 0, 1], q[:, 1, 1]
    half = 0.5 * (a - c)
    mean = 0.5 * (a + c)
    root = np.sqrt(half * half + b * b)
    lam1 = mean + root
    lam2 = mean - root
    scale = np.maximum(np.abs(lam1), np.abs(lam2))
    if np.any(scale == 0.0):
        return None  # the form vanishes: sitting on a singular point
    if np.any(lam1 < -1e-9 * scale) or np.any(lam2 > 1e-9 * scale):
        return None  # definite form: the loop left the hyperbolic region
    lam1 = np.maximum(lam1, 0.0)
    lam2 = np.minimum(lam2, 0.0)
    # Eigenvector of lam1; stable branch choice.
    e1 = np.where(
        (np.abs(b) > 1e-300)[:, None],
        np.column_stack([b, lam1 - a]),
        np.column_stack([np.ones_like(b), np.zeros_like(b)]),
    )
    swap = (np.abs(b) <= 1e-300) & (a < c)
    e1[swap] = np.array([0.0, 1.0])
    e1 /= np.linalg.norm(e1, axis=1)[:, None]
    e2 = np.column_stack([-e1[:, 1], e1[:, 0]])
    wa = np.sqrt(-lam2)
    wb = np.sqrt(lam1)
    d1 = wa[:, None] * e1 + wb[:, None] * e2
    d2 = wa[:, None] * e1 - wb[:, None] * e2
    ang1 = np.mod(np.arctan2(d1[:, 1], d1[:, 0]), np.pi)
    ang2 = np.mod(np.arctan2(d2[:, 1], d2[:, 0]), np.pi)
    return ang1, ang2


def line_field_index(
    sf: SphereForm,
    hd: HessianData,
    center: np.ndarray,
    radius: float = DEFAULT_LOOP_RADIUS,
    samples: int = 720,
):
    """Winding index of one line-field sheet around a loop on the sphere.

    Continues a single null line around the geodesic circle by
    nearest-angle matching in the projective line of directions; the index
    is the accumulated rotation over 2*pi, a half-integer up to the
    quantization residual.  Shrinks the loop on ambiguity.
    """
    r = radius
    while r >= MIN_LOOP_RADIUS:
        result = _index_once(sf, hd, center, r, samples)
        if result is not None:
            return result
        r *= 0.5
    raise IndexUndecidableError("index undecidable")


def _index_once(sf, hd, center, radius, samples):
    pts, t1, t2 = _loop_frame(np.asarray(center, dtype=float), radius, samples)
    hvals = np.asarray(hd.hf.evaluate(pts[:, 0], pts[:, 1], pts[:, 2]))
    if np.any(hvals >= 0):
        return None  # loop left the hyperbolic region; shrink
    m = sf.matrices(pts)
    q = np.empty((samples, 2, 2))
    q[:, 0, 0] = np.einsum("ij,ijk,ik->i", t1, m, t1)
    q[:, 0, 1] = q[:, 1, 0] = np.einsum("ij,ijk,ik->i", t1, m, t2)
    q[:, 1, 1] = np.einsum("ij,ijk,ik->i", t2, m, t2)
    angles = _null_angles(q)
    if angles is None:
        return None
    ang1, ang2 = angles
    sep = np.abs(ang1 - ang2)
    sep = np.minimum(sep, np.pi - sep)
    # Start where the two sheets are most separated (the loop may begin on
    # the equator, where they merge and cannot be told apart).
    k0 = int(np.argmax(sep))
    ang1 = np.roll(ang1, -k0)
    ang2 = np.roll(ang2, -k0)
    sep = np.roll(sep, -k0)
    if sep[0] < 2.0 * BRANCH_AMBIGUITY_TOL:
        return None

    def continue_orbit(start: float):
        """One continuation pass; returns (rotation, end angle) or None.

        Sheets are matched against a constant-velocity prediction; plain
        nearest-angle matching switches sheets at the transversal branch
        crossings on the equator.
        """
        total = 0.0
        prev = start
        velocity = 0.0
        for j in range(1, samples + 1):
            k = j % samples
            predicted = prev + velocity
            deltas = []
            for cand in (ang1[k], ang2[k]):
                dp = (cand - predicted + np.pi / 2) % np.pi - np.pi / 2
                d = (cand - prev + np.pi / 2) % np.pi - np.pi / 2
                deltas.append((abs(dp), d))
            deltas.sort()
            # Ambiguous only when the candidate lines are genuinely distinct
            # yet equally compatible; coincident lines (equator) are fine.
            if (
                sep[k] > BRANCH_AMBIGUITY_TOL
                and abs(deltas[0][0] - deltas[1][0]) < 0.2 * BRANCH_AMBIGUITY_TOL
            ):
                return None
            step = deltas[0][1]
            total += step
            prev = prev + step
            velocity = step
        return total, prev

    # The index of the bivalued field is the mean of the two sheet
    # windings: both sheets are continued once, or a single orbit covers
    # both when the continuation exchanges them.
    first = continue_orbit(ang1[0])
    if first is None:
        return None
    rot1, end1 = first
    d_self = abs((end1 - ang1[0] + np.pi / 2) % np.pi - np.pi / 2)
    d_other = abs((end1 - ang2[0] + np.pi / 2) % np.pi - np.pi / 2)
    if d_other < d_self and sep[0] > BRANCH_AMBIGUITY_TOL:
        second = continue_orbit(end1)
        if second is None:
            return None
        rot2, _ = second
    else:
        second = continue_orbit(ang2[0])
        if second is None:
            return None
        rot2, _ = second
    raw = (rot1 + rot2) / (4.0 * np.pi)
    rounded = round(2.0 * raw) / 2.0
    residual = abs(raw - rounded)
    if residual > INDEX_RESIDUAL_TOL:
        return None
    return raw, rounded, residual


def measure_infinity_indices(
    sf: SphereForm,
    hd: HessianData,
    points: list,
    radius: float = DEFAULT_LOOP_RADIUS,
) -> None:
    """Measure and store the index at every equator singular point."""
    for i, pt in enumerate(points):
        others = [q.sphere_point for j, q in enumerate(points) if j != i]
        r = radius
        if others:
            iso = min(
                min(np.linalg.norm(pt.sphere_point - o), np.linalg.norm(pt.sphere_point + o))
                for o in others
            )
            r = min(r, iso / 3.0)
        raw, rounded, residual = line_field_index(sf, hd, pt.sphere_point, radius=r)
        pt.index_raw = raw
        pt.index = rounded
        pt.index_residual = residual


# --------------------------------------------------------------------------
# Global index audits
# --------------------------------------------------------------------------


@dataclass
class AuditRecord:
    """Outcome of one identity or inequality audit."""

    name: str
    status: str  # "pass" | "fail" | "skipped"
    details: dict = field(default_factory=dict)

    @classmethod
    def skipped(cls, name: str, reason: str) -> "AuditRecord":
        return cls(name=name, status="skipped", details={"reason": reason})


def global_index_audit(
    points: list,
    godrons: list,
    h_le0_chi: int,
    tfa: TopFormAnalysis,
    degree: int,
    curve_connected: bool,
    transverse: bool,
    h_le0_orientable: bool,
) -> list:
    """The index identities tying infinity indices, counts, and topology.

    Checks that the infinity indices sum to half the real factor count,
    that the sum obeys the 0..n bounds, that it matches the Euler
    characteristic of the non-positive region plus half the signed godron
    deficit, the saddle-majority implication, and the exclusion of a lone
    positive-index point on a connected curve with non-orientable
    non-positive region.
    """
    k = tfa.k
    p_minus = sum(1 for g in godrons if g.index == -1)
    p_plus = sum(1 for g in godrons if g.index == +1)
    s_inf = sum(p.index for p in points if p.index is not None)
    audits = []

    audits.append(
        AuditRecord(
            name="infinity_index_sum",
            status="pass" if s_inf == k / 2.0 else "fail",
            details={"sum": s_inf, "expected": k / 2.0, "k": k},
        )
    )
    audits.append(
        AuditRecord(
            name="index_sum_bounds",
            status="pass" if 0.0 <= s_inf <= degree else "fail",
            details={"sum": s_inf, "upper": degree},
        )
    )
    rhs = h_le0_chi + (p_minus - p_plus) / 2.0
    audits.append(
        AuditRecord(
            name="index_euler_identity",
            status="pass" if s_inf == rhs else "fail",
            details={
                "sum": s_inf,
                "chi_h_le0": h_le0_chi,
                "p_minus": p_minus,
                "p_plus": p_plus,
                "rhs": rhs,
            },
        )
    )
    if k - 2 * h_le0_chi >= 0:
        status = "pass" if p_minus >= p_plus else "fail"
        note = "hypothesis holds"
    else:
        status = "pass"
        note = "hypothesis not satisfied; implication vacuous"
    audits.append(
        AuditRecord(
            name="saddle_majority",
            status=status,
            details={
                "k": k,
                "chi_h_le0": h_le0_chi,
                "p_minus": p_minus,
                "p_plus": p_plus,
                "note": note,
            },
        )
    )
    lethal = (
        p_plus == 1
        and p_minus == 0
        and curve_connected
        and transverse
        and not h_le0_orientable
    )
    audits.append(
        AuditRecord(
            name="single_positive_fold_exclusion",
            status="fail" if lethal else "pass",
            details={
                "p_plus": p_plus,
                "p_minus": p_minus,
                "curve_connected": curve_connected,
                "transverse": transverse,
                "h_le0_orientable": h_le0_orientable,
            },
        )
    )
    return audits
