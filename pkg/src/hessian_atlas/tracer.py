"""Tracing of real projective plane curves by predictor-corrector continuation.

The curve ``Hf = 0`` lives in RP^2 and is traced in a three-chart atlas
(one coordinate pinned to 1 per chart).  Points carry a continuous unit
lift to the sphere; chart switching keeps coordinates bounded, and closure
is detected projectively, so branches that cross the line at infinity
close up into projective ovals.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .hessian import HessianData, SINGULAR_GRAD_TOL
from .polynomials import TrivariateHomogeneous

CHARTS = ("z", "x", "y")
CHART_AXIS = {"z": 2, "x": 0, "y": 1}
CHART_KEEP = {"z": (0, 1), "x": (1, 2), "y": (0, 2)}

STEP_MIN = 1e-5
STEP_MAX = 0.05
# Residual target: |F| below this multiple of the local gradient magnitude.
RESIDUAL_REL = 1e-9
# Chart switch once coordinates leave this reliability disk.
CHART_SWITCH_RADIUS = 4.0
MAX_POINTS = 200_000


class TraceSeedError(ValueError):
    """Seed does not satisfy the on-curve precondition."""


class TraceStallError(RuntimeError):
    """Continuation failed; the curve is likely singular at this scale."""


def lift_from_chart(chart: str, coords) -> np.ndarray:
    v = np.empty(3)
    a = CHART_AXIS[chart]
    k0, k1 = CHART_KEEP[chart]
    v[a] = 1.0
    v[k0], v[k1] = coords[0], coords[1]
    return v / np.linalg.norm(v)


def chart_coords(chart: str, lift) -> np.ndarray:
    a = CHART_AXIS[chart]
    k0, k1 = CHART_KEEP[chart]
    return np.array([lift[k0] / lift[a], lift[k1] / lift[a]])


def best_chart(lift) -> str:
    a = int(np.argmax(np.abs(lift)))
    return {2: "z", 0: "x", 1: "y"}[a]


def projective_dist(p, q) -> float:
    return float(min(np.linalg.norm(p - q), np.linalg.norm(p + q)))


@dataclass(frozen=True)
class ChartPoint:
    """A curve point in one affine chart, with its unit sphere lift."""

    chart: str
    coords: tuple
    sphere_coords: tuple

    @classmethod
    def from_lift(cls, lift) -> "ChartPoint":
        lift = np.asarray(lift, dtype=float)
        lift = lift / np.linalg.norm(lift)
        chart = best_chart(lift)
        return cls(chart, tuple(chart_coords(chart, lift)), tuple(lift))


@dataclass
class CurveBranch:
    """One traced projective oval as a chart-tagged closed polyline."""

    lifts: np.ndarray
    chart_tags: list
    closed: bool
    crosses_infinity: bool
    arc_length: float
    one_sided: bool = False

    @cached_property
    def points(self) -> list:
        return [
            ChartPoint(tag, tuple(chart_coords(tag, lift)), tuple(lift))
            for tag, lift in zip(self.chart_tags, self.lifts)
        ]

    def min_projective_distance(self, lift) -> float:
        d1 = np.linalg.norm(self.lifts - lift, axis=1)
        d2 = np.linalg.norm(self.lifts + lift, axis=1)
        return float(min(d1.min(), d2.min()))


@dataclass
class CurveSet:
    """All branches of one projective curve."""

    branches: list = field(default_factory=list)
    compact_in_affine_chart: bool = True

    @property
    def total_points(self) -> int:
        return sum(len(b.lifts) for b in self.branches)

    def all_lifts(self) -> np.ndarray:
        if not self.branches:
            return np.zeros((0, 3))
        return np.vstack([b.lifts for b in self.branches])


class _ChartFrame:
    """Chart restriction of the defining polynomial with its two partials."""

    def __init__(self, hf: TrivariateHomogeneous, chart: str, tol: float = RESIDUAL_REL):
        axis = CHART_AXIS[chart]
        k0, k1 = CHART_KEEP[chart]
        self.F = hf.restrict_chart(axis)
        gp = hf.gradient_parts
        self.F1 = gp[k0].restrict_chart(axis)
        self.F2 = gp[k1].restrict_chart(axis)
        self.scale = max(self.F.coeff_scale, 1e-300)
        self.tol = tol

    def value_grad(self, c0, c1):
        return (
            self.F.evaluate(c0, c1),
            np.array([self.F1.evaluate(c0, c1), self.F2.evaluate(c0, c1)]),
        )

    def residual_ok(self, val, grad, slack: float = 1.0) -> bool:
        floor = 1e-6 * self.scale
        return abs(val) <= slack * self.tol * (np.linalg.norm(grad) + floor)


class CurveTracer:
    """Shared atlas and parameters for tracing one curve."""

    def __init__(
        self,
        hd: HessianData,
        grid: int = 512,
        window: float = 8.0,
        tol: float = RESIDUAL_REL,
    ):
        self.hd = hd
        self.hf = hd.hf
        self.grid = grid
        self.window = window
        self.tol = tol
        self.frames = {c: _ChartFrame(self.hf, c, tol=tol) for c in CHARTS}
        self.grad_floor = SINGULAR_GRAD_TOL * max(self.hf.coeff_scale, 1e-300)

    # -- seeding -------------------------------------------------------------

    def _chart_candidates(self, chart: str, half: float) -> np.ndarray:
        """Sign-change edge midpoints of the chart grid, linearly interpolated."""
        frame = self.frames[chart]
        g = self.grid
        xs = np.linspace(-half, half, g)
        vals = frame.F.evaluate_grid(xs, xs)
        pts = []
        # Edges along axis 0.
        s = vals[:-1, :] * vals[1:, :]
        ii, jj = np.nonzero(s < 0)
        if ii.size:
            t = vals[ii, jj] / (vals[ii, jj] - vals[ii + 1, jj])
            pts.append(np.column_stack([xs[ii] + t * (xs[ii + 1] - xs[ii]), xs[jj]]))
        # Edges along axis 1.
        s = vals[:, :-1] * vals[:, 1:]
        ii, jj = np.nonzero(s < 0)
        if ii.size:
            t = vals[ii, jj] / (vals[ii, jj] - vals[ii, jj + 1])
            pts.append(np.column_stack([xs[ii], xs[jj] + t * (xs[jj + 1] - xs[jj])]))
        if not pts:
            return np.zeros((0, 2))
        return np.vstack(pts)

    def _project_candidates(self, chart: str, cand: np.ndarray) -> np.ndarray:
        """Vectorized Newton projection of candidates onto the curve."""
        frame = self.frames[chart]
        if cand.size == 0:
            return cand
        c = cand.copy()
        cell = 2.0 * max(self.window, 2.0) / self.grid
        for _ in range(14):
            v = np.asarray(frame.F.evaluate(c[:, 0], c[:, 1]))
            g1 = np.asarray(frame.F1.evaluate(c[:, 0], c[:, 1]))
            g2 = np.asarray(frame.F2.evaluate(c[:, 0], c[:, 1]))
            den = g1 * g1 + g2 * g2
            den[den == 0] = np.inf
            step0 = np.clip(-v * g1 / den, -cell, cell)
            step1 = np.clip(-v * g2 / den, -cell, cell)
            c[:, 0] += step0
            c[:, 1] += step1
        v = np.asarray(frame.F.evaluate(c[:, 0], c[:, 1]))
        g1 = np.asarray(frame.F1.evaluate(c[:, 0], c[:, 1]))
        g2 = np.asarray(frame.F2.evaluate(c[:, 0], c[:, 1]))
        gn = np.hypot(g1, g2)
        floor = 1e-6 * frame.scale
        ok = (np.abs(v) <= self.tol * (gn + floor)) & (gn > self.grad_floor)
        return c[ok]

    def find_seeds(self) -> list:
        """Curve seeds from sign-change scans of all three chart grids."""
        lifts = []
        for chart in CHARTS:
            half = self.window if chart == "z" else 2.0
            cand = self._chart_candidates(chart, half)
            good = self._project_candidates(chart, cand)
            for row in good:
                lifts.append(lift_from_chart(chart, row))
        if not lifts:
            return []
        lifts = np.array(lifts)

        # Canonical antipodal representative, then coarse dedup.
        flip = (lifts[:, 2] < 0) | (
            (lifts[:, 2] == 0) & ((lifts[:, 1] < 0) | ((lifts[:, 1] == 0) & (lifts[:, 0] < 0)))
        )
        lifts[flip] *= -1.0
        keys = np.round(lifts / (0.5 * STEP_MAX)).astype(np.int64)
        _, idx = np.unique(keys, axis=0, return_index=True)
        lifts = lifts[np.sort(idx)]

        order = np.lexsort((lifts[:, 2], lifts[:, 1], lifts[:, 0]))
        lifts = lifts[order]
        kept: list = []
        for lift in lifts:
            if all(projective_dist(lift, k) > 0.5 * STEP_MAX for k in kept[-64:]):
                kept.append(lift)
        return [ChartPoint.from_lift(l) for l in kept]

    # -- continuation ----------------------------------------------------------

    def _correct(self, frame: _ChartFrame, c: np.ndarray, max_iter: int = 8):
        """Newton correction perpendicular to the curve; returns (c, val, grad, iters)."""
        for it in range(max_iter):
            val, grad = frame.value_grad(c[0], c[1])
            den = grad @ grad
            if den == 0.0 or not np.isfinite(den):
                return c, val, grad, max_iter + 1
            if frame.residual_ok(val, grad, slack=0.5):
                return c, val, grad, it
            c = c - val * grad / den
        val, grad = frame.value_grad(c[0], c[1])
        if frame.residual_ok(val, grad):
            return c, val, grad, max_iter
        return c, val, grad, max_iter + 1

    def _tangent(self, frame: _ChartFrame, c: np.ndarray) -> np.ndarray:
        _, grad = frame.value_grad(c[0], c[1])
        t = np.array([-grad[1], grad[0]])
        n = np.linalg.norm(t)
        if n == 0.0:
            raise TraceStallError("trace stalled: possible singular curve point")
        return t / n

    def _switch_chart(self, lift, prev_lift):
        """Pick the chart of the largest lift component and re-seat the tangent."""
        chart = best_chart(lift)
        c = chart_coords(chart, lift)
        t = self._tangent(self.frames[chart], c)
        # Sign-align the tangent with the direction of motion on the sphere.
        fwd = lift_from_chart(chart, c + 1e-4 * t)
        if np.linalg.norm(fwd - lift) > np.linalg.norm(fwd + lift):
            fwd = -fwd
        if (fwd - lift) @ (lift - prev_lift) < 0:
            t = -t
        return chart, c, t

    def trace_branch(self, seed: ChartPoint) -> CurveBranch:
        """Continuation from one seed until projective closure."""
        lift = np.asarray(seed.sphere_coords, dtype=float)
        lift = lift / np.linalg.norm(lift)
        chart = best_chart(lift)
        frame = self.frames[chart]
        c = chart_coords(chart, lift)

        c, val, grad, iters = self._correct(frame, c)
        if iters > 8 or not frame.residual_ok(val, grad):
            raise TraceSeedError("seed is not on the curve")
        g3 = self.hf.gradient(*lift)
        if np.linalg.norm(g3) <= self.grad_floor:
            raise TraceStallError("trace stalled: possible singular curve point")
        lift = lift_from_chart(chart, c)

        start_lift = lift.copy()
        lifts = [lift.copy()]
        tags = [chart]
        t = self._tangent(frame, c)
        h = 0.5 * STEP_MAX
        arc = 0.0
        closed = False
        one_sided = False

        while len(lifts) < MAX_POINTS:
            accepted = False
            while not accepted:
                pred = c + h * t
                q, val, grad, iters = self._correct(frame, pred.copy())
                drift = np.linalg.norm(q - pred)
                if iters > 8 or drift > 2.0 * h:
                    h *= 0.5
                    if h < STEP_MIN:
                        raise TraceStallError(
                            "trace stalled: possible singular curve point"
                        )
                    continue
                accepted = True

            new_lift = lift_from_chart(chart, q)
            if np.linalg.norm(new_lift - lift) > np.linalg.norm(new_lift + lift):
                new_lift = -new_lift
            arc += float(np.linalg.norm(q - c))

            t_new = self._tangent(frame, q)
            if t_new @ t < 0:
                t_new = -t_new
            c, t, lift = q, t_new, new_lift
            lifts.append(lift.copy())
            tags.append(chart)

            # Closure test against the starting point.
            if arc > 3.0 * STEP_MAX and len(lifts) > 8:
                d_same = np.linalg.norm(lift - start_lift)
                d_anti = np.linalg.norm(lift + start_lift)
                if min(d_same, d_anti) < max(h, 1.5 * STEP_MIN):
                    closed = True
                    one_sided = d_anti < d_same
                    lifts.append(-start_lift if one_sided else start_lift.copy())
                    tags.append(chart)
                    break

            if iters <= 3:
                h = min(1.4 * h, STEP_MAX)
            elif iters >= 6:
                h = max(0.5 * h, STEP_MIN)

            if np.linalg.norm(c) > CHART_SWITCH_RADIUS:
                chart, c, t = self._switch_chart(lift, lifts[-2])
                frame = self.frames[chart]

        if not closed:
            raise TraceStallError("branch did not close after maximum point budget")

        arr = np.array(lifts)
        crosses = bool(np.any(np.diff(np.signbit(arr[:, 2])) != 0))
        return CurveBranch(
            lifts=arr,
            chart_tags=tags,
            closed=closed,
            crosses_infinity=crosses,
            arc_length=arc,
            one_sided=one_sided,
        )

    def assemble(self, seeds: list) -> CurveSet:
        """Trace from every seed not already covered by a traced branch."""
        branches: list[CurveBranch] = []
        for seed in seeds:
            lift = np.asarray(seed.sphere_coords, dtype=float)
            if any(b.min_projective_distance(lift) < 1.2 * STEP_MAX for b in branches):
                continue
            branch = self.trace_branch(seed)
            if branch.one_sided:
                raise TraceStallError(
                    "branch closed onto its antipode; even-degree curves cannot "
                    "carry one-sided branches"
                )
            branches.append(branch)
        compact = not any(b.crosses_infinity for b in branches)
        return CurveSet(branches=branches, compact_in_affine_chart=compact)


def find_seeds(hd: HessianData, grid: int = 512, window: float = 8.0) -> list:
    return CurveTracer(hd, grid=grid, window=window).find_seeds()


def trace_branch(seed: ChartPoint, hd: HessianData) -> CurveBranch:
    return CurveTracer(hd).trace_branch(seed)


def assemble(seeds: list, hd: HessianData) -> CurveSet:
    return CurveTracer(hd).assemble(seeds)


def trace_curve(
    hd: HessianData, grid: int = 512, window: float = 8.0, tol: float = RESIDUAL_REL
) -> CurveSet:
    """Seed, trace, and assemble; widens the window once if expected
    infinity crossings were not reached."""
    tracer = CurveTracer(hd, grid=grid, window=window, tol=tol)
    cs = tracer.assemble(tracer.find_seeds())
    if _missing_infinity(hd, cs):
        wide = CurveTracer(hd, grid=grid, window=32.0, tol=tol)
        cs2 = wide.assemble(wide.find_seeds())
        if len(cs2.branches) > len(cs.branches):
            return cs2
    return cs


def _missing_infinity(hd: HessianData, cs: CurveSet) -> bool:
    """True if the curve must cross the line at infinity but no branch does."""
    h_inf = hd.hf.restrict_to_infinity()
    if h_inf.is_zero:
        return False
    theta = np.linspace(0.0, np.pi, 361)
    vals = np.asarray(h_inf.evaluate(np.cos(theta), np.sin(theta)))
    has_roots = bool(np.any(vals[:-1] * vals[1:] <= 0))
    return has_roots and not any(b.crosses_infinity for b in cs.branches)
