"""Figure rendering for analysis reports.

Draws the affine-chart picture: traced curve polylines, the shaded
negative region of the Hessian determinant, special parabolic points
(triangle = saddle, disc = node, ring = focus), and short ticks showing
the asymptotic kernel direction along the curve.  Rendered with matplotlib
and written to whatever format the output path implies (SVG by default in
the CLI).
"""

from __future__ import annotations

import numpy as np
from matplotlib.figure import Figure
from matplotlib.lines import Line2D

# Lift components smaller than this are treated as at-infinity when
# projecting polylines to the affine chart.
AFFINE_MARGIN = 0.02


def _affine_segments(branch, margin=AFFINE_MARGIN, span=60.0):
    """Split a projective polyline into finite affine pieces."""
    lifts = branch.lifts
    w = lifts[:, 2]
    good = np.abs(w) > margin
    xy = np.full((len(lifts), 2), np.nan)
    xy[good, 0] = lifts[good, 0] / w[good]
    xy[good, 1] = lifts[good, 1] / w[good]
    xy[np.abs(xy) > span] = np.nan
    segments = []
    start = None
    for i in range(len(xy)):
        if np.all(np.isfinite(xy[i])):
            if start is None:
                start = i
        elif start is not None:
            if i - start > 1:
                segments.append(xy[start:i])
            start = None
    if start is not None and len(xy) - start > 1:
        segments.append(xy[start:])
    return segments


def _curve_extent(cs, window):
    pts = []
    for b in cs.branches if cs else []:
        for seg in _affine_segments(b):
            pts.append(seg)
    if not pts:
        return (-window, window, -window, window)
    allp = np.vstack(pts)
    x0, x1 = float(np.min(allp[:, 0])), float(np.max(allp[:, 0]))
    y0, y1 = float(np.min(allp[:, 1])), float(np.max(allp[:, 1]))
    dx = max(x1 - x0, 1e-3)
    dy = max(y1 - y0, 1e-3)
    return (x0 - 0.2 * dx, x1 + 0.2 * dx, y0 - 0.2 * dy, y1 + 0.2 * dy)


def emit_svg(report, cs, godrons, path) -> None:
    """Render the affine-chart figure for a report to a file."""
    fig = Figure(figsize=(7.0, 6.0))
    ax = fig.add_subplot(1, 1, 1)
    window = report.options.window if report.options else 8.0
    x0, x1, y0, y1 = _curve_extent(cs, window)

    hd = report.hessian_data
    if hd is not None:
        xs = np.linspace(x0, x1, 400)
        ys = np.linspace(y0, y1, 400)
        vals = hd.hess.evaluate_grid(xs, ys).T  # contourf wants (ny, nx)
        if np.min(vals) < 0:
            ax.contourf(
                xs, ys, vals, levels=[float(np.min(vals)), 0.0],
                colors=["#9ecae1"], alpha=0.45,
            )

    drew_curve = False
    for b in cs.branches if cs else []:
        for seg in _affine_segments(b):
            ax.plot(seg[:, 0], seg[:, 1], color="#08306b", lw=1.4)
            drew_curve = True

    if hd is not None and cs is not None:
        tick = 0.02 * max(x1 - x0, y1 - y0)
        sf = hd.second_form
        for b in cs.branches:
            for seg in _affine_segments(b):
                for row in seg[:: max(len(seg) // 24, 1)]:
                    x, y = row
                    fxx = sf.a.evaluate(x, y)
                    fxy = sf.b.evaluate(x, y)
                    fyy = sf.c.evaluate(x, y)
                    v1 = np.array([fyy, -fxy])
                    v2 = np.array([-fxy, fxx])
                    v = v1 if np.linalg.norm(v1) >= np.linalg.norm(v2) else v2
                    nrm = np.linalg.norm(v)
                    if nrm == 0:
                        continue
                    v = v / nrm * tick
                    ax.plot(
                        [x - v[0], x + v[0]], [y - v[1], y + v[1]],
                        color="#e08214", lw=0.8, alpha=0.9,
                    )

    marker_style = {
        "saddle": dict(marker="^", color="#a50f15", filled=True),
        "node": dict(marker="o", color="#006d2c", filled=True),
        "focus": dict(marker="o", color="#54278f", filled=False),
    }
    seen = set()
    for g in godrons or []:
        lift = np.asarray(g.location.sphere_coords)
        if abs(lift[2]) < AFFINE_MARGIN:
            continue
        x, y = lift[0] / lift[2], lift[1] / lift[2]
        style = marker_style[g.folded_type]
        ax.scatter(
            [x], [y], marker=style["marker"], s=70,
            facecolors=style["color"] if style["filled"] else "none",
            edgecolors=style["color"], linewidths=1.5, zorder=5,
        )
        seen.add(g.folded_type)

    handles = []
    if drew_curve:
        handles.append(Line2D([], [], color="#08306b", lw=1.4, label="parabolic curve"))
    handles.append(
        Line2D([], [], color="#9ecae1", lw=6, alpha=0.45, label="hyperbolic region")
    )
    handles.append(
        Line2D([], [], color="#e08214", lw=0.8, label="asymptotic direction")
    )
    for name in ("saddle", "node", "focus"):
        if name in seen:
            style = marker_style[name]
            handles.append(
                Line2D(
                    [], [], linestyle="none", marker=style["marker"],
                    markerfacecolor=style["color"] if style["filled"] else "none",
                    markeredgecolor=style["color"],
                    label=f"folded {name} ({'-1' if name == 'saddle' else '+1'})",
                )
            )
    ax.legend(handles=handles, loc="upper right", fontsize=8, framealpha=0.9)

    ax.set_xlim(x0, x1)
    ax.set_ylim(y0, y1)
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    ax.set_title(f"degree {report.degree}: {report.expression}"[:80])
    ax.set_aspect("equal", adjustable="box")
    fig.savefig(path, metadata={"Date": None} if str(path).endswith(".svg") else None)
