"""Region topology of the projective curve complement.

Two independent paths compute the Euler characteristics of the two closed
regions the curve bounds in RP^2:

* a polyline path: oval nesting depths by ray casting in affine charts,
  with the Ragsdale relations chi(B+) = P - N and chi(B-) = N - P + 1;
* a grid path: an antipodally-identified triangulated sphere mesh labeled
  by the sign of the defining polynomial, with chi computed combinatorially
  (V - E + F) and orientability decided by orientation transport.

The two paths share no machinery and serve as mutual oracles.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .hessian import HessianData
from .tracer import CurveSet, STEP_MAX

# Minimum |lift component| for a chart to be usable by a polyline.
CHART_MARGIN = 0.05
# Ray-to-vertex distance that triggers a jittered retry.
RAY_VERTEX_TOL = 1e-7


class NestingUndecidableError(RuntimeError):
    """Ray casting kept hitting polyline vertices after all retries."""


class UnboundedComponentUndefinedError(ValueError):
    """The affine complement has no unbounded component analysis: the curve
    is not compact in the affine chart."""


@dataclass
class RegionTopology:
    """Nesting-based topology of the curve complement."""

    oval_count: int
    P: int
    N: int
    chi_b_plus: int
    chi_b_minus: int
    depths: list = field(default_factory=list)
    nesting_parent: dict = field(default_factory=dict)
    h_le0_is: str = "B-"
    h_le0_chi: int = 0
    h_le0_orientable: bool = False
    h_le0_empty: bool = False
    sign_depth0: int = -1


@dataclass
class GridTopology:
    """Sign-grid CW-complex topology, independent of nesting."""

    chi_plus: int
    chi_minus: int
    components_plus: int
    components_minus: int
    sign_b_minus: int
    level: int
    anomalies: int
    chi_by_sign: dict = field(default_factory=dict)


# --------------------------------------------------------------------------
# Polyline path: containment by ray casting
# --------------------------------------------------------------------------


def _rotations(rng: np.random.Generator, count: int):
    """Identity plus seeded random orthogonal frames."""
    yield np.eye(3)
    for _ in range(count):
        q, _ = np.linalg.qr(rng.standard_normal((3, 3)))
        yield q


def _bounded_chart(lifts_list, frame: np.ndarray):
    """An axis whose component stays away from zero for every polyline given."""
    for axis in (2, 0, 1):
        ok = all(
            np.min(np.abs(l @ frame.T[:, axis])) > CHART_MARGIN for l in lifts_list
        )
        if ok:
            return axis
    return None


def _project(lifts: np.ndarray, frame: np.ndarray, axis: int) -> np.ndarray:
    rot = lifts @ frame.T
    keep = [a for a in range(3) if a != axis]
    return rot[:, keep] / rot[:, axis][:, None]


def _point_in_polygon(pt: np.ndarray, poly: np.ndarray, rng: np.random.Generator) -> bool:
    """Even-odd containment with jittered ray retries near vertices."""
    scale = max(1.0, float(np.max(np.abs(poly))))
    for _ in range(16):
        angle = rng.uniform(0.0, 2.0 * np.pi)
        c, s = np.cos(angle), np.sin(angle)
        rot = np.array([[c, s], [-s, c]])
        q = (poly - pt) @ rot.T
        y = q[:, 1]
        if np.min(np.abs(y)) < RAY_VERTEX_TOL * scale:
            continue
        y0, y1 = y[:-1], y[1:]
        x0, x1 = q[:-1, 0], q[1:, 0]
        cross = (y0 > 0) != (y1 > 0)
        t = np.where(cross, y0 / np.where(cross, y0 - y1, 1.0), 0.0)
        xs = x0 + t * (x1 - x0)
        hits = cross & (xs > 0)
        if np.any(cross & (np.abs(xs) < RAY_VERTEX_TOL * scale)):
            continue
        return bool(np.count_nonzero(hits) % 2)
    raise NestingUndecidableError("nesting undecidable")


def _oval_contains(point_lift, oval_lifts, rng) -> bool:
    """Whether the projective point lies in the disk side of the oval."""
    for frame in _rotations(rng, 32):
        axis = _bounded_chart([oval_lifts, point_lift[None, :]], frame)
        if axis is None:
            continue
        poly = _project(oval_lifts, frame, axis)
        pt = _project(point_lift[None, :], frame, axis)[0]
        return _point_in_polygon(pt, poly, rng)
    raise NestingUndecidableError("nesting undecidable: no bounded chart found")


def nesting_forest(cs: CurveSet, hd: HessianData, seed: int = 42):
    """Depths, parent forest, and the even/odd oval counts."""
    rng = np.random.default_rng([seed, 101])
    branches = cs.branches
    m = len(branches)
    contains = np.zeros((m, m), dtype=bool)
    for j, outer in enumerate(branches):
        for i, inner in enumerate(branches):
            if i == j:
                continue
            contains[j, i] = _oval_contains(inner.lifts[0], outer.lifts, rng)
    depths = [int(np.count_nonzero(contains[:, i])) for i in range(m)]
    parent: dict = {}
    for i in range(m):
        holders = [j for j in range(m) if contains[j, i]]
        parent[i] = max(holders, key=lambda j: depths[j]) if holders else -1
    P = sum(1 for d in depths if d % 2 == 0)
    N = len(depths) - P
    return depths, parent, P, N


def _depth_of_point(lift, cs: CurveSet, rng) -> int:
    return sum(1 for b in cs.branches if _oval_contains(lift, b.lifts, rng))


def identify_h_le0(
    cs: CurveSet, hd: HessianData, depths, parent, P, N, seed: int = 42
) -> RegionTopology:
    """Decide which closed region carries the non-positive values.

    Samples the defining polynomial at a point of nesting depth zero; the
    depth-zero region belongs to the non-orientable side (it contains a
    projective line), so the sign there fixes the assignment.
    """
    rng = np.random.default_rng([seed, 202])
    margin = 2.0 * STEP_MAX
    sign0 = 0
    for _ in range(400):
        p = rng.standard_normal(3)
        p /= np.linalg.norm(p)
        if cs.branches and min(b.min_projective_distance(p) for b in cs.branches) < margin:
            continue
        if _depth_of_point(p, cs, rng) != 0:
            continue
        val = hd.hf.evaluate(*p)
        if abs(val) < 1e-12 * max(hd.hf.coeff_scale, 1e-300):
            continue
        sign0 = -1 if val < 0 else 1
        break
    if sign0 == 0:
        raise NestingUndecidableError("no usable depth-zero sample point")

    chi_plus = P - N
    chi_minus = N - P + 1
    if sign0 < 0:
        h_is, h_chi, h_orient = "B-", chi_minus, False
    else:
        h_is, h_chi, h_orient = "B+", chi_plus, True
    empty = (not cs.branches) and sign0 > 0
    return RegionTopology(
        oval_count=len(cs.branches),
        P=P,
        N=N,
        chi_b_plus=chi_plus,
        chi_b_minus=chi_minus,
        depths=list(depths),
        nesting_parent=dict(parent),
        h_le0_is=h_is,
        h_le0_chi=h_chi,
        h_le0_orientable=h_orient,
        h_le0_empty=empty,
        sign_depth0=sign0,
    )


def region_topology(cs: CurveSet, hd: HessianData, seed: int = 42) -> RegionTopology:
    depths, parent, P, N = nesting_forest(cs, hd, seed=seed)
    return identify_h_le0(cs, hd, depths, parent, P, N, seed=seed)


def unbounded_component(cs: CurveSet, hd: HessianData, rt: RegionTopology):
    """Boundary count and Euler number of the unbounded affine complement
    component; defined only for affine-compact curves."""
    if not cs.compact_in_affine_chart:
        raise UnboundedComponentUndefinedError("C_u undefined: curve crosses infinity")
    n_u = sum(1 for d in rt.depths if d == 0)
    return n_u, 1 - n_u


# --------------------------------------------------------------------------
# Grid path: antipodally identified sphere triangulation
# --------------------------------------------------------------------------

_OCTA_VERTS = np.array(
    [
        [1.0, 0.0, 0.0],
        [-1.0, 0.0, 0.0],
        [0.0, 1.0, 0.0],
        [0.0, -1.0, 0.0],
        [0.0, 0.0, 1.0],
        [0.0, 0.0, -1.0],
    ]
)
_OCTA_FACES = np.array(
    [
        [0, 2, 4],
        [2, 1, 4],
        [1, 3, 4],
        [3, 0, 4],
        [2, 0, 5],
        [1, 2, 5],
        [3, 1, 5],
        [0, 3, 5],
    ]
)


def _subdivide(verts: np.ndarray, faces: np.ndarray):
    """One midpoint subdivision; antipodal symmetry is preserved exactly."""
    edges = np.vstack([faces[:, [0, 1]], faces[:, [1, 2]], faces[:, [2, 0]]])
    edges = np.sort(edges, axis=1)
    uniq, inverse = np.unique(edges, axis=0, return_inverse=True)
    mids = verts[uniq[:, 0]] + verts[uniq[:, 1]]
    mids /= np.linalg.norm(mids, axis=1)[:, None]
    mid_ids = len(verts) + np.arange(len(uniq))
    new_verts = np.vstack([verts, mids])
    nf = len(faces)
    m01 = mid_ids[inverse[:nf]]
    m12 = mid_ids[inverse[nf : 2 * nf]]
    m20 = mid_ids[inverse[2 * nf :]]
    new_faces = np.vstack(
        [
            np.column_stack([faces[:, 0], m01, m20]),
            np.column_stack([faces[:, 1], m12, m01]),
            np.column_stack([faces[:, 2], m20, m12]),
            np.column_stack([m01, m12, m20]),
        ]
    )
    return new_verts, new_faces


def _canonicalize(verts: np.ndarray) -> np.ndarray:
    """Pick one representative per antipodal pair (exact sign convention)."""
    out = verts.copy()
    flip = (
        (out[:, 2] < 0)
        | ((out[:, 2] == 0) & (out[:, 1] < 0))
        | ((out[:, 2] == 0) & (out[:, 1] == 0) & (out[:, 0] < 0))
    )
    out[flip] *= -1.0
    return out


def _level_for_grid(grid: int) -> int:
    # 8 * 4**level sphere triangles ~ grid * grid cells.
    return int(np.clip(round(np.log2(max(grid, 16) / (2.0 * np.sqrt(2.0)))), 3, 9))


def _rotation_for_attempt(attempt: int) -> np.ndarray:
    if attempt == 0:
        return np.eye(3)
    rng = np.random.default_rng([9000, attempt])
    q, _ = np.linalg.qr(rng.standard_normal((3, 3)))
    return q


def sphere_grid_fallback(hd: HessianData, grid: int = 512) -> GridTopology:
    """Label an antipodally identified triangulated sphere by sign.

    Euler characteristics are V - E + F over the closed cells of each sign
    class; orientability is decided by orientation transport across shared
    edges (adjacency through the antipodal identification reverses it).
    Straddle anomalies escalate the subdivision level, up to three times.
    """
    base = _level_for_grid(grid)
    hf = hd.hf
    last = None
    for attempt in range(4):
        level = min(base + attempt, 10)
        rot = _rotation_for_attempt(attempt)
        topo = _grid_once(hf, level, rot)
        last = topo
        if topo.anomalies == 0:
            return topo
    return last


def _grid_once(hf, level: int, rot: np.ndarray) -> GridTopology:
    verts, faces = _OCTA_VERTS.copy(), _OCTA_FACES.copy()
    for _ in range(level):
        verts, faces = _subdivide(verts, faces)

    # Quotient vertices via exact antipodal matching.
    canon = _canonicalize(verts)
    uniq_v, qid = np.unique(canon, axis=0, return_inverse=True)

    # Quotient faces: antipodal sphere faces share the same vertex id triple.
    tri_sorted = np.sort(qid[faces], axis=1)
    uniq_f, first_idx, face_q = np.unique(
        tri_sorted, axis=0, return_index=True, return_inverse=True
    )
    rep_face = faces[first_idx]  # sphere representative of each quotient face

    # Quotient edges with their two incident quotient faces.
    nqf = len(uniq_f)
    fe = np.vstack([uniq_f[:, [0, 1]], uniq_f[:, [1, 2]], uniq_f[:, [0, 2]]])
    owner = np.tile(np.arange(nqf), 3)
    uniq_e, edge_inv = np.unique(fe, axis=0, return_inverse=True)
    order = np.argsort(edge_inv, kind="stable")
    pairs = owner[order].reshape(-1, 2)  # each quotient edge has 2 faces

    # Signs: evaluate at rotated sample points.
    pts_v = uniq_v @ rot.T
    vals_v = np.asarray(hf.evaluate(pts_v[:, 0], pts_v[:, 1], pts_v[:, 2]))
    cent = verts[rep_face].mean(axis=1)
    cent /= np.linalg.norm(cent, axis=1)[:, None]
    pts_c = cent @ rot.T
    vals_c = np.asarray(hf.evaluate(pts_c[:, 0], pts_c[:, 1], pts_c[:, 2]))
    label = np.where(vals_c < 0, -1, 1)

    vsign = np.where(vals_v < 0, -1, 1)

    # Anomaly a: all three vertex signs equal but centroid disagrees.
    fsigns = vsign[uniq_f]
    uniform = (fsigns[:, 0] == fsigns[:, 1]) & (fsigns[:, 1] == fsigns[:, 2])
    anom_face = int(np.count_nonzero(uniform & (fsigns[:, 0] != label)))

    # Anomaly b: edge endpoints agree but the edge midpoint disagrees.
    # Midpoints come from genuine sphere edges (canonical representatives of
    # a quotient edge's endpoints may lie in opposite hemispheres).
    s_edges = np.unique(
        np.sort(
            np.vstack([faces[:, [0, 1]], faces[:, [1, 2]], faces[:, [2, 0]]]), axis=1
        ),
        axis=0,
    )
    se_mid = verts[s_edges[:, 0]] + verts[s_edges[:, 1]]
    se_mid /= np.linalg.norm(se_mid, axis=1)[:, None]
    se_q = np.sort(qid[s_edges], axis=1)
    nv = len(uniq_v)
    se_key = se_q[:, 0].astype(np.int64) * nv + se_q[:, 1]
    ue_key = uniq_e[:, 0].astype(np.int64) * nv + uniq_e[:, 1]
    rep_pos = np.searchsorted(ue_key, se_key)
    first_rep = np.empty(len(uniq_e), dtype=np.int64)
    first_rep[rep_pos] = np.arange(len(s_edges))
    emid = se_mid[first_rep]
    pts_e = emid @ rot.T
    vals_e = np.asarray(hf.evaluate(pts_e[:, 0], pts_e[:, 1], pts_e[:, 2]))
    esign = np.where(vals_e < 0, -1, 1)
    same_ends = vsign[uniq_e[:, 0]] == vsign[uniq_e[:, 1]]
    anom_edge = int(np.count_nonzero(same_ends & (esign != vsign[uniq_e[:, 0]])))

    # Adjacency parity: 0 when the sphere representatives share a sphere
    # edge directly, 1 when adjacency passes through the identification.
    fa, fb = pairs[:, 0], pairs[:, 1]
    va, vb = rep_face[fa], rep_face[fb]
    shared = (va[:, :, None] == vb[:, None, :]).any(axis=2).sum(axis=1)
    parity = (shared < 2).astype(np.int64)

    result = {}
    chi_by_sign = {}
    for s in (-1, 1):
        fmask = label == s
        fcount = int(np.count_nonzero(fmask))
        if fcount == 0:
            result[s] = dict(chi=0, components=0, orientable=True)
            chi_by_sign[s] = 0
            continue
        vset = np.unique(uniq_f[fmask])
        emask = fmask[fa] | fmask[fb]
        chi = int(len(vset)) - int(np.count_nonzero(emask)) + fcount
        chi_by_sign[s] = chi

        inner = fmask[fa] & fmask[fb]
        ia, ib, ip = fa[inner], fb[inner], parity[inner]
        # Connectivity of the sign class.
        g = coo_matrix(
            (np.ones(len(ia)), (ia, ib)), shape=(len(label), len(label))
        )
        ncomp_all, comp = connected_components(g + g.T, directed=False)
        comp_ids = np.unique(comp[fmask])
        components = len(comp_ids)
        # Orientation double cover: orientable components split in two.
        nf = len(label)
        rows = np.concatenate([ia + ip * nf, ia + (1 - ip) * nf])
        cols = np.concatenate([ib, ib + nf])
        g2 = coo_matrix(
            (np.ones(len(rows)), (rows, cols)), shape=(2 * nf, 2 * nf)
        )
        _, comp2 = connected_components(g2 + g2.T, directed=False)
        orientable = True
        for cid in comp_ids:
            f0 = int(np.nonzero(comp == cid)[0][0])
            if comp2[f0] == comp2[f0 + nf]:
                orientable = False
                break
        result[s] = dict(chi=chi, components=components, orientable=orientable)

    nonor = [s for s in (-1, 1) if result[s]["components"] and not result[s]["orientable"]]
    anomalies = anom_face + anom_edge
    if chi_by_sign[-1] + chi_by_sign[1] != 1:
        anomalies += 1
    if len(nonor) != 1:
        anomalies += 1
        sign_b_minus = -1
    else:
        sign_b_minus = nonor[0]

    plus = -sign_b_minus
    return GridTopology(
        chi_plus=result[plus]["chi"],
        chi_minus=result[sign_b_minus]["chi"],
        components_plus=result[plus]["components"],
        components_minus=result[sign_b_minus]["components"],
        sign_b_minus=sign_b_minus,
        level=level,
        anomalies=anomalies,
        chi_by_sign=chi_by_sign,
    )
