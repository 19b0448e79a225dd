"""Pipeline orchestration, audits, and the JSON report.

``analyze`` runs the full pipeline (top form, Hessian closure, tracing,
topology, special points, sphere extension) with structured failure
records, assembles every audit exactly once per run, and retains partial
results when a non-generic input forces a bailout.  ``emit_json`` writes a
deterministic report: stable key order, floats at 17 significant digits.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field

import numpy as np

from .polynomials import BivariatePolynomial
from .top_form import RootClusterError, analyze_top_form
from .hessian import (
    GenericityScreen,
    HessianData,
    HessianIdenticallyZeroError,
    TransversalityUndecidedError,
    build_hessian,
    certify_smoothness,
    check_transversality_at_infinity,
)
from .tracer import TraceStallError, trace_curve
from .topology import (
    GridTopology,
    NestingUndecidableError,
    RegionTopology,
    region_topology,
    sphere_grid_fallback,
    unbounded_component,
)
from .special_points import (
    DegenerateFoldError,
    DegenerateTangencyError,
    classify_godron,
    derivative_table,
    detect_godrons,
    winding_oracle,
)
from .sphere_field import (
    AuditRecord,
    FormConsistencyError,
    IndexUndecidableError,
    InconsistentRootError,
    build_sphere_form,
    global_index_audit,
    measure_infinity_indices,
    singular_points_at_infinity,
)

SCHEMA_VERSION = "hessian-atlas/1"

AUDIT_NAMES = (
    "infinity_index_sum",
    "index_sum_bounds",
    "index_euler_identity",
    "saddle_majority",
    "single_positive_fold_exclusion",
    "harnack_bound",
    "petrowsky_inequality",
    "euler_partition",
    "topology_oracle_agreement",
    "godron_count_bounds",
    "index_quantization",
    "fold_classifier_agreement",
)


@dataclass(frozen=True)
class AnalysisOptions:
    grid: int = 512
    window: float = 8.0
    tol: float = 1e-9
    seed: int = 42
    strict: bool = False
    measure_timing: bool = True
    oracle_checks: bool = True


@dataclass
class AnalysisReport:
    """Complete invariant inventory with audit outcomes.

    Holds live objects (curve set, godrons) for plotting alongside the
    serializable summary produced by :meth:`to_dict`.
    """

    expression: str
    canonical: str
    degree: int
    options: AnalysisOptions
    status: str = "ok"  # ok | short_circuit | non_generic | failed
    failure: dict | None = None
    notes: list = field(default_factory=list)
    top_form: dict | None = None
    transverse_at_infinity: bool | None = None
    genericity: dict | None = None
    curve_summary: dict | None = None
    topology_summary: dict | None = None
    godron_summary: list = field(default_factory=list)
    infinity_summary: list = field(default_factory=list)
    audits: list = field(default_factory=list)
    timing: dict = field(default_factory=dict)

    # Live objects, not serialized.
    poly: BivariatePolynomial | None = None
    hessian_data: HessianData | None = None
    curve_set: object | None = None
    region: RegionTopology | None = None
    grid_topology: GridTopology | None = None
    godrons: list = field(default_factory=list)
    infinity_points: list = field(default_factory=list)

    @property
    def p_minus(self) -> int:
        return sum(1 for g in self.godrons if g.index == -1)

    @property
    def p_plus(self) -> int:
        return sum(1 for g in self.godrons if g.index == +1)

    def audit(self, name: str) -> AuditRecord:
        for rec in self.audits:
            if rec.name == name:
                return rec
        raise KeyError(name)

    @property
    def self_consistent(self) -> bool:
        return all(rec.status != "fail" for rec in self.audits)

    def to_dict(self) -> dict:
        out = {
            "schema": SCHEMA_VERSION,
            "input": {
                "expression": self.expression,
                "canonical": self.canonical,
                "coefficients": [
                    [int(i), int(j), float(c)]
                    for (i, j), c in sorted(self.poly.coeffs.items())
                ]
                if self.poly is not None
                else [],
            },
            "degree": self.degree,
            "status": self.status,
            "failure": self.failure,
            "options": {
                "grid": self.options.grid,
                "window": self.options.window,
                "tol": self.options.tol,
                "seed": self.options.seed,
            },
            "top_form": self.top_form,
            "transverse_at_infinity": self.transverse_at_infinity,
            "genericity": self.genericity,
            "curve": self.curve_summary,
            "topology": self.topology_summary,
            "godrons": self.godron_summary,
            "p_minus": self.p_minus,
            "p_plus": self.p_plus,
            "infinity_points": self.infinity_summary,
            "audits": [
                {"name": a.name, "status": a.status, "details": a.details}
                for a in self.audits
            ],
            "notes": list(self.notes),
            "timing": self.timing,
        }
        return out


def _skip_all(report: AnalysisReport, reason: str, except_names=()) -> None:
    present = {a.name for a in report.audits}
    for name in AUDIT_NAMES:
        if name not in present and name not in except_names:
            report.audits.append(AuditRecord.skipped(name, reason))


def analyze(
    f: BivariatePolynomial,
    options: AnalysisOptions | None = None,
    expression: str | None = None,
) -> AnalysisReport:
    """Run the full pipeline on a polynomial, never raising on bad inputs."""
    options = options or AnalysisOptions()
    t0 = time.perf_counter()
    stage_times: dict = {}

    report = AnalysisReport(
        expression=expression if expression is not None else f.to_string(),
        canonical=f.to_string(),
        degree=f.degree,
        options=options,
        poly=f,
    )

    def clock(stage, start):
        if options.measure_timing:
            stage_times[stage] = round(time.perf_counter() - start, 6)
        else:
            stage_times[stage] = 0.0

    if f.is_zero:
        report.status = "failed"
        report.failure = {"stage": "input", "error": "zero polynomial"}
        _skip_all(report, "analysis failed: zero polynomial")
        report.timing = _final_timing(stage_times, t0, options)
        return report

    n = f.degree
    if n <= 2:
        report.status = "short_circuit"
        report.notes.append(
            "degree <= 2: the parabolic locus is everything or nothing; "
            "no special parabolic points exist"
        )
        _skip_all(report, "degree <= 2")
        report.timing = _final_timing(stage_times, t0, options)
        return report

    # -- top form -----------------------------------------------------------
    ts = time.perf_counter()
    try:
        tfa = analyze_top_form(f.leading_form())
    except RootClusterError as exc:
        report.status = "non_generic"
        report.failure = {"stage": "top_form", "error": str(exc)}
        _skip_all(report, "top-form root cluster")
        report.timing = _final_timing(stage_times, t0, options)
        return report
    clock("top_form", ts)
    report.top_form = {
        "k": tfa.k,
        "factor_directions": [[float(u), float(v)] for (u, v) in tfa.factor_directions],
        "all_real_factors_simple": tfa.all_real_factors_simple,
        "classification": tfa.classification,
    }

    # -- Hessian closure ------------------------------------------------------
    ts = time.perf_counter()
    try:
        hd = build_hessian(f)
    except HessianIdenticallyZeroError as exc:
        report.status = "failed"
        report.failure = {"stage": "hessian", "error": str(exc)}
        _skip_all(report, "Hessian identically zero")
        report.timing = _final_timing(stage_times, t0, options)
        return report
    clock("hessian", ts)
    report.hessian_data = hd

    # -- tracing --------------------------------------------------------------
    ts = time.perf_counter()
    try:
        cs = trace_curve(hd, grid=options.grid, window=options.window, tol=options.tol)
    except TraceStallError as exc:
        hd.smooth = False
        report.status = "non_generic"
        report.failure = {"stage": "tracer", "error": str(exc)}
        report.genericity = GenericityScreen(False, True, tfa.all_real_factors_simple).to_dict()
        _skip_all(report, "curve tracing stalled (likely singular curve)")
        report.timing = _final_timing(stage_times, t0, options)
        return report
    clock("tracer", ts)
    report.curve_set = cs

    ts = time.perf_counter()
    sample = cs.all_lifts()
    if len(sample) > 4000:
        sample = sample[:: len(sample) // 4000 + 1]
    certify_smoothness(hd, sample)
    clock("smoothness", ts)

    report.curve_summary = {
        "oval_count": len(cs.branches),
        "compact_in_affine_chart": cs.compact_in_affine_chart,
        "branches": [
            {
                "points": len(b.lifts),
                "closed": b.closed,
                "crosses_infinity": b.crosses_infinity,
                "arc_length": float(b.arc_length),
            }
            for b in cs.branches
        ],
    }

    if not hd.smooth:
        report.status = "non_generic"
        report.failure = {"stage": "smoothness", "error": "curve failed the smoothness screen"}
        report.genericity = GenericityScreen(False, True, tfa.all_real_factors_simple).to_dict()
        _skip_all(report, "curve not certifiably smooth")
        report.timing = _final_timing(stage_times, t0, options)
        return report

    # -- transversality ---------------------------------------------------------
    ts = time.perf_counter()
    try:
        transverse = check_transversality_at_infinity(hd, tfa)
    except TransversalityUndecidedError:
        transverse = None
        report.notes.append("no transversality certificate: curve top form vanishes")
    report.transverse_at_infinity = transverse
    clock("transversality", ts)

    # -- topology ------------------------------------------------------------
    ts = time.perf_counter()
    try:
        rt = region_topology(cs, hd, seed=options.seed)
    except NestingUndecidableError as exc:
        report.status = "non_generic"
        report.failure = {"stage": "topology", "error": str(exc)}
        _skip_all(report, "nesting undecidable")
        report.timing = _final_timing(stage_times, t0, options)
        return report
    report.region = rt
    grid_topo = sphere_grid_fallback(hd, grid=options.grid)
    report.grid_topology = grid_topo
    clock("topology", ts)

    try:
        n_u, chi_u = unbounded_component(cs, hd, rt)
        unbounded = {"boundary_ovals": n_u, "chi": chi_u}
    except Exception:
        unbounded = None

    report.topology_summary = {
        "P": rt.P,
        "N": rt.N,
        "chi_b_plus": rt.chi_b_plus,
        "chi_b_minus": rt.chi_b_minus,
        "depths": [int(d) for d in rt.depths],
        "nesting_parent": {str(k): int(v) for k, v in sorted(rt.nesting_parent.items())},
        "h_le0": {
            "region": rt.h_le0_is,
            "chi": rt.h_le0_chi,
            "orientable": rt.h_le0_orientable,
            "empty": rt.h_le0_empty,
        },
        "sign_depth0": rt.sign_depth0,
        "unbounded_component": unbounded,
        "grid": {
            "chi_b_plus": grid_topo.chi_plus,
            "chi_b_minus": grid_topo.chi_minus,
            "components_b_plus": grid_topo.components_plus,
            "components_b_minus": grid_topo.components_minus,
            "sign_b_minus": grid_topo.sign_b_minus,
            "level": grid_topo.level,
            "anomalies": grid_topo.anomalies,
        },
    }
    if rt.h_le0_empty:
        report.notes.append("no hyperbolic points: the non-positive set is empty")

    # -- special parabolic points ------------------------------------------------
    ts = time.perf_counter()
    folds_ok = True
    godrons = []
    try:
        candidates = detect_godrons(cs, hd)
        table = derivative_table(f)
        for cand in candidates:
            try:
                godrons.append(classify_godron(cand, hd, table))
            except DegenerateFoldError as exc:
                folds_ok = False
                report.notes.append(f"degenerate fold at {cand.point.coords}: {exc}")
    except DegenerateTangencyError as exc:
        folds_ok = False
        report.notes.append(str(exc))
    report.godrons = godrons
    clock("special_points", ts)

    report.godron_summary = [
        {
            "chart": g.location.chart,
            "coords": [float(c) for c in g.location.coords],
            "sphere": [float(c) for c in g.location.sphere_coords],
            "direction": [float(c) for c in g.direction.direction],
            "folded_type": g.folded_type,
            "index": g.index,
            "lie_cartan_det": g.lie_cartan_det,
            "slope_chart": g.slope_chart,
        }
        for g in godrons
    ]

    screen = GenericityScreen(
        curve_smooth=hd.smooth,
        folds_nondegenerate=folds_ok,
        top_factors_simple=tfa.all_real_factors_simple,
    )
    report.genericity = screen.to_dict()
    if not screen.passed:
        report.status = "non_generic"
        report.notes.append("non-generic: theorem audits disabled")

    # -- sphere extension ----------------------------------------------------------
    ts = time.perf_counter()
    inf_points = []
    index_failure = None
    try:
        sf = build_sphere_form(f)
        inf_points = singular_points_at_infinity(sf, tfa, hd)
        if tfa.all_real_factors_simple:
            measure_infinity_indices(sf, hd, inf_points)
        else:
            report.notes.append(
                "repeated real factors in the top form: infinity indices not measured"
            )
    except (FormConsistencyError, InconsistentRootError, IndexUndecidableError) as exc:
        index_failure = str(exc)
        report.notes.append(f"infinity index measurement failed: {exc}")
    report.infinity_points = inf_points
    clock("sphere_extension", ts)

    report.infinity_summary = [
        {
            "direction": [float(p.direction[0]), float(p.direction[1])],
            "hf_sign_nearby": p.hf_sign_nearby,
            "index_raw": p.index_raw,
            "index": p.index,
            "index_residual": p.index_residual,
        }
        for p in inf_points
    ]

    # -- audits -----------------------------------------------------------------
    ts = time.perf_counter()
    _assemble_audits(report, tfa, hd, cs, rt, grid_topo, inf_points, index_failure, options)
    clock("audits", ts)

    report.timing = _final_timing(stage_times, t0, options)
    return report


def _assemble_audits(report, tfa, hd, cs, rt, grid_topo, inf_points, index_failure, options):
    n = report.degree
    k = tfa.k
    branches = cs.branches
    godrons = report.godrons
    p_minus, p_plus = report.p_minus, report.p_plus

    screen_passed = report.genericity["passed"] if report.genericity else False
    measured = [p for p in inf_points if p.index is not None]

    # Global index identities need the genericity screen and transversality.
    if screen_passed and report.transverse_at_infinity and index_failure is None and (
        len(measured) == len(inf_points)
    ):
        report.audits.extend(
            global_index_audit(
                inf_points,
                godrons,
                rt.h_le0_chi,
                tfa,
                n,
                curve_connected=len(branches) == 1,
                transverse=bool(report.transverse_at_infinity),
                h_le0_orientable=rt.h_le0_orientable,
            )
        )
    else:
        if not screen_passed:
            reason = "genericity screen failed"
        elif not report.transverse_at_infinity:
            reason = "curve not transverse to the line at infinity"
        else:
            reason = index_failure or "infinity indices unavailable"
        for name in (
            "infinity_index_sum",
            "index_sum_bounds",
            "index_euler_identity",
            "saddle_majority",
            "single_positive_fold_exclusion",
        ):
            report.audits.append(AuditRecord.skipped(name, reason))

    # Oval count bounds.
    d = 2 * n - 4
    general_bound = (d - 1) * (d + 2) // 2 + 1
    details = {"ovals": len(branches), "degree": d, "general_bound": general_bound}
    ok = len(branches) <= general_bound
    if cs.compact_in_affine_chart:
        compact_bound = (2 * n - 5) * (n - 3) + 1
        details["compact_bound"] = compact_bound
        ok = ok and len(branches) <= max(compact_bound, 1)
    else:
        bounded = sum(1 for b in branches if not b.crosses_infinity)
        crossings = sum(
            int(np.count_nonzero(np.diff(np.signbit(b.lifts[:, 2])))) for b in branches
        )
        details["bounded_ovals"] = bounded
        details["bounded_bound"] = (2 * n - 5) * (n - 3)
        details["unbounded_components"] = crossings
        details["unbounded_bound"] = d
        ok = ok and bounded <= (2 * n - 5) * (n - 3) and crossings <= d
    report.audits.append(
        AuditRecord(name="harnack_bound", status="pass" if ok else "fail", details=details)
    )

    # Even/odd oval inequality for even-degree curves.
    khat = n - 2
    lo = -1.5 * khat * (khat - 1)
    hi = 1.5 * khat * (khat - 1) + 1
    pn = rt.P - rt.N
    report.audits.append(
        AuditRecord(
            name="petrowsky_inequality",
            status="pass" if lo <= pn <= hi else "fail",
            details={"P_minus_N": pn, "lower": lo, "upper": hi},
        )
    )

    report.audits.append(
        AuditRecord(
            name="euler_partition",
            status="pass"
            if rt.chi_b_plus + rt.chi_b_minus == 1
            and grid_topo.chi_plus + grid_topo.chi_minus == 1
            else "fail",
            details={
                "nesting_sum": rt.chi_b_plus + rt.chi_b_minus,
                "grid_sum": grid_topo.chi_plus + grid_topo.chi_minus,
            },
        )
    )

    agree = (
        rt.chi_b_plus == grid_topo.chi_plus
        and rt.chi_b_minus == grid_topo.chi_minus
        and rt.sign_depth0 == grid_topo.sign_b_minus
    )
    report.audits.append(
        AuditRecord(
            name="topology_oracle_agreement",
            status="pass" if agree else "fail",
            details={
                "nesting": [rt.chi_b_plus, rt.chi_b_minus, rt.sign_depth0],
                "grid": [grid_topo.chi_plus, grid_topo.chi_minus, grid_topo.sign_b_minus],
            },
        )
    )

    base = (n - 2) * (8 * n - 21)
    bound_minus = (base + k) / 2
    bound_plus = 1 + (base - k) / 2
    bound_total = (n - 2) * (5 * n - 12)
    ok = (
        p_minus <= bound_minus
        and p_plus <= bound_plus
        and (p_minus + p_plus) <= bound_total
    )
    report.audits.append(
        AuditRecord(
            name="godron_count_bounds",
            status="pass" if ok else "fail",
            details={
                "p_minus": p_minus,
                "bound_minus": bound_minus,
                "p_plus": p_plus,
                "bound_plus": bound_plus,
                "total_bound": bound_total,
            },
        )
    )

    if measured:
        worst = max(p.index_residual for p in measured)
        report.audits.append(
            AuditRecord(
                name="index_quantization",
                status="pass" if worst < 0.05 else "fail",
                details={"worst_residual": worst, "count": len(measured)},
            )
        )
    else:
        report.audits.append(
            AuditRecord.skipped("index_quantization", "no measured infinity indices")
        )

    if godrons and options.oracle_checks:
        table = derivative_table(report.poly)
        mismatches = []
        for g, summary in zip(godrons, report.godron_summary):
            cand_lift = np.asarray(g.location.sphere_coords)
            from .special_points import GodronCandidate

            cand = GodronCandidate(
                lift=cand_lift, direction=g.direction.direction, tau_residual=0.0
            )
            try:
                w = winding_oracle(cand, report.hessian_data, table)
            except DegenerateFoldError:
                mismatches.append({"coords": summary["coords"], "oracle": "failed"})
                continue
            if w != g.index:
                mismatches.append(
                    {"coords": summary["coords"], "classifier": g.index, "oracle": w}
                )
        report.audits.append(
            AuditRecord(
                name="fold_classifier_agreement",
                status="pass" if not mismatches else "fail",
                details={"count": len(godrons), "mismatches": mismatches},
            )
        )
    elif godrons:
        report.audits.append(
            AuditRecord.skipped("fold_classifier_agreement", "oracle checks disabled")
        )
    else:
        report.audits.append(
            AuditRecord(
                name="fold_classifier_agreement",
                status="pass",
                details={"count": 0, "note": "no special parabolic points"},
            )
        )


def _final_timing(stage_times: dict, t0: float, options: AnalysisOptions) -> dict:
    total = time.perf_counter() - t0 if options.measure_timing else 0.0
    out = {"total_seconds": round(total, 6)}
    out.update(stage_times)
    return out


# --------------------------------------------------------------------------
# Deterministic JSON emission
# --------------------------------------------------------------------------


def _check_finite(obj, path="$"):
    if isinstance(obj, float):
        if not np.isfinite(obj):
            raise ValueError(f"non-finite value at {path}")
    elif isinstance(obj, dict):
        for k, v in obj.items():
            _check_finite(v, f"{path}.{k}")
    elif isinstance(obj, (list, tuple)):
        for i, v in enumerate(obj):
            _check_finite(v, f"{path}[{i}]")


def _format_json(obj, indent=0) -> str:
    pad = "  " * indent
    if obj is None:
        return "null"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return format(float(obj), ".17g")
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        inner = ",\n".join(
            "  " * (indent + 1) + _format_json(v, indent + 1) for v in obj
        )
        return "[\n" + inner + "\n" + pad + "]"
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        inner = ",\n".join(
            "  " * (indent + 1) + json.dumps(str(k)) + ": " + _format_json(v, indent + 1)
            for k, v in obj.items()
        )
        return "{\n" + inner + "\n" + pad + "}"
    raise TypeError(f"cannot serialize {type(obj)!r}")


def report_to_json(report: AnalysisReport) -> str:
    data = report.to_dict()
    _check_finite(data)
    return _format_json(data) + "\n"


def emit_json(report: AnalysisReport, path: str) -> str:
    """Write the report; returns the emitted text."""
    text = report_to_json(report)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)
    return text
