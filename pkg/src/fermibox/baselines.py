"""Committed reference distances for the scaling studies.

The limit theorems come without convergence rates, so regression protection
is empirical: the values below were measured once (the initial convergence
run of :mod:`fermibox.analysis` on this code base) and then frozen.  A
verification run passes when its distances stay within ``TOL_FACTOR`` of
the frozen ones on the shared sizes and the sequence still has a monotone
tail above the noise floor.

Study keys: boundary presets are written ``label`` or ``label:param`` with
the parameter in full float repr; edge studies append ``@edge->LimitTag``;
the thermal study is keyed by its scaled temperature.
"""

from __future__ import annotations

from .analysis import ScalingReport, monotone_tail_ok

__all__ = ["BASELINES", "TOL_FACTOR", "NOISE_FLOOR", "study_key", "edge_key",
           "compare_to_baseline"]

# Distances below this are quadrature and rounding noise; the thermal study
# hits it almost immediately (its mode sum is the Riemann discretization of
# the limit integral, and the aliasing error decays superexponentially).
NOISE_FLOOR = 1e-12

# Allowed slack of a fresh run over the frozen values.
TOL_FACTOR = 1.5

BASELINES = {
    "bulk": {
        "periodic": {
            "sizes": (25, 50, 100, 200),
            "sup": (0.002999704475377, 0.021470825182566, 0.010366814904407,
                    0.005091648254854),
        },
        "dirichlet": {
            "sizes": (25, 50, 100, 200),
            "sup": (0.04, 0.020000000000002, 0.010000000000001,
                    0.005000000000008),
        },
        "robin:1.5707963267948966": {
            "sizes": (25, 50, 100, 200),
            "sup": (0.03795752991231, 0.019488805890736, 0.009871925109142,
                    0.004968042652692),
        },
        "delta:1.0": {
            "sizes": (25, 50, 100, 200),
            "sup": (0.003058799173851, 0.020898944186808, 0.010227250540938,
                    0.00505714607195),
        },
    },
    "edge": {
        "dirichlet@0->BesselMinus": {
            "sizes": (25, 50, 100, 200),
            "sup": (0.039861342312715, 0.019941261434693, 0.009973277314249,
                    0.004987300245583),
        },
        "neumann@0->BesselPlus": {
            "sizes": (25, 50, 100, 200),
            "sup": (0.04, 0.02, 0.01, 0.005),
        },
        "robin:1.5707963267948966@0->RobinEdge": {
            "sizes": (25, 50, 100, 200),
            "sup": (0.024129324153895, 0.012107642964155, 0.006064907218542,
                    0.003035236031392),
        },
        "delta:1.0@0->DeltaEdge": {
            "sizes": (25, 50, 100, 200),
            "sup": (0.003892548587158, 0.019698336653115, 0.009855866816374,
                    0.00493220020083),
        },
    },
    "finite_t": {
        "c=1.0": {
            "sizes": (25, 50, 100),
            "sup": (1e-15, 1e-15, 2e-15),
        },
    },
}


def study_key(label: str, params=()) -> str:
    """Canonical baseline key for a preset boundary."""
    if not params:
        return label
    return label + ":" + ",".join(repr(float(p)) for p in params)


def edge_key(label: str, params, x0: float, limit_tag: str) -> str:
    """Canonical baseline key for an edge study."""
    side = "0" if float(x0) == 0.0 else "2pi"
    return f"{study_key(label, params)}@{side}->{limit_tag}"


def compare_to_baseline(kind: str, key: str, report: ScalingReport) -> dict:
    """Judge a fresh study run against the committed values.

    Returns a dict with ``passed`` plus the per-size comparison; a run with
    no frozen counterpart or no overlapping sizes fails explicitly rather
    than silently passing.
    """
    table = BASELINES.get(kind, {})
    if key not in table:
        return {"passed": False, "reason": f"no committed baseline for "
                                           f"{kind}/{key}", "checks": []}
    frozen = table[key]
    ref = dict(zip(frozen["sizes"], frozen["sup"]))
    checks = []
    for n, d in zip(report.sizes, report.distances):
        if n not in ref:
            continue
        bound = max(ref[n] * TOL_FACTOR, NOISE_FLOOR)
        checks.append({"size": n, "distance": d, "bound": bound,
                       "ok": d <= bound})
    if not checks:
        return {"passed": False, "reason": "no overlapping sizes with the "
                                           "committed baseline", "checks": []}
    resolved = [d for d in report.distances if d > NOISE_FLOOR]
    tail_ok = monotone_tail_ok(resolved) if len(resolved) >= 2 else True
    passed = tail_ok and all(c["ok"] for c in checks)
    out = {"passed": passed, "checks": checks, "monotone_tail": tail_ok}
    if not tail_ok:
        out["reason"] = "distance sequence lost its monotone tail"
    elif not passed:
        worst = max((c for c in checks if not c["ok"]),
                    key=lambda c: c["distance"] / c["bound"])
        out["reason"] = (f"distance {worst['distance']:.6g} at size "
                         f"{worst['size']} exceeds bound {worst['bound']:.6g}")
    return out
