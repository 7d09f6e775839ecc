"""Eigenvalue lower bounds for the surface Dirac operator and an umbilicity test.

For a closed surface in flat R^3 (``n = 2``) with mean curvature ``H >= 0``
against the inner normal, the smallest nonnegative Dirac eigenvalue obeys
``lambda_1 >= (n/2) min H``.  The intrinsic (Friedrich) bound
``lambda_1 >= sqrt(n/(4(n-1)) min R)`` is compared alongside it.
"""

import json
from dataclasses import asdict, dataclass, field
from typing import NamedTuple, Optional

import numpy as np

from .dirac import SCHEMA_VERSION
from .errors import UnresolvedLambda1

N_DIM = 2
POINTWISE_RTOL = 0.02
EQUALITY_RTOL = 0.02
CONSTANT_H_RTOL = 1e-3

HOLDS = "holds"
EQUALITY = "equality (sphere)"
VIOLATED = "violated"
NOT_MET = "hypothesis not met"
ABSENT = "absent"


class ExtrinsicBound(NamedTuple):
    value: float
    hypothesis_met: bool


def extrinsic_bound(curv):
    """``(n/2) min H``; ``hypothesis_met`` is False when ``min H < 0``."""
    h = float(np.min(curv.H))
    return ExtrinsicBound(0.5 * N_DIM * h, h >= 0)


def friedrich_bound(curv):
    """``sqrt(n / (4(n-1)) min R)``, or None when ``min R <= 0``."""
    r = float(np.min(curv.R))
    if r <= 0:
        return None
    return float(np.sqrt(N_DIM / (4.0 * (N_DIM - 1)) * r))


def umbilicity(curv):
    """``max_i |A_i - H_i I|_F`` divided by the area-weighted mean of ``|H|``."""
    dev = curv.A - curv.H[:, None, None] * np.eye(2)
    worst = float(np.max(np.linalg.norm(dev, axis=(1, 2))))
    mean_h = float(np.average(np.abs(curv.H), weights=curv.areas))
    if mean_h == 0:
        return float("inf") if worst > 0 else 0.0
    return worst / mean_h


def pointwise_remark(curv, rtol=POINTWISE_RTOL):
    """Check ``R <= n^2 H^2 - |sigma|^2 <= n(n-1) H^2`` at every vertex.

    Returns ``(ok, worst_excess, tol)`` for the outer inequality, with the
    tolerance taken relative to ``max n(n-1) H^2``.
    """
    rhs = N_DIM * (N_DIM - 1) * curv.H ** 2
    tol = rtol * float(np.max(rhs))
    excess = float(np.max(curv.R - rhs))
    return excess <= tol, excess, tol


def refinement_tolerance(lambda1_fine, lambda1_coarse, solver_residual=0.0):
    """``3 |lambda_1 change over the last refinement| + solver residual``."""
    return 3.0 * abs(lambda1_fine - lambda1_coarse) + float(solver_residual)


def _fallback_tolerance(report):
    """``3 x`` the largest first/second-order discrepancy among the reported
    pairs, plus the solver residual; used when no refinement step is available."""
    est = float(np.max(report.discretization_estimates))
    return 3.0 * est + float(np.max(report.residuals)) * max(abs(report.lambda1()), 1.0)


def h_variation(curv):
    """Area-weighted standard deviation of ``H`` relative to its mean."""
    mean = float(np.average(curv.H, weights=curv.areas))
    var = float(np.average((curv.H - mean) ** 2, weights=curv.areas))
    return np.sqrt(var) / abs(mean) if mean != 0 else float("inf")


@dataclass
class BoundReport:
    lambda1: float
    extrinsic_bound: float
    hypothesis_met: bool
    friedrich_bound: Optional[float]
    extrinsic_slack: float
    friedrich_slack: Optional[float]
    tolerance: float
    bound_tolerances: dict
    umbilicity_deviation: float
    h_variation: float
    pointwise_ok: bool
    pointwise_excess: float
    pointwise_tolerance: float
    verdicts: dict
    mesh: dict = field(default_factory=dict)

    @property
    def extrinsic_dominates(self):
        """Inf-level comparison, reported only."""
        if self.friedrich_bound is None:
            return None
        allowance = self.bound_tolerances["extrinsic"] + self.bound_tolerances["friedrich"]
        return self.extrinsic_bound >= self.friedrich_bound - allowance

    @property
    def passed(self):
        return VIOLATED not in self.verdicts.values()

    def to_dict(self):
        out = asdict(self)
        out["schema_version"] = SCHEMA_VERSION
        out["kind"] = "bounds"
        out["extrinsic_dominates"] = self.extrinsic_dominates
        out["passed"] = self.passed
        return out

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def table(self):
        def fmt(x):
            return "absent" if x is None else f"{x:.6f}"

        rows = [
            ("lambda_1", fmt(self.lambda1), ""),
            ("extrinsic bound", fmt(self.extrinsic_bound), self.verdicts["extrinsic"]),
            ("friedrich bound", fmt(self.friedrich_bound), self.verdicts["friedrich"]),
            ("extrinsic slack", fmt(self.extrinsic_slack), ""),
            ("friedrich slack", fmt(self.friedrich_slack), ""),
            ("tolerance", fmt(self.tolerance), ""),
            ("R <= 2H^2 excess", fmt(self.pointwise_excess), self.verdicts["pointwise"]),
            ("umbilicity", fmt(self.umbilicity_deviation), ""),
            ("H variation", fmt(self.h_variation), ""),
        ]
        w = max(len(r[0]) for r in rows)
        return "\n".join(f"{a:<{w}}  {b:>12}  {c}".rstrip() for a, b, c in rows) + "\n"


def compare(report, curv, tolerance=None, coarse_curvature=None, pointwise_rtol=POINTWISE_RTOL):
    """Compare the computed ``lambda_1`` against both lower bounds.

    ``tolerance`` is the discretization allowance on ``lambda_1``; without
    one it is estimated from the report's own first/second-order
    discrepancy.  With ``coarse_curvature`` (the same surface one refinement
    level down) each bound also gets ``3 x`` its own change under refinement,
    since the discrete curvatures carry error of their own.
    Raises UnresolvedLambda1 when no nonnegative eigenvalue was resolved.
    """
    if report.metadata.get("mesh_id") not in (None, curv.mesh_id):
        raise ValueError("spectrum and curvature belong to different meshes")
    lam1 = report.lambda1()
    if lam1 is None:
        raise UnresolvedLambda1("no nonnegative eigenvalue in the resolved spectrum")
    tol = _fallback_tolerance(report) if tolerance is None else float(tolerance)

    ext = extrinsic_bound(curv)
    fr = friedrich_bound(curv)
    slack = lam1 - ext.value
    hv = h_variation(curv)
    btol = {"extrinsic": 0.0, "friedrich": 0.0}
    if coarse_curvature is not None:
        btol["extrinsic"] = 3.0 * abs(ext.value - extrinsic_bound(coarse_curvature).value)
        fr_c = friedrich_bound(coarse_curvature)
        if fr is not None and fr_c is not None:
            btol["friedrich"] = 3.0 * abs(fr - fr_c)

    if not ext.hypothesis_met:
        v_ext = NOT_MET
    elif slack < -(tol + btol["extrinsic"]):
        v_ext = VIOLATED
    elif abs(slack) <= max(tol + btol["extrinsic"], EQUALITY_RTOL * ext.value) and hv <= CONSTANT_H_RTOL:
        v_ext = EQUALITY
    else:
        v_ext = HOLDS

    if fr is None:
        v_fr, fr_slack = ABSENT, None
    else:
        fr_slack = lam1 - fr
        v_fr = HOLDS if fr_slack >= -(tol + btol["friedrich"]) else VIOLATED

    ok, excess, ptol = pointwise_remark(curv, pointwise_rtol)
    return BoundReport(
        lambda1=lam1,
        extrinsic_bound=ext.value,
        hypothesis_met=ext.hypothesis_met,
        friedrich_bound=fr,
        extrinsic_slack=slack,
        friedrich_slack=fr_slack,
        tolerance=tol,
        bound_tolerances=btol,
        umbilicity_deviation=umbilicity(curv),
        h_variation=hv,
        pointwise_ok=ok,
        pointwise_excess=excess,
        pointwise_tolerance=ptol,
        verdicts={"extrinsic": v_ext, "friedrich": v_fr, "pointwise": HOLDS if ok else VIOLATED},
        mesh={k: v for k, v in report.metadata.items() if k.startswith("mesh_")},
    )
