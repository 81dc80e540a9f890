"""Special-metric verdicts and Einstein/constant-scalar residuals on a grid.

The classifier aggregates the pointwise quantities into sup-norm residuals
and boolean flags.  Conventions:

* kahler / balanced / pluriclosed: sup of |K|, |theta_N|, |ddc coefficient|;
* gauduchon: relative variation (max - min)/max(1, |mean|) of K f h^(2(m-2)),
  with the extracted constant k = grid mean (forced to 0 on families with a
  singular orbit when the flag holds, since smoothness pins the constant);
* vaisman: family 3 only, sup of the three covariant-derivative components
  of the Lee form; reported as not applicable otherwise (the criterion is a
  statement about invariant submersion-type metrics only);
* every metric here is locally conformally Kahler; strictly so exactly on
  family 3 (compact, no singular orbits) when it is not Kahler;
* second-Chern-Einstein residual: the Einstein factor is an unknown function,
  so it is eliminated; the residual is the sup-distance between the two
  normalized second-Chern-Ricci components;
* constant-scalar residual: sup |scal_ch - c|, plus the grid mean of scal_ch
  as the constant estimate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

from . import curvature as cv
from .catalog import FamilyParams
from .profiles import MetricProfile, make_grid

DEFAULT_GRID_POINTS = 401
DEFAULT_TOL = 1e-8


@dataclass(frozen=True)
class ClassificationReport:
    family: int
    grid_r0: float
    grid_r1: float
    grid_count: int
    tol: float
    kahler: bool
    kahler_sup: float
    balanced: bool
    balanced_sup: float
    pluriclosed: bool
    pluriclosed_sup: float
    gauduchon: bool
    gauduchon_variation: float
    gauduchon_constant: float
    lck: bool
    strictly_lck: bool
    vaisman: bool | None
    vaisman_sup: float | None
    sce_residual: float
    csc_residual: float
    csc_constant_estimate: float

    def as_dict(self) -> dict:
        d = {
            "family": self.family,
            "grid": {"r0": self.grid_r0, "r1": self.grid_r1, "count": self.grid_count},
            "tol": self.tol,
            "kahler": self.kahler,
            "kahler_sup": self.kahler_sup,
            "balanced": self.balanced,
            "balanced_sup": self.balanced_sup,
            "pluriclosed": self.pluriclosed,
            "pluriclosed_sup": self.pluriclosed_sup,
            "gauduchon": self.gauduchon,
            "gauduchon_variation": self.gauduchon_variation,
            "gauduchon_constant": self.gauduchon_constant,
            "lck": self.lck,
            "strictly_lck": self.strictly_lck,
            "vaisman": self.vaisman,
            "vaisman_sup": self.vaisman_sup,
            "sce_residual": self.sce_residual,
            "csc_residual": self.csc_residual,
            "csc_constant_estimate": self.csc_constant_estimate,
        }
        return d


def sce_residual(
    params: FamilyParams, profile: MetricProfile, grid: Sequence[float] | None = None
) -> float:
    """sup |normalized ric2_TT - normalized ric2_XX| over the grid.

    Zero exactly on second-Chern-Einstein metrics; the (generally
    non-constant) Einstein factor cancels in the comparison.
    """
    if grid is None:
        grid = make_grid(profile, DEFAULT_GRID_POINTS)
    worst = 0.0
    for r in grid:
        l1, l2 = cv.normalized_ric2(params, profile.jets(r))
        worst = max(worst, abs(l1 - l2))
    return worst


def csc_residual(
    params: FamilyParams,
    profile: MetricProfile,
    grid: Sequence[float] | None = None,
    c: float = 0.0,
) -> float:
    """sup |scal_ch - c| over the grid."""
    if grid is None:
        grid = make_grid(profile, DEFAULT_GRID_POINTS)
    return max(abs(cv.chern_scalar(params, profile.jets(r)) - c) for r in grid)


def classify(
    params: FamilyParams,
    profile: MetricProfile,
    grid: Sequence[float] | None = None,
    tol: float = DEFAULT_TOL,
    threads: int = 1,
) -> ClassificationReport:
    """Full special-metric report over a grid of interior points."""
    if grid is None:
        grid = make_grid(profile, DEFAULT_GRID_POINTS)
    grid = list(grid)
    points = cv.evaluate_grid(params, profile, grid, threads=threads)

    kahler_sup = max(abs(c.kahler_residual) for c in points)
    balanced_sup = max(abs(c.theta_N) for c in points)
    pluriclosed_sup = max(abs(c.pluriclosed_coeff) for c in points)

    gq = [c.gauduchon_Q for c in points]
    g_mean = math.fsum(gq) / len(gq)
    g_var = (max(gq) - min(gq)) / max(1.0, abs(g_mean))
    gauduchon_flag = g_var <= tol
    g_const = g_mean
    if gauduchon_flag and params.has_singular_orbit:
        g_const = 0.0  # smoothness at the singular orbit pins the constant

    sce = 0.0
    for c in points:
        ca = params.tt_coeff
        l1 = c.ric2_TT / (ca * c.f * c.f)
        l2 = c.ric2_XX / (c.h * c.h)
        sce = max(sce, abs(l1 - l2))

    scals = [c.scal_ch for c in points]
    csc_est = math.fsum(scals) / len(scals)
    csc_res = max(abs(s - csc_est) for s in scals)

    vaisman_flag: bool | None = None
    vaisman_sup: float | None = None
    if params.family == 3:
        worst = 0.0
        for r in grid:
            j = profile.jets(r)
            tj = cv.theta_derivative(params, j)
            dn, dt, dyx = cv.lee_covariant_derivative(params, j, tj)
            worst = max(worst, abs(dn), abs(dt), abs(dyx))
        vaisman_sup = worst
        vaisman_flag = worst <= tol

    kahler_flag = kahler_sup <= tol
    return ClassificationReport(
        family=params.family,
        grid_r0=grid[0],
        grid_r1=grid[-1],
        grid_count=len(grid),
        tol=tol,
        kahler=kahler_flag,
        kahler_sup=kahler_sup,
        balanced=balanced_sup <= tol,
        balanced_sup=balanced_sup,
        pluriclosed=pluriclosed_sup <= tol,
        pluriclosed_sup=pluriclosed_sup,
        gauduchon=gauduchon_flag,
        gauduchon_variation=g_var,
        gauduchon_constant=g_const,
        lck=True,
        strictly_lck=params.family == 3 and not kahler_flag,
        vaisman=vaisman_flag,
        vaisman_sup=vaisman_sup,
        sce_residual=sce,
        csc_residual=csc_res,
        csc_constant_estimate=csc_est,
    )
