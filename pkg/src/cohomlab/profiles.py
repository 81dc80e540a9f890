"""Metric profiles (f, h): the two positive functions determining the metric.

A profile carries its parameter interval, a kind tag, and order-3 jet access
for both functions.  Four kinds exist:

* ``closed_form``  - f and h are expression trees, jets via Taylor arithmetic;
* ``builtin``      - named families (homogeneous, tautological, Fubini-Study
  and its one-parameter deformation), expression-backed;
* ``ode_solution`` - jets delegated to the owning solver's analytic relations
  (also used for conformal reparametrizations, which push jets through the
  monotone change of variable);
* ``sampled``      - quintic B-spline interpolation of tabulated values, so
  jets up to order 3 are continuous.

Positivity of f and h is enforced on the open interior, numerically: on a
1024-point probe grid at construction and pointwise at evaluation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

from . import expr as ex
from .catalog import FamilyParams
from .errors import DegenerateProfileError, ValidationError
from .numerics import linspace, solve_banded

INSET_FRACTION = 1e-3
_POSITIVITY_PROBE = 1024


@dataclass(frozen=True)
class ProfileJets:
    """Values and derivatives up to order 3 of f and h at one point."""

    r: float
    f0: float
    f1: float
    f2: float
    f3: float
    h0: float
    h1: float
    h2: float
    h3: float

    @property
    def f_jet(self) -> ex.Jet3:
        return ex.Jet3(self.f0, self.f1, self.f2, self.f3)

    @property
    def h_jet(self) -> ex.Jet3:
        return ex.Jet3(self.h0, self.h1, self.h2, self.h3)


def _jets_from_pair(r: float, fj: ex.Jet3, hj: ex.Jet3) -> ProfileJets:
    return ProfileJets(r, fj.v0, fj.v1, fj.v2, fj.v3, hj.v0, hj.v1, hj.v2, hj.v3)


class MetricProfile:
    """Base class; subclasses fill in ``_jets_raw``."""

    kind: str = "abstract"

    def __init__(
        self,
        domain: tuple[float, float],
        family_hint: int | None = None,
        singular_left: bool | None = None,
        singular_right: bool | None = None,
    ):
        lo, hi = float(domain[0]), float(domain[1])
        if not (math.isfinite(lo) and math.isfinite(hi) and hi > lo):
            raise ValidationError(f"bad profile domain {domain!r}")
        self.domain = (lo, hi)
        self.family_hint = family_hint
        self._singular_left = singular_left
        self._singular_right = singular_right

    def _jets_raw(self, r: float) -> ProfileJets:
        raise NotImplementedError

    def jets(self, r: float, check_positivity: bool = True) -> ProfileJets:
        lo, hi = self.domain
        tol = 1e-12 * max(1.0, abs(lo), abs(hi))
        if r < lo - tol or r > hi + tol:
            raise ValidationError(f"r={r!r} outside profile domain [{lo!r}, {hi!r}]")
        j = self._jets_raw(min(max(r, lo), hi))
        if check_positivity and lo < r < hi and (j.f0 <= 0.0 or j.h0 <= 0.0):
            raise DegenerateProfileError(r, j.f0, j.h0)
        return j

    def f(self, r: float) -> float:
        return self.jets(r, check_positivity=False).f0

    def h(self, r: float) -> float:
        return self.jets(r, check_positivity=False).h0

    @property
    def singular_left(self) -> bool:
        if self._singular_left is None:
            self._singular_left = self._end_singular(self.domain[0])
        return self._singular_left

    @property
    def singular_right(self) -> bool:
        if self._singular_right is None:
            self._singular_right = self._end_singular(self.domain[1])
        return self._singular_right

    def _end_singular(self, r: float) -> bool:
        try:
            j = self.jets(r, check_positivity=False)
        except Exception:
            return True
        eps = 1e-9 * max(1.0, abs(j.f0) + abs(j.h0))
        return j.f0 <= eps or j.h0 <= eps

    def probe_positivity(self, n: int = _POSITIVITY_PROBE) -> None:
        lo, hi = self.domain
        inset = INSET_FRACTION * (hi - lo)
        for r in linspace(lo + inset, hi - inset, n):
            j = self._jets_raw(r)
            if j.f0 <= 0.0 or j.h0 <= 0.0:
                raise DegenerateProfileError(r, j.f0, j.h0)

    def descriptor(self) -> dict:
        return {"kind": self.kind, "domain": list(self.domain)}


def profile_jets(p: MetricProfile, r: float) -> ProfileJets:
    """Order-3 jets of (f, h) at r; the single entry point for curvature."""
    return p.jets(r)


class ClosedFormProfile(MetricProfile):
    kind = "closed_form"

    def __init__(
        self,
        f_source: "ex.Expression | str",
        h_source: "ex.Expression | str",
        domain: tuple[float, float],
        family_hint: int | None = None,
        probe: bool = True,
    ):
        super().__init__(domain, family_hint)
        self.f_expr = ex.ensure_expression(f_source)
        self.h_expr = ex.ensure_expression(h_source)
        if probe:
            self.probe_positivity()

    def _jets_raw(self, r: float) -> ProfileJets:
        return _jets_from_pair(r, ex.eval_jet3(self.f_expr, r), ex.eval_jet3(self.h_expr, r))

    def descriptor(self) -> dict:
        return {
            "kind": self.kind,
            "f": ex.to_string(self.f_expr),
            "h": ex.to_string(self.h_expr),
            "domain": list(self.domain),
        }


class BuiltinProfile(ClosedFormProfile):
    kind = "builtin"

    def __init__(self, name, f_src, h_src, domain, family_hint, k=None):
        super().__init__(f_src, h_src, domain, family_hint, probe=False)
        self.name = name
        self.k = k

    def descriptor(self) -> dict:
        d = {"kind": "builtin", "name": self.name, "domain": list(self.domain)}
        if self.k is not None:
            d["k"] = self.k
        return d


def builtin_profile(
    name: str,
    params: FamilyParams | None = None,
    k: float = 1.0,
    domain: tuple[float, float] | None = None,
    r_max: float = 10.0,
) -> BuiltinProfile:
    """Construct a named profile.

    homogeneous      f = p/(mn), h = 1  (needs ``params``)
    tautological     f = r, h = sqrt(r^2 + k^2) on [0, r_max]
    fubini_study     f = sin(2r)/2, h = cos(r) on [0, pi/2]
    fubini_study_k   f = sin(2r)/2, h = cos(r) sqrt(sin^2 r + k^2 cos^2 r)
    """
    if name == "homogeneous":
        if params is None:
            raise ValidationError("homogeneous profile needs params (m, n, p)")
        value = params.p / (params.m * params.n)
        if domain is None:
            domain = (-5.0, 5.0) if params.family == 1 else (0.0, 2 * math.pi)
        return BuiltinProfile("homogeneous", repr(value), "1", domain, params.family)
    if name == "tautological":
        if k <= 0:
            raise ValidationError(f"tautological profile needs k > 0, got {k}")
        dom = domain or (0.0, r_max)
        return BuiltinProfile("tautological", "r", f"sqrt(r^2+{k * k!r})", dom, 2, k=k)
    if name == "fubini_study":
        dom = domain or (0.0, math.pi / 2)
        return BuiltinProfile("fubini_study", "sin(2*r)/2", "cos(r)", dom, 4)
    if name == "fubini_study_k":
        if k <= 0:
            raise ValidationError(f"fubini_study_k needs k > 0, got {k}")
        dom = domain or (0.0, math.pi / 2)
        h_src = f"cos(r)*sqrt(sin(r)^2+{k * k!r}*cos(r)^2)"
        return BuiltinProfile("fubini_study_k", "sin(2*r)/2", h_src, dom, 4, k=k)
    raise ValidationError(f"unknown builtin profile {name!r}")


class OdeSolutionProfile(MetricProfile):
    """Profile whose jets come from the owning solver's analytic relations."""

    kind = "ode_solution"

    def __init__(
        self,
        jets_fn: Callable[[float], ProfileJets],
        domain: tuple[float, float],
        family_hint: int | None = None,
        metadata: dict | None = None,
        singular_left: bool | None = None,
        singular_right: bool | None = None,
    ):
        super().__init__(domain, family_hint, singular_left, singular_right)
        self._jets_fn = jets_fn
        self.metadata = metadata or {}

    def _jets_raw(self, r: float) -> ProfileJets:
        return self._jets_fn(r)

    def descriptor(self) -> dict:
        return {"kind": self.kind, "domain": list(self.domain), "metadata": self.metadata}


# ---------------------------------------------------------------------------
# Sampled profiles: quintic B-spline interpolation
# ---------------------------------------------------------------------------


class _BSpline5:
    """Degree-5 interpolating B-spline with derivatives up to order 3.

    Clamped knot vector with interior knots at the sites x[3:-3] (the
    standard choice for odd-degree interpolation); the collocation system is
    banded and totally positive.
    """

    DEG = 5

    def __init__(self, xs: Sequence[float], ys: Sequence[float]):
        n = len(xs)
        k = self.DEG
        if n < 8:
            raise ValidationError("sampled profile needs at least 8 samples")
        if any(xs[i] >= xs[i + 1] for i in range(n - 1)):
            raise ValidationError("sample sites must be strictly increasing")
        self.x = [float(v) for v in xs]
        self.t = [self.x[0]] * (k + 1) + self.x[3 : n - 3] + [self.x[-1]] * (k + 1)
        rows: list[list[tuple[int, float]]] = []
        for xi in self.x:
            mu, vals = self._basis_values(self.t, k, xi, n)
            rows.append([(mu - k + j, v) for j, v in enumerate(vals)])
        coef = solve_banded(k, k, lambda i: rows[i], [float(v) for v in ys])
        # precompute coefficient/knot stacks for derivatives 0..3
        self._levels: list[tuple[list[float], int, list[float]]] = [(self.t, k, coef)]
        t, deg, c = self.t, k, coef
        for _ in range(3):
            c2 = []
            for j in range(len(c) - 1):
                denom = t[j + deg + 1] - t[j + 1]
                c2.append(0.0 if denom == 0.0 else deg * (c[j + 1] - c[j]) / denom)
            t = t[1:-1]
            deg -= 1
            c = c2
            self._levels.append((t, deg, c))

    @staticmethod
    def _find_span(t: list[float], deg: int, ncoef: int, x: float) -> int:
        if x >= t[ncoef]:
            return ncoef - 1
        if x <= t[deg]:
            return deg
        lo, hi = deg, ncoef
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if x < t[mid]:
                hi = mid
            else:
                lo = mid
        return lo

    @classmethod
    def _basis_values(cls, t, deg, x, ncoef) -> tuple[int, list[float]]:
        mu = cls._find_span(t, deg, ncoef, x)
        vals = [1.0]
        left = [0.0] * (deg + 1)
        right = [0.0] * (deg + 1)
        for d in range(1, deg + 1):
            left[d] = x - t[mu + 1 - d]
            right[d] = t[mu + d] - x
            saved = 0.0
            new = []
            for j in range(d):
                denom = right[j + 1] + left[d - j]
                term = vals[j] / denom if denom != 0.0 else 0.0
                new.append(saved + right[j + 1] * term)
                saved = left[d - j] * term
            new.append(saved)
            vals = new
        return mu, vals

    @staticmethod
    def _deboor(t: list[float], deg: int, coef: list[float], x: float) -> float:
        mu = _BSpline5._find_span(t, deg, len(coef), x)
        d = [coef[mu - deg + j] for j in range(deg + 1)]
        for rr in range(1, deg + 1):
            for j in range(deg, rr - 1, -1):
                i = mu - deg + j
                denom = t[i + deg - rr + 1] - t[i]
                alpha = 0.0 if denom == 0.0 else (x - t[i]) / denom
                d[j] = (1.0 - alpha) * d[j - 1] + alpha * d[j]
        return d[deg]

    def derivs(self, x: float) -> list[float]:
        """[value, d1, d2, d3] at x."""
        return [self._deboor(t, deg, c, x) for (t, deg, c) in self._levels]


class SampledProfile(MetricProfile):
    kind = "sampled"

    def __init__(
        self,
        rs: Sequence[float],
        fs: Sequence[float],
        hs: Sequence[float],
        family_hint: int | None = None,
        probe: bool = True,
    ):
        if not (len(rs) == len(fs) == len(hs)):
            raise ValidationError("rs, fs, hs must have equal length")
        super().__init__((float(rs[0]), float(rs[-1])), family_hint)
        self._fspl = _BSpline5(rs, fs)
        self._hspl = _BSpline5(rs, hs)
        if probe:
            self.probe_positivity()

    @staticmethod
    def from_profile(
        p: MetricProfile, count: int = 512, family_hint: int | None = None
    ) -> "SampledProfile":
        rs = linspace(p.domain[0], p.domain[1], count)
        js = [p.jets(r, check_positivity=False) for r in rs]
        return SampledProfile(
            rs, [j.f0 for j in js], [j.h0 for j in js], family_hint or p.family_hint, probe=False
        )

    def _jets_raw(self, r: float) -> ProfileJets:
        fd = self._fspl.derivs(r)
        hd = self._hspl.derivs(r)
        return ProfileJets(r, fd[0], fd[1], fd[2], fd[3], hd[0], hd[1], hd[2], hd[3])

    def descriptor(self) -> dict:
        return {"kind": self.kind, "domain": list(self.domain), "samples": len(self._fspl.x)}


# ---------------------------------------------------------------------------
# Boundary / smoothness conditions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BoundaryCondition:
    name: str
    measured: float
    defect: float


@dataclass(frozen=True)
class BoundaryReport:
    family: int
    tol: float
    conditions: tuple[BoundaryCondition, ...]

    @property
    def max_defect(self) -> float:
        return max((c.defect for c in self.conditions), default=0.0)

    @property
    def passed(self) -> bool:
        return self.max_defect <= self.tol

    def as_dict(self) -> dict:
        return {
            "family": self.family,
            "tol": self.tol,
            "passed": self.passed,
            "max_defect": self.max_defect,
            "conditions": [
                {"name": c.name, "measured": c.measured, "defect": c.defect}
                for c in self.conditions
            ],
        }


def check_boundary(p: MetricProfile, params: FamilyParams, tol: float = 1e-8) -> BoundaryReport:
    """Family-dependent smoothness conditions at the ends of the interval.

    Family 1 has none.  Family 2 needs f(0)=0, f'(0)=1, f''(0)=0, h'(0)=0 at
    the left end.  Family 3 needs f, h periodic (orders 0..2 compared across
    the cell).  Family 4 needs f=0, h'=0 at both ends with f' = +1 / -1 in
    arclength parametrization.
    """
    lo, hi = p.domain
    fam = params.family
    conds: list[BoundaryCondition] = []
    if fam == 1:
        return BoundaryReport(1, tol, ())
    if fam in (2, 4):
        if abs(lo) > 1e-9 * max(1.0, abs(hi)):
            raise ValidationError(f"family {fam} profile must start at r=0, got {lo!r}")
        j0 = p.jets(lo, check_positivity=False)
        conds += [
            BoundaryCondition("f(0)", j0.f0, abs(j0.f0)),
            BoundaryCondition("f'(0)", j0.f1, abs(j0.f1 - 1.0)),
            BoundaryCondition("f''(0)", j0.f2, abs(j0.f2)),
            BoundaryCondition("h'(0)", j0.h1, abs(j0.h1)),
        ]
        if fam == 4:
            j1 = p.jets(hi, check_positivity=False)
            conds += [
                BoundaryCondition("f(L)", j1.f0, abs(j1.f0)),
                BoundaryCondition("f'(L)", j1.f1, abs(j1.f1 + 1.0)),
                BoundaryCondition("h'(L)", j1.h1, abs(j1.h1)),
            ]
        return BoundaryReport(fam, tol, tuple(conds))
    if fam == 3:
        ja = p.jets(lo, check_positivity=False)
        jb = p.jets(hi, check_positivity=False)
        for name, va, vb in (
            ("f", ja.f0, jb.f0),
            ("f'", ja.f1, jb.f1),
            ("f''", ja.f2, jb.f2),
            ("h", ja.h0, jb.h0),
            ("h'", ja.h1, jb.h1),
            ("h''", ja.h2, jb.h2),
        ):
            conds.append(BoundaryCondition(f"{name} periodic", vb, abs(vb - va)))
        return BoundaryReport(3, tol, tuple(conds))
    raise ValidationError(f"unknown family {fam}")


# ---------------------------------------------------------------------------
# Conformal reparametrization
# ---------------------------------------------------------------------------

PhiLike = Callable[[float], ex.Jet3]


def _phi_jets_fn(phi: "ex.Expression | str | PhiLike") -> PhiLike:
    if isinstance(phi, str) or isinstance(phi, (ex.Num, ex.Var, ex.Const, ex.Neg, ex.Bin, ex.Call)):
        e = ex.ensure_expression(phi)
        return lambda s: ex.eval_jet3(e, s)
    if callable(phi):
        return phi  # already a jet function
    raise ValidationError(f"cannot interpret conformal factor {phi!r}")


class _CumulativeIntegral:
    """xi(r) = r_lo + integral of a positive function from r_lo, with inverse.

    Panel prefix sums (Gauss-Legendre, 16 nodes) plus partial panels give
    xi anywhere; the inverse uses bracketed Newton on the panel table.
    """

    NODES = 16
    PANELS = 256

    def __init__(self, fn_value: Callable[[float], float], lo: float, hi: float):
        from .numerics import gauss_legendre_nodes

        self.fn = fn_value
        self.lo, self.hi = lo, hi
        self.edges = linspace(lo, hi, self.PANELS + 1)
        nodes, weights = gauss_legendre_nodes(self.NODES)
        self._gl = (nodes, weights)
        self.prefix = [lo]
        acc = lo
        for i in range(self.PANELS):
            acc += self._panel(self.edges[i], self.edges[i + 1])
            self.prefix.append(acc)

    def _panel(self, a: float, b: float) -> float:
        nodes, weights = self._gl
        mid, half = 0.5 * (a + b), 0.5 * (b - a)
        return half * math.fsum(w * self.fn(mid + half * x) for x, w in zip(nodes, weights))

    def value(self, r: float) -> float:
        r = min(max(r, self.lo), self.hi)
        i = min(int((r - self.lo) / (self.hi - self.lo) * self.PANELS), self.PANELS - 1)
        while i > 0 and r < self.edges[i]:
            i -= 1
        while i < self.PANELS - 1 and r > self.edges[i + 1]:
            i += 1
        return self.prefix[i] + self._panel(self.edges[i], r)

    @property
    def total(self) -> float:
        return self.prefix[-1]

    def inverse(self, target: float) -> float:
        from .numerics import invert_monotone

        # locate panel by prefix, then Newton inside it
        lo_i, hi_i = 0, self.PANELS
        while hi_i - lo_i > 1:
            mid = (lo_i + hi_i) // 2
            if self.prefix[mid] <= target:
                lo_i = mid
            else:
                hi_i = mid
        a, b = self.edges[lo_i], self.edges[lo_i + 1]
        base = self.prefix[lo_i]
        return invert_monotone(
            lambda s: base + self._panel(a, s), target, a, b, dfn=self.fn, tol=1e-14
        )


def conformal_reparametrize(
    p: MetricProfile,
    phi: "ex.Expression | str | PhiLike",
    params: FamilyParams | None = None,
) -> OdeSolutionProfile:
    """Profile of the conformally rescaled metric in unit-speed parametrization.

    With xi(r) = r_lo + integral of phi from r_lo, the new profile is
    fhat(rho) = phi(s) f(s) and hhat(rho) = phi(s) h(s) at s = xi^-1(rho).
    Jets are pushed through the change of variable exactly (order 3).
    """
    jets_of_phi = _phi_jets_fn(phi)
    lo, hi = p.domain
    inset = INSET_FRACTION * (hi - lo)
    for s in linspace(lo + inset, hi - inset, _POSITIVITY_PROBE):
        if jets_of_phi(s).v0 <= 0.0:
            raise ValidationError(f"conformal factor not positive at r={s!r}")

    xi = _CumulativeIntegral(lambda s: jets_of_phi(s).v0, lo, hi)
    new_domain = (lo, xi.total)

    def jets_fn(rho: float) -> ProfileJets:
        s = lo if rho <= lo else (hi if rho >= xi.total else xi.inverse(rho))
        pj = jets_of_phi(s)
        xi_jet = ex.Jet3(rho, pj.v0, pj.v1, pj.v2)
        inv_jet = ex.jet_inverse(xi_jet, s)
        src = p.jets(s, check_positivity=False)
        fhat = ex.jet_compose(pj * src.f_jet, inv_jet)
        hhat = ex.jet_compose(pj * src.h_jet, inv_jet)
        return _jets_from_pair(rho, fhat, hhat)

    return OdeSolutionProfile(
        jets_fn,
        new_domain,
        family_hint=p.family_hint,
        metadata={"construction": "conformal_reparametrize", "base": p.descriptor()},
        singular_left=p.singular_left,
        singular_right=p.singular_right,
    )


# ---------------------------------------------------------------------------
# Grids and JSON descriptors
# ---------------------------------------------------------------------------


def make_grid(
    p: MetricProfile,
    count: int = 401,
    r0: float | None = None,
    r1: float | None = None,
) -> list[float]:
    """Uniform evaluation grid, insetting singular endpoints by 1e-3 * length."""
    lo, hi = p.domain
    a = lo if r0 is None else max(lo, float(r0))
    b = hi if r1 is None else min(hi, float(r1))
    if not b > a:
        raise ValidationError(f"empty grid range [{a!r}, {b!r}]")
    inset = INSET_FRACTION * (b - a)
    if p.singular_left and a <= lo + 1e-15 * max(1.0, abs(lo)):
        a += inset
    if p.singular_right and b >= hi - 1e-15 * max(1.0, abs(hi)):
        b -= inset
    return linspace(a, b, count)


def profile_from_descriptor(desc: dict, params: FamilyParams | None = None) -> MetricProfile:
    """Build a profile from its JSON descriptor (see README for the schema)."""
    if not isinstance(desc, dict) or "kind" not in desc:
        raise ValidationError("profile descriptor must be an object with a 'kind'")
    kind = desc["kind"]
    if kind == "closed_form":
        for key in ("f", "h", "domain"):
            if key not in desc:
                raise ValidationError(f"closed_form descriptor missing {key!r}")
        dom = desc["domain"]
        return ClosedFormProfile(desc["f"], desc["h"], (dom[0], dom[1]),
                                 family_hint=params.family if params else None)
    if kind == "builtin":
        if "name" not in desc:
            raise ValidationError("builtin descriptor missing 'name'")
        dom = tuple(desc["domain"]) if "domain" in desc else None
        return builtin_profile(
            desc["name"], params=params, k=float(desc.get("k", 1.0)), domain=dom,
            r_max=float(desc.get("r_max", 10.0)),
        )
    if kind == "sampled":
        for key in ("r", "f", "h"):
            if key not in desc:
                raise ValidationError(f"sampled descriptor missing {key!r}")
        return SampledProfile(desc["r"], desc["f"], desc["h"],
                              family_hint=params.family if params else None)
    raise ValidationError(f"unknown profile kind {kind!r}")
