"""Solution families for the Einstein-type and constant-scalar problems.

Closed-form families (homogeneous, conformal, tautological, the projective
one-parameter family), the u-substitution solvers for the family-2
second-Chern-Einstein problem and the family-2/family-4 constant-scalar
problem, the singular initial value problem in Malgrange form, and the
family-4 Kahler-Einstein shooting probe.

The u-substitution: writing the profile through a strictly increasing phi
with phi' = sqrt(u(phi)) turns the third-order profile equations into linear
second-order equations for u(t), solvable in closed form per branch.  phi is
then reconstructed by quadrature of 1/sqrt(u) (with square-root endpoint
substitution at simple zeros of u) followed by monotone inversion.  Profile
jets come from u analytically:

    phi'   = sqrt(u(phi))
    phi''  = u'(phi)/2
    phi''' = u''(phi) phi'/2
    phi'''' = u'''(phi) u(phi)/2 + u''(phi) u'(phi)/4
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

from . import expr as ex
from .catalog import FamilyParams
from .errors import (
    BlowUpError,
    BracketError,
    SingularSystemError,
    SolverFailure,
    ValidationError,
)
from .numerics import (
    Tolerance,
    find_root_bracketed,
    integrate_gl,
    invert_monotone,
    linspace,
    rk_integrate,
    solve_linear,
    solve_linear_3,
)
from .profiles import (
    BuiltinProfile,
    MetricProfile,
    OdeSolutionProfile,
    ProfileJets,
    builtin_profile,
)


# ---------------------------------------------------------------------------
# Closed-form families
# ---------------------------------------------------------------------------


def homogeneous_sce(
    params: FamilyParams, domain: tuple[float, float] | None = None
) -> BuiltinProfile:
    """Constant profile f = p/(mn), h = 1 on families without singular orbits.

    Second-Chern-Einstein with constant Chern scalar 4m(m-1); on families 2
    and 4 the constant profile violates the smoothness conditions at the
    singular orbit, so those are rejected.
    """
    if params.family not in (1, 3):
        raise ValidationError(
            f"homogeneous profile is smooth only on families 1 and 3, got {params.family}"
        )
    return builtin_profile("homogeneous", params=params, domain=domain)


def conformal_sce_family(
    params: FamilyParams,
    phi: "ex.Expression | str",
    domain: tuple[float, float] | None = None,
) -> tuple[MetricProfile, Callable[[float], float]]:
    """Profile (p/(mn) phi, phi) on families 1 and 3, plus its Einstein factor.

    Every positive admissible phi solves the second-Chern-Einstein equations
    (conformal invariance); the returned callable is the non-constant factor
    lambda(r) = 2m(-phi''/phi + 2(m-1)(phi'+1)/phi^2), which equals the Chern
    scalar of the output.
    """
    if params.family not in (1, 3):
        raise ValidationError(
            f"conformal family lives on families 1 and 3, got {params.family}"
        )
    e = ex.ensure_expression(phi)
    m = params.m
    if domain is None:
        domain = (-5.0, 5.0) if params.family == 1 else (0.0, 2.0 * math.pi)
    from .profiles import ClosedFormProfile

    f_expr = ex.Bin("*", ex.Num(params.p / (m * params.n)), e)
    profile = ClosedFormProfile(f_expr, e, domain, params.family)

    def lam(r: float) -> float:
        j = ex.eval_jet3(e, r)
        if j.v0 <= 0.0:
            raise ValidationError(f"conformal factor not positive at r={r!r}")
        return 2.0 * m * (-j.v2 / j.v0 + 2.0 * (m - 1) * (j.v1 + 1.0) / (j.v0 * j.v0))

    phi_values = [ex.eval_value(e, r) for r in linspace(domain[0], domain[1], 257)]
    if min(phi_values) <= 0.0:
        raise ValidationError("conformal factor must be positive on the domain")
    return profile, lam


def tautological_family(params: FamilyParams, k: float, r_max: float = 10.0) -> BuiltinProfile:
    """f = r, h = sqrt(r^2 + k^2) on the line bundle with mn = p."""
    if params.family != 2:
        raise ValidationError(f"tautological family needs family 2, got {params.family}")
    if params.m * params.n != params.p:
        raise ValidationError(
            f"tautological family needs mn = p, got mn={params.m * params.n}, p={params.p}"
        )
    return builtin_profile("tautological", k=k, r_max=r_max)


def fubini_study_family(m: int, k: float) -> BuiltinProfile:
    """f = sin(2r)/2, h = cos(r) sqrt(sin^2 r + k^2 cos^2 r) on [0, pi/2].

    The parameters are fixed to n = 1, p = m; k = 1 is the round metric.
    All members are second-Chern-Einstein; only k = 1 is Kahler.
    """
    if m < 2:
        raise ValidationError(f"need m >= 2, got {m}")
    if k <= 0:
        raise ValidationError(f"need k > 0, got {k}")
    return builtin_profile("fubini_study_k", k=k)


# ---------------------------------------------------------------------------
# u families
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class UFamily:
    """Closed-form solution branch of the constant-scalar u equation.

    u solves t^2 u'' + (m+2) t u' - 2m(m-1) u + c t^2 - 4m(m-1) = 0 for every
    (a, b); the branch is selected by m (resonances change the basis at m = 2,
    m = 3).
    """

    m: int
    branch: str
    a: float
    b: float
    c: float

    def u(self, t: float) -> float:
        a, b, c, m = self.a, self.b, self.c, self.m
        if self.branch == "m2":
            return a * t**-4 - 2.0 + b * t - (c / 6.0) * t * t
        if self.branch == "m3":
            return a * t**-6 - 2.0 + b * t * t - (c / 8.0) * math.log(t) * t * t
        g = c / (2.0 * (m + 1) * (m - 3))
        return a * t ** (-2 * m) - 2.0 + g * t * t + b * t ** (m - 1)

    def du(self, t: float) -> float:
        a, b, c, m = self.a, self.b, self.c, self.m
        if self.branch == "m2":
            return -4.0 * a * t**-5 + b - (c / 3.0) * t
        if self.branch == "m3":
            return -6.0 * a * t**-7 + 2.0 * b * t - (c / 8.0) * (2.0 * math.log(t) + 1.0) * t
        g = c / (2.0 * (m + 1) * (m - 3))
        return -2 * m * a * t ** (-2 * m - 1) + 2.0 * g * t + (m - 1) * b * t ** (m - 2)

    def d2u(self, t: float) -> float:
        a, b, c, m = self.a, self.b, self.c, self.m
        if self.branch == "m2":
            return 20.0 * a * t**-6 - c / 3.0
        if self.branch == "m3":
            return 42.0 * a * t**-8 + 2.0 * b - (c / 8.0) * (2.0 * math.log(t) + 3.0)
        g = c / (2.0 * (m + 1) * (m - 3))
        return (
            2 * m * (2 * m + 1) * a * t ** (-2 * m - 2)
            + 2.0 * g
            + (m - 1) * (m - 2) * b * t ** (m - 3)
        )

    def d3u(self, t: float) -> float:
        a, b, c, m = self.a, self.b, self.c, self.m
        if self.branch == "m2":
            return -120.0 * a * t**-7
        if self.branch == "m3":
            return -336.0 * a * t**-9 - c / (4.0 * t)
        return (
            -2 * m * (2 * m + 1) * (2 * m + 2) * a * t ** (-2 * m - 3)
            + (m - 1) * (m - 2) * (m - 3) * b * t ** (m - 4)
        )

    def d4u(self, t: float) -> float:
        a, b, c, m = self.a, self.b, self.c, self.m
        if self.branch == "m2":
            return 840.0 * a * t**-8
        if self.branch == "m3":
            return 3024.0 * a * t**-10 + c / (4.0 * t * t)
        return (
            2 * m * (2 * m + 1) * (2 * m + 2) * (2 * m + 3) * a * t ** (-2 * m - 4)
            + (m - 1) * (m - 2) * (m - 3) * (m - 4) * b * t ** (m - 5)
        )

    def ode_residual(self, t: float) -> float:
        m = self.m
        return (
            t * t * self.d2u(t)
            + (m + 2) * t * self.du(t)
            - 2 * m * (m - 1) * self.u(t)
            + self.c * t * t
            - 4 * m * (m - 1)
        )


def u_family(m: int, a: float, b: float, c: float) -> UFamily:
    """Closed-form u with coefficients (a, b, c); branch selected by m."""
    if m < 2:
        raise ValidationError(f"need m >= 2, got {m}")
    branch = "m2" if m == 2 else ("m3" if m == 3 else "mGT3")
    return UFamily(m, branch, float(a), float(b), float(c))


@dataclass(frozen=True)
class SCEUFamily:
    """u(t) = -4m(n+p)/(p(m+1)) + 4t + 4(mn-p)/(p(m+1)) t^(m+1).

    The unique solution of t u'' - m u' + 4m = 0 with u(1) = 0 and
    u'(1) = 4mn/p; positive and increasing on (1, oo) since mn >= p on every
    admissible base.
    """

    m: int
    n: int
    p: int

    @property
    def c0(self) -> float:
        return -4.0 * self.m * (self.n + self.p) / (self.p * (self.m + 1))

    @property
    def ctop(self) -> float:
        return 4.0 * (self.m * self.n - self.p) / (self.p * (self.m + 1))

    def u(self, t: float) -> float:
        return self.c0 + 4.0 * t + self.ctop * t ** (self.m + 1)

    def du(self, t: float) -> float:
        return 4.0 + self.ctop * (self.m + 1) * t**self.m

    def d2u(self, t: float) -> float:
        return self.ctop * (self.m + 1) * self.m * t ** (self.m - 1)

    def d3u(self, t: float) -> float:
        return self.ctop * (self.m + 1) * self.m * (self.m - 1) * t ** (self.m - 2)

    def d4u(self, t: float) -> float:
        m = self.m
        return self.ctop * (m + 1) * m * (m - 1) * (m - 2) * t ** (m - 3)

    def exact_checks(self) -> tuple[Fraction, Fraction]:
        """(u(1), u'(1) - 4mn/p) in exact rational arithmetic; both zero."""
        m, n, p = self.m, self.n, self.p
        c0 = Fraction(-4 * m * (n + p), p * (m + 1))
        ctop = Fraction(4 * (m * n - p), p * (m + 1))
        u1 = c0 + 4 + ctop
        du1 = 4 + ctop * (m + 1) - Fraction(4 * m * n, p)
        return u1, du1

    def ode_residual(self, t: float) -> float:
        return t * self.d2u(t) - self.m * self.du(t) + 4 * self.m


# ---------------------------------------------------------------------------
# phi reconstruction: r(t) = integral of 1/sqrt(u) with singular ends
# ---------------------------------------------------------------------------


def _endpoint_integrand(ufn, t_root: float, sign: float, s_switch: float = 0.02):
    """dt/sqrt(u) in the substituted variable t = t_root + sign s^2.

    Near the root the direct evaluation of u suffers catastrophic
    cancellation (u(t_root) = 0), so a quartic Taylor factorization of
    u/s^2 takes over below ``s_switch``.
    """
    u1 = ufn.du(t_root)
    u2 = ufn.d2u(t_root)
    u3 = ufn.d3u(t_root)
    u4 = ufn.d4u(t_root)

    def integrand(s: float) -> float:
        s2 = s * s
        if s < s_switch:
            g = sign * u1 + u2 * s2 / 2.0 + sign * u3 * s2 * s2 / 6.0 + u4 * s2**3 / 24.0
            return 2.0 / math.sqrt(g)
        u0 = ufn.u(t_root + sign * s2)
        return 2.0 * s / math.sqrt(max(u0, 1e-300))

    return integrand


def _length_left_to(ufn, t_lo: float, t_end: float, tol: float = 1e-13) -> float:
    """Transverse length integral of 1/sqrt(u) from the simple zero t_lo."""
    if t_end <= t_lo:
        return 0.0
    t_mid = min(t_lo + 1.0, 0.5 * (t_lo + t_end))
    total = integrate_gl(
        _endpoint_integrand(ufn, t_lo, 1.0), 0.0, math.sqrt(t_mid - t_lo), tol
    )
    if t_end > t_mid:
        span = math.log(t_end / t_mid)
        total += integrate_gl(
            lambda tau: (t_mid * math.exp(tau))
            / math.sqrt(max(ufn.u(t_mid * math.exp(tau)), 1e-300)),
            0.0,
            span,
            tol,
        )
    return total


class _Segment:
    """One monotone piece of the map r(t), in a local smooth variable."""

    def __init__(self, to_t, integrand, q_lo, q_hi, panels):
        self.to_t = to_t
        self.integrand = integrand
        self.edges = linspace(q_lo, q_hi, panels + 1)
        self.prefix = [0.0]

    def build(self, r_start: float, tol: float = 1e-13) -> float:
        acc = r_start
        self.prefix = [acc]
        for i in range(len(self.edges) - 1):
            acc += integrate_gl(self.integrand, self.edges[i], self.edges[i + 1], tol)
            self.prefix.append(acc)
        return acc

    @property
    def r_lo(self) -> float:
        return self.prefix[0]

    @property
    def r_hi(self) -> float:
        return self.prefix[-1]

    def t_of_r(self, r: float) -> float:
        i = 0
        lo, hi = 0, len(self.prefix) - 1
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if self.prefix[mid] <= r:
                lo = mid
            else:
                hi = mid
        i = lo
        qa, qb = self.edges[i], self.edges[i + 1]
        base = self.prefix[i]
        q = invert_monotone(
            lambda qq: base + integrate_gl(self.integrand, qa, qq, 1e-13),
            r,
            qa,
            qb,
            dfn=self.integrand,
            tol=1e-14,
        )
        return self.to_t(q)


class PhiMap:
    """phi and its jets on [0, L] from u on [t_lo, t_hi].

    ``singular_right`` selects the family-4 situation where u has a simple
    zero at both ends; otherwise only t_lo is a zero of u.
    """

    def __init__(
        self,
        u_fns,  # object with u, du, d2u, d3u
        t_lo: float,
        t_hi: float,
        singular_right: bool,
        panels_per_segment: int = 96,
    ):
        self.ufn = u_fns
        self.t_lo, self.t_hi = t_lo, t_hi
        self.singular_right = singular_right

        t_mid = 0.5 * (t_lo + t_hi) if singular_right else min(t_lo + 1.0, 0.5 * (t_lo + t_hi))
        segments: list[_Segment] = []
        s_max = math.sqrt(t_mid - t_lo)
        left_int = _endpoint_integrand(u_fns, t_lo, 1.0)
        segments.append(
            _Segment(lambda s: t_lo + s * s, left_int, 0.0, s_max, panels_per_segment)
        )
        if singular_right:
            s_hi = math.sqrt(t_hi - t_mid)
            right_int = _endpoint_integrand(u_fns, t_hi, -1.0)
            segments.append(
                _Segment(
                    lambda q: t_hi - (s_hi - q) ** 2,
                    lambda q: right_int(s_hi - q),
                    0.0,
                    s_hi,
                    panels_per_segment,
                )
            )
        else:
            # geometric node spacing handles very large t_hi gracefully
            ratio = t_hi / t_mid
            lograt = math.log(ratio)

            def to_t(q: float, t0=t_mid, rat=ratio) -> float:
                return t0 * rat**q

            def integrand(q: float, t0=t_mid, lg=lograt) -> float:
                t = t0 * math.exp(lg * q)
                return t * lg / math.sqrt(max(u_fns.u(t), 1e-300))

            segments.append(_Segment(to_t, integrand, 0.0, 1.0, panels_per_segment))
        acc = 0.0
        for seg in segments:
            acc = seg.build(acc)
        self.segments = segments
        self.length = acc

    def t_of_r(self, r: float) -> float:
        if r <= 0.0:
            return self.t_lo
        if r >= self.length:
            return self.t_hi
        for seg in self.segments:
            if r <= seg.r_hi:
                return seg.t_of_r(r)
        return self.t_hi

    def _u_at(self, t: float) -> float:
        """u(t), Taylor-factored near the simple roots to kill cancellation."""
        ufn = self.ufn
        d_lo = t - self.t_lo
        if 0.0 <= d_lo < 4e-4:
            g = (
                ufn.du(self.t_lo)
                + ufn.d2u(self.t_lo) * d_lo / 2.0
                + ufn.d3u(self.t_lo) * d_lo * d_lo / 6.0
                + ufn.d4u(self.t_lo) * d_lo**3 / 24.0
            )
            return max(d_lo * g, 0.0)
        if self.singular_right:
            d_hi = self.t_hi - t
            if 0.0 <= d_hi < 4e-4:
                g = (
                    -ufn.du(self.t_hi)
                    + ufn.d2u(self.t_hi) * d_hi / 2.0
                    - ufn.d3u(self.t_hi) * d_hi * d_hi / 6.0
                    + ufn.d4u(self.t_hi) * d_hi**3 / 24.0
                )
                return max(d_hi * g, 0.0)
        return max(ufn.u(t), 0.0)

    def phi_jets4(self, r: float) -> tuple[float, float, float, float, float]:
        """(phi, phi', phi'', phi''', phi'''') at r, analytically from u."""
        t = self.t_of_r(r)
        u0 = self._u_at(t)
        u1 = self.ufn.du(t)
        u2 = self.ufn.d2u(t)
        u3 = self.ufn.d3u(t)
        dphi = math.sqrt(u0)
        return (t, dphi, 0.5 * u1, 0.5 * u2 * dphi, 0.5 * u3 * u0 + 0.25 * u2 * u1)


# ---------------------------------------------------------------------------
# Profile solutions
# ---------------------------------------------------------------------------


@dataclass
class ProfileSolution:
    """A solved profile plus its construction metadata and phi accessors."""

    profile: MetricProfile
    problem: str
    params: FamilyParams
    length: float
    c: float | None = None
    lam: Callable[[float], float] | None = None
    lam_description: str | None = None
    k_tilde: float | None = None
    u_info: dict | None = None
    phi_map: PhiMap | None = None
    truncated: bool = False

    def phi(self, r: float) -> float:
        if self.phi_map is None:
            raise ValidationError(f"solution {self.problem!r} has no phi substitution")
        return self.phi_map.t_of_r(r)

    def phi_jets(self, r: float) -> tuple[float, float, float, float]:
        if self.phi_map is None:
            raise ValidationError(f"solution {self.problem!r} has no phi substitution")
        ph = self.phi_map.phi_jets4(r)
        return ph[0], ph[1], ph[2], ph[3]

    def as_dict(self) -> dict:
        d = {
            "problem": self.problem,
            "params": self.params.describe(),
            "length": self.length,
            "domain": list(self.profile.domain),
            "truncated": self.truncated,
        }
        if self.c is not None:
            d["c"] = self.c
        if self.lam_description:
            d["lambda"] = self.lam_description
        if self.k_tilde is not None:
            d["k_tilde"] = self.k_tilde
        if self.u_info:
            d["u"] = self.u_info
        return d


def _sce_profile_jets(pm: PhiMap, params: FamilyParams) -> Callable[[float], ProfileJets]:
    scale = params.p / (2.0 * params.m * params.n)

    def jets(r: float) -> ProfileJets:
        ph = pm.phi_jets4(r)
        f_jet = ex.Jet3(scale * ph[1], scale * ph[2], scale * ph[3], scale * ph[4])
        h_jet = ex.jet_sqrt(ex.Jet3(ph[0], ph[1], ph[2], ph[3]), r)
        return ProfileJets(r, *f_jet.as_tuple(), *h_jet.as_tuple())

    return jets


def _csc_profile_jets(pm: PhiMap, params: FamilyParams) -> Callable[[float], ProfileJets]:
    scale = params.p / (2.0 * params.m * params.n)

    def jets(r: float) -> ProfileJets:
        ph = pm.phi_jets4(r)
        phi_jet = ex.Jet3(ph[0], ph[1], ph[2], ph[3])
        dphi_jet = ex.Jet3(ph[1], ph[2], ph[3], ph[4])
        f_jet = scale * phi_jet * dphi_jet
        return ProfileJets(r, *f_jet.as_tuple(), *phi_jet.as_tuple())

    return jets


def _capped_t_end(ufn, target_length: float, t_lo: float) -> tuple[float, float, bool]:
    """Largest t with r(t) = target_length, or a capped end when the total
    transverse length integral converges (finite-length profiles)."""

    def length_to(t_end: float) -> float:
        return _length_left_to(ufn, t_lo, t_end)

    t_hi = t_lo + 1.0
    last = length_to(t_hi)
    while last < target_length and t_hi < 1e12:
        t_hi *= 4.0
        last = length_to(t_hi)
    truncated = last < target_length
    # for mn > p (and c = 0, m > 3) the total length converges; stay inside it
    eff = 0.98 * last if truncated else target_length
    lo = t_lo + 1e-4
    while length_to(lo) > eff and lo - t_lo > 1e-12:
        lo = t_lo + (lo - t_lo) * 0.1
    t_end = find_root_bracketed(lambda t: length_to(t) - eff, lo, t_hi, tol=1e-12)
    return t_end, eff, truncated


def solve_sce_m2(params: FamilyParams, r_length: float = 10.0) -> ProfileSolution:
    """Complete second-Chern-Einstein metric on the family-2 line bundle.

    Ansatz f = (p/2mn) phi', h = sqrt(phi) with phi(0) = 1; the substitution
    u solves t u'' - m u' + 4m = 0 with u(1) = 0, u'(1) = 4mn/p.  When
    mn = p this is the tautological family with k = 1.  For mn > p the
    total transverse length is finite; the domain is then capped slightly
    inside it and the solution flagged as truncated.
    """
    if params.family != 2:
        raise ValidationError(f"solve_sce_m2 needs family 2, got {params.family}")
    if r_length <= 0:
        raise ValidationError("r_length must be positive")
    ufn = SCEUFamily(params.m, params.n, params.p)
    u1, du1 = ufn.exact_checks()
    if u1 != 0 or du1 != 0:
        raise SolverFailure(f"u family identities violated: u(1)={u1}, u'(1)-4mn/p={du1}")
    t_end, eff_len, truncated = _capped_t_end(ufn, r_length, 1.0)
    pm = PhiMap(ufn, 1.0, t_end, singular_right=False)
    m = params.m

    def lam(r: float) -> float:
        # 2m(-phi'''/phi' + (m-1) phi''/phi + (m-1) phi'^2/(2 phi^2)) in the
        # nonsingular u form (phi'''/phi' = u''(phi)/2, phi'^2 = u(phi))
        t = pm.t_of_r(r)
        u0 = max(ufn.u(t), 0.0)
        return 2.0 * m * (
            -0.5 * ufn.d2u(t)
            + (m - 1) * ufn.du(t) / (2.0 * t)
            + (m - 1) * u0 / (2.0 * t * t)
        )

    profile = OdeSolutionProfile(
        _sce_profile_jets(pm, params),
        (0.0, pm.length),
        family_hint=2,
        metadata={"problem": "sce-m2", "params": params.describe()},
        singular_left=True,
        singular_right=False,
    )
    return ProfileSolution(
        profile=profile,
        problem="sce-m2",
        params=params,
        length=pm.length,
        lam=lam,
        lam_description="weakly Einstein: lambda(r) = scal_Ch(r), non-constant",
        u_info={"branch": "sce", "c0": ufn.c0, "slope": 4.0, "ctop": ufn.ctop},
        phi_map=pm,
        truncated=truncated,
    )


# ---------------------------------------------------------------------------
# Constant Chern scalar, family 2
# ---------------------------------------------------------------------------


def _csc_basis(m: int):
    """Basis evaluators (value, derivative at arbitrary t) for u = a Ba + b Bb + c Bc - 2."""
    ua = u_family(m, 1.0, 0.0, 0.0)
    ub = u_family(m, 0.0, 1.0, 0.0)
    uc = u_family(m, 0.0, 0.0, 1.0)
    B = lambda uf: (lambda t: uf.u(t) + 2.0)
    dB = lambda uf: uf.du
    return (B(ua), dB(ua)), (B(ub), dB(ub)), (B(uc), dB(uc))


def csc_coefficients_m2(params: FamilyParams, c: float) -> tuple[float, float]:
    """Coefficients (a, b) pinning u(1) = 0 and u'(1) = 4mn/p at given c.

    Closed forms per branch, cross-checked against the 2x2 linear system
    (agreement 1e-10 enforced).
    """
    m, n, p = params.m, params.n, params.p
    if m == 2:
        a = 2.0 / 5.0 - c / 30.0 - 8.0 * n / (5.0 * p)
        b = 8.0 / 5.0 + c / 5.0 + 8.0 * n / (5.0 * p)
    elif m == 3:
        a = 0.5 - c / 64.0 - 1.5 * n / p
        b = 1.5 + c / 64.0 + 1.5 * n / p
    else:
        a = -((m + 1) * (4 * m * (2 * n - p) + 4 * p) + c * p) / (2.0 * p * (m + 1) * (3 * m - 1))
        b = (4 * m * (m - 3) * (n + p) - c * p) / (p * (3.0 * m - 1) * (m - 3))
    (Ba, dBa), (Bb, dBb), (Bc, dBc) = _csc_basis(m)
    rhs = [2.0 - c * Bc(1.0), 4.0 * m * n / p - c * dBc(1.0)]
    sol, _ = solve_linear([[Ba(1.0), Bb(1.0)], [dBa(1.0), dBb(1.0)]], rhs)
    if abs(sol[0] - a) > 1e-10 * max(1.0, abs(a)) or abs(sol[1] - b) > 1e-10 * max(1.0, abs(b)):
        raise SolverFailure(
            f"closed-form coefficients disagree with the linear system: "
            f"({a}, {b}) vs ({sol[0]}, {sol[1]})"
        )
    return a, b


def solve_csc_m2(
    params: FamilyParams, c: float, r_length: float = 10.0
) -> ProfileSolution:
    """Complete constant-Chern-scalar metric on the family-2 line bundle.

    Ansatz f = (p/2mn) phi phi', h = phi.  Requires c <= 0 (for c > 0 the
    positivity of u on (1, oo) is no longer guaranteed; a scan guard catches
    user-modified c).
    """
    if params.family != 2:
        raise ValidationError(f"solve_csc_m2 needs family 2, got {params.family}")
    if c > 0:
        raise ValidationError(f"solve_csc_m2 needs c <= 0, got {c}")
    a, b = csc_coefficients_m2(params, c)
    ufn = u_family(params.m, a, b, c)
    t_end, eff_len, truncated = _capped_t_end(ufn, r_length, 1.0)
    # positivity/monotonicity guard on a scan grid
    for t in linspace(1.0 + 1e-6, t_end, 512):
        if ufn.u(t) <= 0.0:
            raise SolverFailure(f"u not positive at t={t!r} (c={c!r})")
    pm = PhiMap(ufn, 1.0, t_end, singular_right=False)
    profile = OdeSolutionProfile(
        _csc_profile_jets(pm, params),
        (0.0, pm.length),
        family_hint=2,
        metadata={"problem": "csc-m2", "c": c, "params": params.describe()},
        singular_left=True,
        singular_right=False,
    )
    return ProfileSolution(
        profile=profile,
        problem="csc-m2",
        params=params,
        length=pm.length,
        c=c,
        u_info={"branch": ufn.branch, "a": a, "b": b, "c": c},
        phi_map=pm,
        truncated=truncated,
    )


# ---------------------------------------------------------------------------
# Constant Chern scalar, family 4
# ---------------------------------------------------------------------------


def csc_coefficients_m4(params: FamilyParams, k: float) -> tuple[float, float, float]:
    """(a, b, c) from u(1) = 0, u(k) = 0, u'(1) = 4mn/p on the branch basis."""
    m, n, p = params.m, params.n, params.p
    (Ba, dBa), (Bb, dBb), (Bc, dBc) = _csc_basis(m)
    mat = [
        [Ba(1.0), Bb(1.0), Bc(1.0)],
        [Ba(k), Bb(k), Bc(k)],
        [dBa(1.0), dBb(1.0), dBc(1.0)],
    ]
    sol, _ = solve_linear_3(mat, [2.0, 2.0, 4.0 * m * n / p])
    return sol[0], sol[1], sol[2]


def _closing_delta(params: FamilyParams, k: float) -> float:
    """Delta(k) = u'(k) + 4mn/(kp) for the solved coefficients at k."""
    a, b, c = csc_coefficients_m4(params, k)
    return u_family(params.m, a, b, c).du(k) + 4.0 * params.m * params.n / (k * params.p)


def solve_csc_m4(params: FamilyParams, k_max: float = 50.0) -> ProfileSolution:
    """Constant-Chern-scalar metric on the compact family-4 bundle.

    Scans the closing function Delta(k) = u'(k) + 4mn/(kp) for its first sign
    change on (1, k_max], refines the root k-tilde by Brent, reconstructs phi
    on [1, k-tilde] (square-root endpoint handling at both simple zeros of u)
    and returns the profile in arclength parametrization together with
    k-tilde, c = c(k-tilde) > 0 and the length L.
    """
    if params.family != 4:
        raise ValidationError(f"solve_csc_m4 needs family 4, got {params.family}")
    ks: list[float] = []
    k = 1.02
    while k < 2.0:
        ks.append(k)
        k += 0.02
    while k <= k_max:
        ks.append(k)
        k *= 1.05
    prev_k = None
    prev_d = None
    bracket = None
    for k in ks:
        try:
            d = _closing_delta(params, k)
        except SingularSystemError:
            continue  # skip scan point; system singular there
        if prev_d is not None and (prev_d > 0.0) != (d > 0.0):
            bracket = (prev_k, k)
            break
        prev_k, prev_d = k, d
    if bracket is None:
        raise SolverFailure(f"no sign change of the closing function on (1, {k_max}]")
    k_tilde = find_root_bracketed(
        lambda kk: _closing_delta(params, kk), bracket[0], bracket[1], tol=1e-13
    )
    a, b, c = csc_coefficients_m4(params, k_tilde)
    ufn = u_family(params.m, a, b, c)
    if c <= 0.0:
        raise SolverFailure(f"closing constant not positive: c={c!r} at k={k_tilde!r}")
    # interior positivity of u between its two boundary zeros
    for t in linspace(1.0, k_tilde, 514)[1:-1]:
        if ufn.u(t) <= 0.0:
            raise SolverFailure(f"u not positive at t={t!r} (k_tilde={k_tilde!r})")
    pm = PhiMap(ufn, 1.0, k_tilde, singular_right=True)
    profile = OdeSolutionProfile(
        _csc_profile_jets(pm, params),
        (0.0, pm.length),
        family_hint=4,
        metadata={"problem": "csc-m4", "c": c, "k_tilde": k_tilde, "params": params.describe()},
        singular_left=True,
        singular_right=True,
    )
    return ProfileSolution(
        profile=profile,
        problem="csc-m4",
        params=params,
        length=pm.length,
        c=c,
        k_tilde=k_tilde,
        u_info={"branch": ufn.branch, "a": a, "b": b, "c": c},
        phi_map=pm,
    )


def family4_alpha_m3(n: int) -> Callable[[float], float]:
    """The m = 3 closing polynomial alpha(k) (for certificates and tests)."""

    def alpha(k: float) -> float:
        lg = math.log(k)
        return (
            -4 * (n + 3) * k**10
            + 32 * (n + 1) * k**8 * lg
            - 4 * (n - 3) * k**8
            + 32 * (n - 1) * k**2 * lg
            + 4 * (n + 3) * k**2
            + 4 * (n - 3)
        )

    return alpha


def family4_alpha_third_derivative_at_one(m: int, n: int) -> float:
    """alpha'''(1): 512 n at m = 3, else 8mn(3m-1)(m-3)(m-1)(m+1)."""
    if m == 3:
        return 512.0 * n
    return 8.0 * m * n * (3 * m - 1) * (m - 3) * (m - 1) * (m + 1)

# ---------------------------------------------------------------------------
# Prescribed-scalar second-Chern-Einstein metrics near a singular orbit
# ---------------------------------------------------------------------------


class LambdaFunction:
    """Adapter for the prescribed Chern scalar of the singular IVP.

    Accepts a constant, an expression (string or tree), or any object with
    ``value(r)``, ``derivative(r)`` and ``series_at0(order)`` methods.  The
    series about r = 0 feeds the Taylor bootstrap; value and derivative feed
    the Runge-Kutta stage evaluations and the order-3 profile jets.
    """

    def __init__(self, lam):
        if isinstance(lam, (int, float)):
            v = float(lam)
            self._value = lambda r: v
            self._derivative = lambda r: 0.0
            self._series = lambda order: [v] + [0.0] * order
        elif isinstance(lam, str) or isinstance(
            lam, (ex.Num, ex.Var, ex.Const, ex.Neg, ex.Bin, ex.Call)
        ):
            e = ex.ensure_expression(lam)
            self._value = lambda r: ex.eval_value(e, r)

            def deriv(r: float) -> float:
                return ex.eval_jet3(e, r).v1

            self._derivative = deriv
            self._series = lambda order: ex.eval_series(e, 0.0, order)
        elif hasattr(lam, "value") and hasattr(lam, "series_at0"):
            self._value = lam.value
            self._derivative = getattr(lam, "derivative", lambda r: 0.0)
            self._series = lam.series_at0
        else:
            raise ValidationError(
                "lambda must be a number, an expression, or provide value/series_at0"
            )

    def value(self, r: float) -> float:
        return self._value(r)

    def derivative(self, r: float) -> float:
        return self._derivative(r)

    def series_at0(self, order: int) -> list[float]:
        s = self._series(order)
        if len(s) < order + 1:
            s = list(s) + [0.0] * (order + 1 - len(s))
        return list(s)


class SceM2LambdaProvider:
    """The Chern scalar of a solve_sce_m2 output, as a LambdaFunction source.

    Exposes the Taylor series at r = 0 through the power-series solution of
    the reduced profile equation, so it can prescribe the scalar for the
    singular IVP (the internal cross-oracle between the two solution paths).
    """

    def __init__(self, sol: ProfileSolution):
        if sol.problem != "sce-m2" or sol.phi_map is None:
            raise ValidationError("provider needs a solve_sce_m2 solution")
        self.sol = sol
        self.params = sol.params
        self.ufn = SCEUFamily(self.params.m, self.params.n, self.params.p)

    def value(self, r: float) -> float:
        return self.sol.lam(r)

    def derivative(self, r: float) -> float:
        m = self.params.m
        ufn = self.ufn
        pm = self.sol.phi_map
        t = pm.t_of_r(r)
        u0 = max(ufn.u(t), 0.0)
        dphi = math.sqrt(u0)
        # d/dr of 2m(-u''/2 + (m-1)u'/(2t) + (m-1)u/(2t^2)) along phi
        dF = 2.0 * self.params.m * (
            -0.5 * ufn.d3u(t)
            + (m - 1) * (ufn.d2u(t) / (2.0 * t) - ufn.du(t) / (2.0 * t * t))
            + (m - 1) * (ufn.du(t) / (2.0 * t * t) - u0 / t**3)
        )
        return dF * dphi

    def _phi_series(self, order: int) -> list[float]:
        # Taylor coefficients of phi at 0 from phi phi''' = phi'(m phi'' - 2m)
        m, n, p = self.params.m, self.params.n, self.params.p
        c = [0.0] * (order + 4)
        c[0] = 1.0
        c[2] = m * n / p
        for i in range(0, order + 1):
            lhs_lower = math.fsum(
                c[a] * (i - a + 3) * (i - a + 2) * (i - a + 1) * c[i - a + 3]
                for a in range(1, i + 1)
            )
            rhs = math.fsum(
                (a + 1) * c[a + 1] * m * (i - a + 2) * (i - a + 1) * c[i - a + 2]
                for a in range(0, i + 1)
            ) - 2.0 * m * (i + 1) * c[i + 1]
            c[i + 3] = (rhs - lhs_lower) / ((i + 3) * (i + 2) * (i + 1))
        return c

    def series_at0(self, order: int) -> list[float]:
        m = self.params.m
        phi = self._phi_series(order + 2)[: order + 3]
        nterm = len(phi)
        ufn = self.ufn

        def poly_of_phi(c0: float, clin: float, ctop: float, power: int) -> list[float]:
            # c0 + clin*phi + ctop*phi^power as a series in r
            out = [0.0] * nterm
            out[0] += c0
            acc = list(phi)
            for i in range(nterm):
                out[i] += clin * phi[i]
            ppow = [1.0] + [0.0] * (nterm - 1)
            for _ in range(power):
                ppow = ex.s_mul(ppow, phi)
            for i in range(nterm):
                out[i] += ctop * ppow[i]
            return out

        u_ser = poly_of_phi(ufn.c0, 4.0, ufn.ctop, self.params.m + 1)
        du_ser = poly_of_phi(0.0, 0.0, ufn.ctop * (m + 1), m)
        for i in range(nterm):
            du_ser[i] += 4.0 if i == 0 else 0.0
        d2u_ser = poly_of_phi(0.0, 0.0, ufn.ctop * (m + 1) * m, m - 1)
        lam_ser = ex.s_add(
            ex.s_mul([-0.5 * 2 * m] + [0.0] * (nterm - 1), d2u_ser),
            ex.s_add(
                ex.s_mul(
                    [m * (m - 1)] + [0.0] * (nterm - 1),
                    ex.s_div(du_ser, phi, 0.0),
                ),
                ex.s_mul(
                    [m * (m - 1)] + [0.0] * (nterm - 1),
                    ex.s_div(u_ser, ex.s_mul(phi, phi), 0.0),
                ),
            ),
        )
        return lam_ser[: order + 1]


class _Dual:
    """Minimal forward-mode pair (value, derivative) for the IICE jets."""

    __slots__ = ("v", "d")

    def __init__(self, v: float, d: float = 0.0):
        self.v = v
        self.d = d

    def __add__(self, o):
        o = o if isinstance(o, _Dual) else _Dual(float(o))
        return _Dual(self.v + o.v, self.d + o.d)

    __radd__ = __add__

    def __sub__(self, o):
        o = o if isinstance(o, _Dual) else _Dual(float(o))
        return _Dual(self.v - o.v, self.d - o.d)

    def __rsub__(self, o):
        return _Dual(float(o)) - self

    def __mul__(self, o):
        o = o if isinstance(o, _Dual) else _Dual(float(o))
        return _Dual(self.v * o.v, self.d * o.v + self.v * o.d)

    __rmul__ = __mul__

    def __truediv__(self, o):
        o = o if isinstance(o, _Dual) else _Dual(float(o))
        return _Dual(self.v / o.v, (self.d * o.v - self.v * o.d) / (o.v * o.v))

    def __rtruediv__(self, o):
        return _Dual(float(o)) / self

    def __pow__(self, k: int):
        out = _Dual(1.0)
        for _ in range(k):
            out = out * self
        return out


def _iice_second_derivatives(params: FamilyParams, f, f1, h, h1, lam):
    """(f'', h'') from the reduced Einstein equations; works on floats or duals."""
    m, n, p = params.m, params.n, params.p
    c1 = 2.0 * m * (m - 1) * n / p
    c2 = 2.0 * m * m * (m - 1) * n * n / (p * p)
    c3 = 2.0 * (m * n / p) ** 2
    h2 = h * h
    f2v = f * (c1 * f1 / h2 + c2 * f * f / (h2 * h2) - lam / (2.0 * m))
    h2v = h * (
        (h1 * h1) / h2
        - (f1 / f) * (h1 / h)
        + c1 * f * h1 / (h2 * h)
        - c3 * f * f / (h2 * h2)
        + 2.0 * m / h2
        - lam / (2.0 * m)
    )
    return f2v, h2v


@dataclass
class SingularIVPState:
    """Malgrange-form state v = (x, y, z, w) with x = f/r, y = x', z = h, w = h'.

    The linear part is A v / r with A = diag(0, -2, 0, -1); A v0 = 0 at the
    initial vector v0 = (1, 0, a, 0) and jI - A is invertible for every
    integer j >= 1, which is exactly what the series bootstrap needs.
    """

    params: FamilyParams
    a: float
    lam: LambdaFunction

    A_DIAG = (0.0, -2.0, 0.0, -1.0)

    def v0(self) -> tuple[float, float, float, float]:
        return (1.0, 0.0, self.a, 0.0)

    def nonlinear(self, r: float, v: Sequence[float]) -> list[float]:
        """N(r, v): the regular part of v' = A v / r + N(r, v)."""
        m, n, p = self.params.m, self.params.n, self.params.p
        x, y, z, w = v
        lam = self.lam.value(r)
        c1 = 2.0 * m * (m - 1) * n / p
        c2 = 2.0 * m * m * (m - 1) * n * n / (p * p)
        c3 = 2.0 * (m * n / p) ** 2
        z2 = z * z
        n2 = (
            c1 * x * x / z2
            - lam / (2.0 * m) * x
            + r * (c1 * x * y / z2)
            + r * r * (c2 * x**3 / (z2 * z2))
        )
        n4 = (
            w * w / z
            - y * w / x
            + 2.0 * m / z
            - lam / (2.0 * m) * z
            + r * (c1 * x * w / z2)
            + r * r * (-c3 * x * x / (z2 * z))
        )
        return [y, n2, w, n4]

    def rhs(self, r: float, v: Sequence[float]) -> list[float]:
        nl = self.nonlinear(r, v)
        return [nl[i] + self.A_DIAG[i] * v[i] / r for i in range(4)]


def _series_bootstrap(
    state: SingularIVPState, order: int
) -> tuple[list[float], list[float], list[float], list[float]]:
    """Taylor coefficients of (x, y, z, w) about r = 0 up to the given order.

    Solves (j I - A) v_j = [r^(j-1)] N(r, v(r)) term by term; the right side
    at order j-1 only involves v_0 .. v_(j-1).  Odd coefficients of x and z
    (and even coefficients of y and w) vanish for even lambda and are zeroed
    to enforce the odd/even structure of (f, h).
    """
    m, n, p = state.params.m, state.params.n, state.params.p
    c1 = 2.0 * m * (m - 1) * n / p
    c2 = 2.0 * m * m * (m - 1) * n * n / (p * p)
    c3 = 2.0 * (m * n / p) ** 2
    lam_ser = state.lam.series_at0(order)
    N = order
    x = [0.0] * (N + 1)
    y = [0.0] * (N + 1)
    z = [0.0] * (N + 1)
    w = [0.0] * (N + 1)
    x[0], z[0] = 1.0, state.a

    def shift(s: list[float], k: int) -> list[float]:
        return [0.0] * k + s[: len(s) - k]

    for j in range(1, N + 1):
        xs, ys, zs, ws = x[:j], y[:j], z[:j], w[:j]
        pad = lambda s: s + [0.0] * (j - len(s))
        xs, ys, zs, ws = pad(xs), pad(ys), pad(zs), pad(ws)
        ls = lam_ser[:j] + [0.0] * max(0, j - len(lam_ser))
        z2 = ex.s_mul(zs, zs)
        x2 = ex.s_mul(xs, xs)
        n2 = ex.s_add(
            ex.s_sub(
                [c1 * v for v in ex.s_div(x2, z2, 0.0)],
                [v / (2.0 * m) for v in ex.s_mul(ls, xs)],
            ),
            ex.s_add(
                shift([c1 * v for v in ex.s_div(ex.s_mul(xs, ys), z2, 0.0)], 1),
                shift(
                    [c2 * v for v in ex.s_div(ex.s_mul(x2, xs), ex.s_mul(z2, z2), 0.0)], 2
                ),
            ),
        )
        n4 = ex.s_add(
            ex.s_sub(
                ex.s_add(
                    ex.s_div(ex.s_mul(ws, ws), zs, 0.0),
                    ex.s_sub(
                        [2.0 * m * v for v in ex.s_div([1.0] + [0.0] * (j - 1), zs, 0.0)],
                        [v / (2.0 * m) for v in ex.s_mul(ls, zs)],
                    ),
                ),
                ex.s_div(ex.s_mul(ys, ws), xs, 0.0),
            ),
            ex.s_add(
                shift([c1 * v for v in ex.s_div(ex.s_mul(xs, ws), z2, 0.0)], 1),
                shift([-c3 * v for v in ex.s_div(x2, ex.s_mul(z2, zs), 0.0)], 2),
            ),
        )
        n1 = ys
        n3 = ws
        x[j] = n1[j - 1] / (j - 0.0)
        y[j] = n2[j - 1] / (j + 2.0)
        z[j] = n3[j - 1] / (j - 0.0)
        w[j] = n4[j - 1] / (j + 1.0)
        # parity by construction: x, z even functions; y, w odd
        if j % 2 == 1:
            x[j] = 0.0
            z[j] = 0.0
        else:
            y[j] = 0.0
            w[j] = 0.0
    return x, y, z, w


def _series_eval(coeffs: list[float], r: float, nder: int = 3) -> list[float]:
    out = []
    for d in range(nder + 1):
        acc = 0.0
        for j in range(len(coeffs) - 1, d - 1, -1):
            fac = 1.0
            for i in range(d):
                fac *= j - i
            acc = acc * r + fac * coeffs[j]
        # Horner over shifted powers: evaluate sum_j fac * c_j r^(j-d)
        out.append(acc)
    return out


def solve_sce_local(
    params: FamilyParams,
    a: float,
    lam,
    r_max: float = 1.0,
    series_order: int = 8,
    handoff: float | None = None,
    tol: Tolerance = Tolerance(1e-10, 1e-10),
) -> ProfileSolution:
    """Second-Chern-Einstein metric with prescribed Chern scalar near r = 0.

    Taylor-series bootstrap of the Malgrange-form system through the singular
    initial vector (1, 0, a, 0), handed off to adaptive Runge-Kutta at
    r0 = 1e-3 min(1, a).  f is odd with f'(0) = 1 and h is even with
    h(0) = a by construction.  If positivity fails before ``r_max`` the
    domain is truncated and the solution flagged.
    """
    if params.family not in (2, 4):
        raise ValidationError(
            f"the singular IVP needs a singular orbit (family 2 or 4), got {params.family}"
        )
    if a <= 0:
        raise ValidationError(f"need a > 0, got {a}")
    lam_fn = lam if isinstance(lam, LambdaFunction) else LambdaFunction(lam)
    state = SingularIVPState(params, float(a), lam_fn)
    xs, ys, zs, ws = _series_bootstrap(state, series_order)
    r0 = handoff if handoff is not None else 1e-3 * min(1.0, a)
    if not 0.0 < r0 < r_max:
        raise ValidationError(f"handoff radius {r0!r} outside (0, {r_max!r})")
    v0 = [
        _series_eval(xs, r0, 0)[0],
        _series_eval(ys, r0, 0)[0],
        _series_eval(zs, r0, 0)[0],
        _series_eval(ws, r0, 0)[0],
    ]
    positivity_floor = 1e-10
    events = [
        lambda r, v: v[0] - positivity_floor,  # x = f/r > 0
        lambda r, v: v[2] - positivity_floor,  # z = h > 0
    ]
    truncated = False
    try:
        traj = rk_integrate(state.rhs, v0, r0, r_max, tol, events=events)
    except BlowUpError as err:
        raise SolverFailure(f"integration blew up: {err}", r_last=err.r_last)
    if traj.event_index is not None:
        truncated = True
    r_end = traj.r_end

    def jets(r: float) -> ProfileJets:
        if r < r0:
            xj = _series_eval(xs, r, 3)
            zj = _series_eval(zs, r, 3)
            x_jet = ex.Jet3(*xj)
            z_jet = ex.Jet3(*zj)
            f_jet = ex.Jet3.variable(r) * x_jet
            return ProfileJets(r, *f_jet.as_tuple(), *z_jet.as_tuple())
        v = traj(min(r, r_end))
        x, yv, z, wv = v
        f, f1 = r * x, x + r * yv
        h, h1 = z, wv
        lam0 = lam_fn.value(r)
        lam1 = lam_fn.derivative(r)
        f2, h2 = _iice_second_derivatives(params, f, f1, h, h1, lam0)
        fd, hd = _iice_second_derivatives(
            params,
            _Dual(f, f1),
            _Dual(f1, f2),
            _Dual(h, h1),
            _Dual(h1, h2),
            _Dual(lam0, lam1),
        )
        return ProfileJets(r, f, f1, fd.v, fd.d, h, h1, hd.v, hd.d)

    profile = OdeSolutionProfile(
        jets,
        (0.0, r_end),
        family_hint=params.family,
        metadata={"problem": "sce-local", "a": a, "params": params.describe()},
        singular_left=True,
        singular_right=False,
    )
    return ProfileSolution(
        profile=profile,
        problem="sce-local",
        params=params,
        length=r_end,
        lam=lam_fn.value,
        lam_description="prescribed Chern scalar",
        u_info={"series_order": series_order, "handoff": r0},
        truncated=truncated,
    )


# ---------------------------------------------------------------------------
# Family-4 Kahler-Einstein shooting probe
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ProbeCell:
    a: float
    einstein_constant: float
    status: str  # "closed" | "collapsed" | "no_event" | "blowup"
    r_stop: float | None
    f_prime: float | None
    h_prime: float | None
    defect: float | None
    xx_residual_at_0: float

    def as_dict(self) -> dict:
        return {
            "a": self.a,
            "einstein_constant": self.einstein_constant,
            "status": self.status,
            "r_stop": self.r_stop,
            "f_prime": self.f_prime,
            "h_prime": self.h_prime,
            "defect": self.defect,
            "xx_residual_at_0": self.xx_residual_at_0,
        }


@dataclass
class ProbeReport:
    cells: list[ProbeCell]
    min_defect: float | None
    argmin: ProbeCell | None

    def as_dict(self) -> dict:
        return {
            "min_defect": self.min_defect,
            "argmin": self.argmin.as_dict() if self.argmin else None,
            "cells": [c.as_dict() for c in self.cells],
        }


def probe_ke_m4(
    params: FamilyParams,
    a_grid: Sequence[float],
    lambda_grid: Sequence[float],
    horizon: float = 60.0,
) -> ProbeReport:
    """Gauge-fixed nonexistence probe for family-4 Einstein + Kahler data.

    Under the Kahler constraint f = -(p/mn) h h' the normal and circle
    Einstein equations coincide and reduce to the third-order evolution
    h''' = -(2m+1) h' h''/h - E h', which accepts the smooth left-orbit data
    h(0) = a, h'(0) = 0, h''(0) = -mn/(pa) (so f'(0) = 1 identically).  That
    evolution has the exact first integral

        h'' = -E h/(2m+2) + C h^-(2m+1),
        C = E a^(2m+2)/(2m+2) - (mn/p) a^(2m),

    which encodes the prescribed h''(0) and is what actually gets integrated
    (the third-order form divides by h and degrades near collapse).  The
    remaining horizontal Einstein equation is a constraint whose residual G
    satisfies G' = -(h'/h) G; its initial value is recorded per cell and
    vanishes exactly on the Einstein-consistent curve E = (2m/a^2)(1 + n/p).

    Each cell integrates until the first zero of f (h' = 0 with h > 0, or
    h -> 0 collapse) and reports the distance of (f', h') from the family-4
    right-end conditions (-1, 0).  Blow-ups are recorded per cell, not fatal;
    the minimum defect excludes them.
    """
    if params.family != 4:
        raise ValidationError(f"probe_ke_m4 needs family 4, got {params.family}")
    m, n, p = params.m, params.n, params.p
    mnp = m * n / p
    cells: list[ProbeCell] = []
    h_floor_fraction = 1e-4

    for a in a_grid:
        for e_const in lambda_grid:
            if a <= 0:
                cells.append(
                    ProbeCell(a, e_const, "blowup", None, None, None, None, math.inf)
                )
                continue
            xx0 = -mnp / a - m / a + 0.5 * e_const * a
            cc = e_const * a ** (2 * m + 2) / (2 * m + 2) - mnp * a ** (2 * m)

            def h2_of(h: float, E=e_const, C=cc) -> float:
                return -E * h / (2 * m + 2) + C * h ** (-(2 * m + 1))

            def rhs(r, v, E=e_const, C=cc):
                return [v[1], -E * v[0] / (2 * m + 2) + C * v[0] ** (-(2 * m + 1))]

            h_floor = h_floor_fraction * a
            events = [
                lambda r, v: v[1],  # h' returns to zero: f-zero with h > 0
                lambda r, v, hf=h_floor: v[0] - hf,  # h collapses: f-zero with h -> 0
            ]
            try:
                traj = rk_integrate(
                    rhs,
                    [a, 0.0],
                    0.0,
                    horizon,
                    Tolerance(1e-10, 1e-10),
                    events=events,
                )
            except (BlowUpError, SolverFailure, ArithmeticError):
                cells.append(
                    ProbeCell(a, e_const, "blowup", None, None, None, None, xx0)
                )
                continue
            if traj.event_index is None:
                cells.append(
                    ProbeCell(a, e_const, "no_event", traj.r_end, None, None, None, xx0)
                )
                continue
            h, h1 = traj.y_end
            f_prime = -(p / (m * n)) * (h1 * h1 + h * h2_of(h))
            defect = math.hypot(f_prime + 1.0, h1)
            status = "closed" if traj.event_index == 0 else "collapsed"
            cells.append(
                ProbeCell(a, e_const, status, traj.r_end, f_prime, h1, defect, xx0)
            )
    usable = [c.defect for c in cells if c.defect is not None]
    if usable:
        mind = min(usable)
        arg = next(c for c in cells if c.defect == mind)
        return ProbeReport(cells, mind, arg)
    return ProbeReport(cells, None, None)
