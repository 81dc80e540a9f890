"""Pointwise curvature and torsion quantities of the metrics g(f, h).

Every function takes the structure parameters (m, p, n, lambda) and order-3
profile jets and evaluates one reduced closed form.  Components are stored
unnormalized, i.e. with their metric prefactors exactly as they appear in the
reduced expressions: the circle/normal block carries c_a f^2 with
c_a = 2m(m-1)n^2/p^2, the horizontal block carries h^2.  Mixed components
vanish identically and are not stored.  Normalization (dividing out the
metric coefficients) happens only in the classifiers.

All functions are pure; grid evaluation is embarrassingly parallel.
"""

from __future__ import annotations

from dataclasses import dataclass

from .catalog import FamilyParams
from .profiles import MetricProfile, ProfileJets


@dataclass(frozen=True)
class CurvaturePoint:
    """Every scalar quantity at one parameter value r.

    ``ric1_NN == ric1_TT`` and ``ric2_NN == ric2_TT`` hold by construction
    and are not stored separately.
    """

    r: float
    f: float
    h: float
    kahler_residual: float
    ric_NN: float
    ric_TT: float
    ric_XX: float
    scal: float
    ric1_TT: float
    ric1_XX: float
    ric2_TT: float
    ric2_XX: float
    scal_ch: float
    theta_N: float
    torsion_coeff: float
    pluriclosed_coeff: float
    gauduchon_Q: float

    CSV_FIELDS = (
        "r", "f", "h", "K", "ric_NN", "ric_TT", "ric_XX", "scal",
        "ric1_TT", "ric1_XX", "ric2_TT", "ric2_XX", "scal_ch",
        "theta_N", "torsion_coeff", "pluriclosed_coeff", "gauduchon_Q",
    )

    def csv_row(self) -> tuple[float, ...]:
        return (
            self.r, self.f, self.h, self.kahler_residual,
            self.ric_NN, self.ric_TT, self.ric_XX, self.scal,
            self.ric1_TT, self.ric1_XX, self.ric2_TT, self.ric2_XX, self.scal_ch,
            self.theta_N, self.torsion_coeff, self.pluriclosed_coeff, self.gauduchon_Q,
        )


def kahler_residual(params: FamilyParams, j: ProfileJets) -> float:
    """K = h h' + (mn/p) f; the metric is Kahler exactly on K == 0."""
    return j.h0 * j.h1 + params.mn_over_p * j.f0


def riemannian_ricci(
    params: FamilyParams, j: ProfileJets
) -> tuple[float, float, float, float]:
    """Riemannian Ricci components (NN, TT, XX) and the scalar curvature."""
    m = params.m
    q = params.mn_over_p
    ca = params.tt_coeff
    f, f1, f2 = j.f0, j.f1, j.f2
    h, h1, h2 = j.h0, j.h1, j.h2
    ric_nn = ca * f * f * (-f2 / f - 2 * (m - 1) * h2 / h)
    ric_tt = ca * f * f * (
        -f2 / f - 2 * (m - 1) * (f1 / f) * (h1 / h) + 2 * (m - 1) * q * q * f * f / h**4
    )
    ric_xx = h * h * (
        -h2 / h
        - (f1 / f) * (h1 / h)
        - (2 * m - 3) * (h1 / h) ** 2
        - 2 * q * q * f * f / h**4
        + 2 * m / (h * h)
    )
    scal = (
        -2 * f2 / f
        - 4 * (m - 1) * h2 / h
        - 4 * (m - 1) * (f1 / f) * (h1 / h)
        - 2 * (m - 1) * (2 * m - 3) * (h1 / h) ** 2
        + 4 * m * (m - 1) / (h * h)
        - 2 * (m - 1) * q * q * f * f / h**4
    )
    return ric_nn, ric_tt, ric_xx, scal


def chern_ricci(
    params: FamilyParams, j: ProfileJets
) -> tuple[float, float, float, float]:
    """First and second Chern-Ricci components (ric1_TT, ric1_XX, ric2_TT, ric2_XX).

    The NN entries equal the TT entries for both tensors; mixed entries vanish.
    """
    m, n, p = params.m, params.n, params.p
    q = params.mn_over_p
    ca = params.tt_coeff
    f, f1, f2 = j.f0, j.f1, j.f2
    h, h1, h2 = j.h0, j.h1, j.h2
    ric1_tt = ca * f * f * (
        -f2 / f + (m - 1) * (-h2 / h + (h1 / h) ** 2 - (f1 / f) * (h1 / h))
    )
    ric1_xx = h * h * (
        (2 * m * n / p) * (f / (h * h)) * (f1 / f + (m - 1) * h1 / h) + 2 * m / (h * h)
    )
    ric2_tt = ca * f * f * (
        -f2 / f
        + (2 * m * (m - 1) * n / p) * f1 / (h * h)
        + (2 * m * m * (m - 1) * n * n / (p * p)) * f * f / h**4
    )
    ric2_xx = h * h * (
        -h2 / h
        + (h1 / h) ** 2
        - (f1 / f) * (h1 / h)
        + (2 * m * (m - 1) * n / p) * f * h1 / h**3
        - 2 * q * q * f * f / h**4
        + 2 * m / (h * h)
    )
    return ric1_tt, ric1_xx, ric2_tt, ric2_xx


def chern_scalar(params: FamilyParams, j: ProfileJets) -> float:
    """Chern-scalar curvature (the trace of either Chern-Ricci tensor)."""
    m, n, p = params.m, params.n, params.p
    f, f1, f2 = j.f0, j.f1, j.f2
    h, h1, h2 = j.h0, j.h1, j.h2
    return (
        -2 * f2 / f
        - 2 * (m - 1) * h2 / h
        + 2 * (m - 1) * (h1 / h - f1 / f) * (h1 / h)
        + 4 * m * (m - 1) / (h * h)
        + (4 * m * (m - 1) * n / p) * (f1 + (m - 1) * f * h1 / h) / (h * h)
    )


def lee_form(params: FamilyParams, j: ProfileJets) -> tuple[float, float]:
    """Lee form on the normal direction and the torsion scalar factor.

    theta_N = 2(m-1) * torsion_coeff holds exactly (shared factor computed
    once; the independent-path identity is exercised in the tests).
    """
    m, n, p = params.m, params.n, params.p
    lam = params.lam
    k = kahler_residual(params, j)
    torsion = (2 * m * n / (lam * p)) * (j.f0 / (j.h0 * j.h0)) * k
    theta = (4 * m * (m - 1) * n / (lam * p)) * (j.f0 / (j.h0 * j.h0)) * k
    return theta, torsion


def theta_derivative(params: FamilyParams, j: ProfileJets) -> float:
    """d/dr of theta_N, evaluated from the order-2 jet data."""
    m, n, p = params.m, params.n, params.p
    lam = params.lam
    c = 4 * m * (m - 1) * n / (lam * p)
    f, f1 = j.f0, j.f1
    h, h1 = j.h0, j.h1
    k = kahler_residual(params, j)
    kprime = j.h1 * j.h1 + j.h0 * j.h2 + params.mn_over_p * j.f1
    g = f / (h * h)
    gprime = f1 / (h * h) - 2 * f * h1 / h**3
    return c * (gprime * k + g * kprime)


def lee_covariant_derivative(
    params: FamilyParams, j: ProfileJets, theta_jet: float
) -> tuple[float, float, float]:
    """Nonzero components of the Levi-Civita derivative of the Lee form.

    ``theta_jet`` is d(theta_N)/dr, e.g. from :func:`theta_derivative` or a
    finite difference.  Returns (D_N theta(N), D_T theta(T), the coefficient
    of Q(X, Y) in D_Y theta(X)).
    """
    m, n, p = params.m, params.n, params.p
    lam = params.lam
    theta, _ = lee_form(params, j)
    pref = 2 * m * n / (lam * p)
    dn_n = pref * (j.f0 * theta_jet - j.f1 * theta)
    dt_t = pref * j.f1 * theta
    dy_x = (lam * p / (2 * m * n)) * (j.h0 * j.h1 / j.f0) * theta
    return dn_n, dt_t, dy_x


def pluriclosed_coeff(params: FamilyParams, j: ProfileJets) -> float:
    """Scalar factor of the pluriclosed residual 4-form: 4(mn/p) f K."""
    return 4.0 * params.mn_over_p * j.f0 * kahler_residual(params, j)


def gauduchon_quantity(params: FamilyParams, j: ProfileJets) -> float:
    """K f h^(2(m-2)); the metric is Gauduchon exactly when this is constant.

    At m = 2 the power h^0 is 1 by convention.
    """
    m = params.m
    hpow = 1.0 if m == 2 else j.h0 ** (2 * (m - 2))
    return kahler_residual(params, j) * j.f0 * hpow


@dataclass(frozen=True)
class ConnectionTables:
    """Scalar coefficients of the nonzero connection components.

    Keys name (direction, argument) with the output direction implied by the
    reduced form; shared slots between the Levi-Civita and Chern tables agree
    exactly on Kahler profiles.
    """

    levi_civita: dict
    chern: dict

    def torsion_reconstructed(self) -> float:
        """tau(N, X*) coefficient from (Chern - Levi-Civita) data."""
        return (self.chern[("N", "X", "X")] - self.chern[("Y", "N", "Y")]) - (
            self.levi_civita[("N", "X", "X")] - self.levi_civita[("Y", "N", "Y")]
        )


def connection_tables(params: FamilyParams, j: ProfileJets) -> ConnectionTables:
    """All nonzero Levi-Civita and Chern connection coefficients at r.

    Exists for cross-validation only; curvature formulas are evaluated
    directly from their reduced closed forms.
    """
    m, n, p = params.m, params.n, params.p
    lam = params.lam
    f, f1 = j.f0, j.f1
    h, h1 = j.h0, j.h1
    mnp = m * n / p
    pref = 2 * m * n / (lam * p)
    ratio2 = (2.0 / lam) * mnp * mnp * f * f / (h * h)
    lc = {
        # D_{Y*} X*: (lam/2) Q(JX,Y) T* - (lam/2)(p/(mn)) (h h'/f) Q(X,Y) N
        ("Y", "X", "T"): lam / 2.0,
        ("Y", "X", "N"): -(lam / 2.0) * (h * h1 / (mnp * f)),
        # D_{T*} X* = -(2/lam)(mn/p)^2 f^2/h^2 (JX)*
        ("T", "X", "JX"): -ratio2,
        # D_N X* = pref f h'/h X*
        ("N", "X", "X"): pref * f * h1 / h,
        # D_{Y*} T* = (lam - (2/lam)(mn/p)^2 f^2/h^2) (JY)*
        ("Y", "T", "JY"): lam - ratio2,
        # D_{T*} T* = -pref f' N
        ("T", "T", "N"): -pref * f1,
        # D_N T* = pref f' T*
        ("N", "T", "T"): pref * f1,
        # D_{Y*} N = pref f h'/h Y*
        ("Y", "N", "Y"): pref * f * h1 / h,
        # D_{T*} N = pref f' T*
        ("T", "N", "T"): pref * f1,
        # D_N N = pref f' N
        ("N", "N", "N"): pref * f1,
    }
    ch = {
        # nabla_{Y*} X*: (lam/2)(Q(JX,Y) T* + Q(X,Y) N)
        ("Y", "X", "T"): lam / 2.0,
        ("Y", "X", "N"): lam / 2.0,
        # nabla_{T*} X* = pref f h'/h (JX)*
        ("T", "X", "JX"): pref * f * h1 / h,
        # nabla_N X* = pref f h'/h X*
        ("N", "X", "X"): pref * f * h1 / h,
        ("Y", "T", "JY"): lam - ratio2,
        ("T", "T", "N"): -pref * f1,
        ("N", "T", "T"): pref * f1,
        # nabla_{Y*} N = -(2/lam)(mn/p)^2 f^2/h^2 Y*
        ("Y", "N", "Y"): -ratio2,
        ("T", "N", "T"): pref * f1,
        ("N", "N", "N"): pref * f1,
    }
    return ConnectionTables(lc, ch)


def curvature_point(params: FamilyParams, profile: MetricProfile, r: float) -> CurvaturePoint:
    """Assemble every stored quantity at one interior point."""
    j = profile.jets(r)
    ric_nn, ric_tt, ric_xx, scal = riemannian_ricci(params, j)
    ric1_tt, ric1_xx, ric2_tt, ric2_xx = chern_ricci(params, j)
    theta, torsion = lee_form(params, j)
    return CurvaturePoint(
        r=r,
        f=j.f0,
        h=j.h0,
        kahler_residual=kahler_residual(params, j),
        ric_NN=ric_nn,
        ric_TT=ric_tt,
        ric_XX=ric_xx,
        scal=scal,
        ric1_TT=ric1_tt,
        ric1_XX=ric1_xx,
        ric2_TT=ric2_tt,
        ric2_XX=ric2_xx,
        scal_ch=chern_scalar(params, j),
        theta_N=theta,
        torsion_coeff=torsion,
        pluriclosed_coeff=pluriclosed_coeff(params, j),
        gauduchon_Q=gauduchon_quantity(params, j),
    )


def evaluate_grid(
    params: FamilyParams, profile: MetricProfile, grid, threads: int = 1
) -> list[CurvaturePoint]:
    """CurvaturePoint at every grid value; order matches the input grid."""
    if threads > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(lambda r: curvature_point(params, profile, r), grid))
    return [curvature_point(params, profile, r) for r in grid]


def normalized_ric2(params: FamilyParams, j: ProfileJets) -> tuple[float, float]:
    """The two sides of the Einstein comparison: ric2_TT/(c_a f^2), ric2_XX/h^2."""
    _, _, ric2_tt, ric2_xx = chern_ricci(params, j)
    ca = params.tt_coeff
    return ric2_tt / (ca * j.f0 * j.f0), ric2_xx / (j.h0 * j.h0)
