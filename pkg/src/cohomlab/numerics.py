"""Shared numerical kernels.

Everything here is implemented in-repo on purpose (no numpy/scipy): the
kernels are small, scalar, and deterministic, which keeps the whole build
auditable and bit-reproducible on a fixed platform.

Contents: adaptive embedded Runge-Kutta 5(4) with PI step control and
quartic-Hermite dense output, adaptive Gauss-Legendre quadrature, quadrature
of 1/sqrt(u) with square-root endpoint substitution, Brent root finding,
small dense and banded linear solves, and central finite differences.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

from .errors import BlowUpError, BracketError, SingularSystemError, ValidationError

EPS = 2.220446049250313e-16

State = Sequence[float]
Rhs = Callable[[float, State], State]


@dataclass(frozen=True)
class Tolerance:
    """Absolute/relative tolerance pair plus a step budget."""

    abs: float = 1e-10
    rel: float = 1e-10
    max_steps: int = 1_000_000

    def __post_init__(self):
        if self.abs <= 0 or self.rel <= 0:
            raise ValidationError("tolerances must be positive")


def linspace(a: float, b: float, n: int) -> list[float]:
    if n < 1:
        raise ValidationError("linspace needs n >= 1")
    if n == 1:
        return [a]
    step = (b - a) / (n - 1)
    return [a + i * step for i in range(n - 1)] + [b]


# ---------------------------------------------------------------------------
# Gauss-Legendre quadrature
# ---------------------------------------------------------------------------

_GL_CACHE: dict[int, tuple[list[float], list[float]]] = {}


def gauss_legendre_nodes(n: int) -> tuple[list[float], list[float]]:
    """Nodes and weights of the n-point Gauss-Legendre rule on [-1, 1]."""
    if n in _GL_CACHE:
        return _GL_CACHE[n]
    nodes = [0.0] * n
    weights = [0.0] * n
    for i in range(n):
        # Newton on P_n from the Chebyshev-like initial guess.
        x = math.cos(math.pi * (i + 0.75) / (n + 0.5))
        for _ in range(100):
            p0, p1 = 1.0, x
            for j in range(2, n + 1):
                p0, p1 = p1, ((2 * j - 1) * x * p1 - (j - 1) * p0) / j
            dp = n * (x * p1 - p0) / (x * x - 1.0)
            dx = p1 / dp
            x -= dx
            if abs(dx) < 4 * EPS:
                break
        p0, p1 = 1.0, x
        for j in range(2, n + 1):
            p0, p1 = p1, ((2 * j - 1) * x * p1 - (j - 1) * p0) / j
        dp = n * (x * p1 - p0) / (x * x - 1.0)
        nodes[n - 1 - i] = x
        weights[n - 1 - i] = 2.0 / ((1.0 - x * x) * dp * dp)
    _GL_CACHE[n] = (nodes, weights)
    return nodes, weights


def _gl_panel(f: Callable[[float], float], a: float, b: float, n: int) -> float:
    nodes, weights = gauss_legendre_nodes(n)
    mid = 0.5 * (a + b)
    half = 0.5 * (b - a)
    return half * math.fsum(w * f(mid + half * x) for x, w in zip(nodes, weights))


def integrate_gl(
    f: Callable[[float], float],
    a: float,
    b: float,
    tol: float = 1e-12,
    nodes: int = 32,
    max_depth: int = 48,
) -> float:
    """Adaptive composite Gauss-Legendre integral of ``f`` over [a, b].

    Panels are bisected until the parent/children disagreement falls below
    ``tol`` (scaled by the running magnitude of the integral).
    """
    if a == b:
        return 0.0

    def recurse(lo: float, hi: float, whole: float, depth: int) -> float:
        mid = 0.5 * (lo + hi)
        left = _gl_panel(f, lo, mid, nodes)
        right = _gl_panel(f, mid, hi, nodes)
        if depth >= max_depth:
            return left + right
        if abs(left + right - whole) <= tol * max(1.0, abs(left + right)):
            return left + right
        return recurse(lo, mid, left, depth + 1) + recurse(mid, hi, right, depth + 1)

    return recurse(a, b, _gl_panel(f, a, b, nodes), 0)


def integrate_sqrt_endpoint(
    u: Callable[[float], float],
    t0: float,
    t1: float,
    ends: Sequence[str] = ("left",),
    tol: float = 1e-12,
) -> float:
    """Integral of 1/sqrt(u(t)) over [t0, t1] when u has simple zeros at ends.

    At each flagged end the substitution t = end -/+ s**2 removes the
    inverse-square-root singularity, leaving a smooth integrand for the
    adaptive Gauss-Legendre kernel.  ``ends`` is a subset of
    {"left", "right"}.
    """
    if t1 <= t0:
        raise ValidationError("integrate_sqrt_endpoint needs t1 > t0")
    for e in ends:
        if e not in ("left", "right"):
            raise ValidationError(f"unknown end flag {e!r}")
    left = "left" in ends
    right = "right" in ends

    def du_inv(t: float) -> float:
        ut = u(t)
        if ut <= 0.0:
            raise ValidationError(f"u(t) <= 0 at interior probe t={t!r}")
        return 1.0 / math.sqrt(ut)

    if not left and not right:
        return integrate_gl(du_inv, t0, t1, tol)

    mid = 0.5 * (t0 + t1)
    total = 0.0
    if left:
        smax = math.sqrt(mid - t0)
        total += integrate_gl(lambda s: 2.0 * s * du_inv(t0 + s * s), 0.0, smax, tol)
    else:
        total += integrate_gl(du_inv, t0, mid, tol)
    if right:
        smax = math.sqrt(t1 - mid)
        total += integrate_gl(lambda s: 2.0 * s * du_inv(t1 - s * s), 0.0, smax, tol)
    else:
        total += integrate_gl(du_inv, mid, t1, tol)
    return total


# ---------------------------------------------------------------------------
# Root finding
# ---------------------------------------------------------------------------


def find_root_bracketed(
    g: Callable[[float], float],
    lo: float,
    hi: float,
    tol: float = 1e-13,
    max_iter: int = 200,
) -> float:
    """Brent's method on a sign-change bracket [lo, hi].

    Raises BracketError when g(lo) and g(hi) do not have opposite signs.
    """
    a, b = lo, hi
    fa, fb = g(a), g(b)
    if fa == 0.0:
        return a
    if fb == 0.0:
        return b
    if (fa > 0.0) == (fb > 0.0):
        raise BracketError(f"no sign change on [{lo!r}, {hi!r}]")
    c, fc = a, fa
    e = d = b - a
    for _ in range(max_iter):
        if abs(fc) < abs(fb):
            a, b, c = b, c, b
            fa, fb, fc = fb, fc, fb
        tol1 = 2.0 * EPS * abs(b) + 0.5 * tol
        m = 0.5 * (c - b)
        if abs(m) <= tol1 or fb == 0.0:
            return b
        if abs(e) < tol1 or abs(fa) <= abs(fb):
            e = d = m
        else:
            s = fb / fa
            if a == c:
                p = 2.0 * m * s
                q = 1.0 - s
            else:
                q = fa / fc
                r0 = fb / fc
                p = s * (2.0 * m * q * (q - r0) - (b - a) * (r0 - 1.0))
                q = (q - 1.0) * (r0 - 1.0) * (s - 1.0)
            if p > 0.0:
                q = -q
            else:
                p = -p
            s, e = e, d
            if 2.0 * p < 3.0 * m * q - abs(tol1 * q) and p < abs(0.5 * s * q):
                d = p / q
            else:
                e = d = m
        a, fa = b, fb
        if abs(d) > tol1:
            b += d
        elif m > 0.0:
            b += tol1
        else:
            b -= tol1
        fb = g(b)
        if (fb > 0.0) == (fc > 0.0):
            c, fc = a, fa
            e = d = b - a
    return b


def invert_monotone(
    fn: Callable[[float], float],
    target: float,
    lo: float,
    hi: float,
    dfn: Callable[[float], float] | None = None,
    tol: float = 1e-12,
) -> float:
    """Solve fn(x) = target for increasing fn on [lo, hi].

    Bracketed Newton when a derivative is supplied, with bisection fallback
    whenever a Newton step leaves the bracket or stalls.
    """
    a, b = lo, hi
    fa = fn(a) - target
    if fa >= 0.0:
        return a
    fb = fn(b) - target
    if fb <= 0.0:
        return b
    x = 0.5 * (a + b)
    for _ in range(200):
        fx = fn(x) - target
        if fx > 0.0:
            b = x
        else:
            a = x
        if abs(fx) == 0.0 or (b - a) <= tol * max(1.0, abs(b)):
            return x
        moved = False
        if dfn is not None:
            d = dfn(x)
            if d > 0.0 and math.isfinite(d):
                step = fx / d
                cand = x - step
                if a < cand < b:
                    if abs(step) <= tol * max(1.0, abs(x)):
                        return cand
                    x = cand
                    moved = True
        if not moved:
            x = 0.5 * (a + b)
    return x


# ---------------------------------------------------------------------------
# Linear algebra
# ---------------------------------------------------------------------------


def solve_linear(a: Sequence[Sequence[float]], b: Sequence[float]) -> tuple[list[float], float]:
    """Dense Gaussian elimination with partial pivoting for small systems.

    Returns (x, residual) where residual = max |A x - b|.  Raises
    SingularSystemError when a pivot falls below 1e-14 times the matrix scale.
    """
    n = len(b)
    m = [list(map(float, row)) for row in a]
    if any(len(row) != n for row in m):
        raise ValidationError("solve_linear needs a square matrix")
    rhs = list(map(float, b))
    scale = max((abs(v) for row in m for v in row), default=0.0)
    if scale == 0.0:
        raise SingularSystemError("zero matrix")
    for col in range(n):
        piv = max(range(col, n), key=lambda i: abs(m[i][col]))
        if abs(m[piv][col]) < 1e-14 * scale:
            raise SingularSystemError(f"pivot {m[piv][col]!r} below threshold")
        if piv != col:
            m[col], m[piv] = m[piv], m[col]
            rhs[col], rhs[piv] = rhs[piv], rhs[col]
        inv = 1.0 / m[col][col]
        for i in range(col + 1, n):
            factor = m[i][col] * inv
            if factor == 0.0:
                continue
            m[i][col] = 0.0
            for j in range(col + 1, n):
                m[i][j] -= factor * m[col][j]
            rhs[i] -= factor * rhs[col]
    x = [0.0] * n
    for i in range(n - 1, -1, -1):
        s = rhs[i] - math.fsum(m[i][j] * x[j] for j in range(i + 1, n))
        x[i] = s / m[i][i]
    residual = max(
        abs(math.fsum(float(a[i][j]) * x[j] for j in range(n)) - float(b[i])) for i in range(n)
    )
    return x, residual


def solve_linear_3(a: Sequence[Sequence[float]], b: Sequence[float]) -> tuple[list[float], float]:
    """3x3 convenience wrapper around :func:`solve_linear`."""
    if len(b) != 3:
        raise ValidationError("solve_linear_3 needs a 3-vector")
    return solve_linear(a, b)


def solve_banded(
    kl: int, ku: int, rows: Callable[[int], list[tuple[int, float]]], b: Sequence[float]
) -> list[float]:
    """Banded Gaussian elimination without pivoting.

    ``rows(i)`` yields the nonzeros of row i as (column, value) pairs with
    i - kl <= column <= i + ku.  Intended for totally positive collocation
    matrices (B-spline interpolation), where unpivoted elimination is stable;
    a zero-pivot guard raises SingularSystemError otherwise.
    """
    n = len(b)
    width = kl + ku + 1
    band = [[0.0] * width for _ in range(n)]  # column j of row i at band[i][j - i + kl]
    for i in range(n):
        for j, v in rows(i):
            if not (i - kl <= j <= i + ku):
                raise ValidationError(f"entry ({i},{j}) outside band")
            band[i][j - i + kl] = v
    rhs = list(map(float, b))
    scale = max((abs(v) for row in band for v in row), default=0.0)
    if scale == 0.0:
        raise SingularSystemError("zero banded matrix")
    for col in range(n):
        piv = band[col][kl]
        if abs(piv) < 1e-13 * scale:
            raise SingularSystemError("banded pivot below threshold")
        for i in range(col + 1, min(n, col + kl + 1)):
            v = band[i][col - i + kl]
            if v == 0.0:
                continue
            factor = v / piv
            band[i][col - i + kl] = 0.0
            for j in range(col + 1, min(n, col + ku + 1)):
                band[i][j - i + kl] -= factor * band[col][j - col + kl]
            rhs[i] -= factor * rhs[col]
    x = [0.0] * n
    for i in range(n - 1, -1, -1):
        s = rhs[i] - math.fsum(
            band[i][j - i + kl] * x[j] for j in range(i + 1, min(n, i + ku + 1))
        )
        x[i] = s / band[i][kl]
    return x


# ---------------------------------------------------------------------------
# Finite differences
# ---------------------------------------------------------------------------


def fd_derivative(
    f: Callable[[float], float],
    x: float,
    order: int = 1,
    h: float = 1e-4,
    richardson: bool = True,
) -> float:
    """Central finite difference of order 1..3, optionally Richardson-extrapolated."""

    def base(hh: float) -> float:
        if order == 1:
            return (f(x + hh) - f(x - hh)) / (2 * hh)
        if order == 2:
            return (f(x + hh) - 2 * f(x) + f(x - hh)) / (hh * hh)
        if order == 3:
            return (f(x + 2 * hh) - 2 * f(x + hh) + 2 * f(x - hh) - f(x - 2 * hh)) / (
                2 * hh**3
            )
        raise ValidationError("fd_derivative supports orders 1..3")

    if not richardson:
        return base(h)
    d1, d2 = base(h), base(h / 2)
    return (4 * d2 - d1) / 3


def fd3_order4(f: Callable[[float], float], x: float, h: float) -> float:
    """Fourth-order central stencil for the third derivative."""
    return (
        -f(x + 3 * h)
        + 8 * f(x + 2 * h)
        - 13 * f(x + h)
        + 13 * f(x - h)
        - 8 * f(x - 2 * h)
        + f(x - 3 * h)
    ) / (8 * h**3)


# ---------------------------------------------------------------------------
# Runge-Kutta 5(4), Dormand-Prince pair
# ---------------------------------------------------------------------------

_DP_C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0)
_DP_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
_DP_E = (  # b5 - b4, applied to stages for the embedded error estimate
    35 / 384 - 5179 / 57600,
    0.0,
    500 / 1113 - 7571 / 16695,
    125 / 192 - 393 / 640,
    -2187 / 6784 + 92097 / 339200,
    11 / 84 - 187 / 2100,
    -1 / 40,
)
_DP_D = (  # Hairer's dense-output weights (continuous 4th-order extension)
    -12715105075 / 11282082432,
    0.0,
    87487479700 / 32700410799,
    -10690763975 / 1880347072,
    701980252875 / 199316789632,
    -1453857185 / 822651844,
    69997945 / 29380423,
)


@dataclass(frozen=True)
class StepRecord:
    """One accepted step with the data of its quartic Hermite interpolant."""

    r0: float
    h: float
    y0: tuple[float, ...]
    f0: tuple[float, ...]
    y1: tuple[float, ...]
    f1: tuple[float, ...]
    ymid: tuple[float, ...]

    def eval(self, r: float) -> list[float]:
        th = (r - self.r0) / self.h
        out = []
        for i in range(len(self.y0)):
            a0 = self.y0[i]
            a1 = self.h * self.f0[i]
            aa = self.y1[i] - a0 - a1
            bb = self.h * self.f1[i] - a1
            cc = self.ymid[i] - a0 - 0.5 * a1
            a4 = 16 * cc - 8 * aa + 2 * bb
            a3 = 14 * aa - 3 * bb - 32 * cc
            a2 = -5 * aa + bb + 16 * cc
            out.append(a0 + th * (a1 + th * (a2 + th * (a3 + th * a4))))
        return out

    def eval_derivative(self, r: float) -> list[float]:
        th = (r - self.r0) / self.h
        out = []
        for i in range(len(self.y0)):
            a1 = self.h * self.f0[i]
            aa = self.y1[i] - self.y0[i] - a1
            bb = self.h * self.f1[i] - a1
            cc = self.ymid[i] - self.y0[i] - 0.5 * a1
            a4 = 16 * cc - 8 * aa + 2 * bb
            a3 = 14 * aa - 3 * bb - 32 * cc
            a2 = -5 * aa + bb + 16 * cc
            out.append((a1 + th * (2 * a2 + th * (3 * a3 + th * 4 * a4))) / self.h)
        return out


@dataclass
class Trajectory:
    """Dense-output solution of :func:`rk_integrate`."""

    r0: float
    r_end: float
    y_end: tuple[float, ...]
    steps: list[StepRecord] = field(default_factory=list)
    n_rhs: int = 0
    event_index: int | None = None
    event_r: float | None = None

    def __call__(self, r: float) -> list[float]:
        lo, hi = self.r0, self.r_end
        a, b = (lo, hi) if lo <= hi else (hi, lo)
        if not (a - 1e-12 * max(1.0, abs(a)) <= r <= b + 1e-12 * max(1.0, abs(b))):
            raise ValidationError(f"r={r!r} outside trajectory range [{a!r}, {b!r}]")
        steps = self.steps
        ilo, ihi = 0, len(steps) - 1
        while ilo < ihi:
            mid = (ilo + ihi) // 2
            s = steps[mid]
            if (r - s.r0 - s.h) * math.copysign(1.0, s.h) > 0:
                ilo = mid + 1
            else:
                ihi = mid
        return steps[ilo].eval(r)


# Conservative calibration: the raw embedded estimate is scaled up so that the
# requested tolerance bounds the observed global drift on canonical smooth
# problems (exponential, harmonic oscillator over 100 periods).
_ERR_CAL = 8.0


def _error_norm(err: Sequence[float], y0: State, y1: State, tol: Tolerance) -> float:
    acc = 0.0
    n = len(err)
    for i in range(n):
        sc = tol.abs + tol.rel * max(abs(y0[i]), abs(y1[i]))
        acc += (err[i] / sc) ** 2
    return _ERR_CAL * math.sqrt(acc / n)


def rk_integrate(
    rhs: Rhs,
    y0: State,
    r0: float,
    r1: float,
    tol: Tolerance = Tolerance(),
    events: Sequence[Callable[[float, State], float]] | None = None,
    h0: float | None = None,
    dense_check: bool = True,
) -> Trajectory:
    """Integrate y' = rhs(r, y) from r0 to r1 with the Dormand-Prince 5(4) pair.

    PI step-size control (Hairer's constants); dense output is the quartic
    Hermite interpolant through the step endpoints, endpoint slopes and the
    4th-order midpoint value, whose midpoint defect participates in step
    acceptance when ``dense_check`` is set.  When an event function changes
    sign across a step the integration stops at the located root.

    Raises BlowUpError on step-size underflow, with the last good r attached.
    """
    if r1 == r0:
        yt = tuple(map(float, y0))
        return Trajectory(r0, r1, yt, [], 0)
    direction = 1.0 if r1 > r0 else -1.0
    y = list(map(float, y0))
    r = float(r0)
    f_now = [float(v) for v in rhs(r, y)]
    n_rhs = 1
    n = len(y)

    # Hairer-style initial step when none is given.
    if h0 is None:
        sc = [tol.abs + tol.rel * abs(v) for v in y]
        d0 = math.sqrt(math.fsum((y[i] / sc[i]) ** 2 for i in range(n)) / n)
        d1 = math.sqrt(math.fsum((f_now[i] / sc[i]) ** 2 for i in range(n)) / n)
        h = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
        h = min(h, abs(r1 - r0))
        try:
            y1g = [y[i] + direction * h * f_now[i] for i in range(n)]
            f1g = rhs(r + direction * h, y1g)
            n_rhs += 1
            d2 = (
                math.sqrt(math.fsum(((f1g[i] - f_now[i]) / sc[i]) ** 2 for i in range(n)) / n)
                / h
            )
            dmax = max(d1, d2)
            h1 = (0.01 / dmax) ** 0.2 if dmax > 1e-15 else max(1e-6, h * 1e-3)
            h = min(100 * h, h1, abs(r1 - r0))
        except (ArithmeticError, ValueError):
            h = min(1e-6, abs(r1 - r0))
    else:
        h = min(abs(h0), abs(r1 - r0))

    traj = Trajectory(r0, r0, tuple(y), [], 0)
    ev_vals = [g(r, y) for g in events] if events else []
    facold = 1e-4
    steps_taken = 0
    while direction * (r1 - r) > 0:
        steps_taken += 1
        if steps_taken > tol.max_steps:
            raise BlowUpError("step budget exhausted", r_last=r)
        h = min(h, abs(r1 - r))
        if h < 16 * EPS * max(abs(r), 1.0):
            raise BlowUpError("step size underflow", r_last=r)
        hs = direction * h
        k = [f_now] + [None] * 6  # type: ignore[list-item]
        bad = False
        for s in range(1, 7):
            ys = [
                y[i] + hs * math.fsum(_DP_A[s][j] * k[j][i] for j in range(s))
                for i in range(n)
            ]
            try:
                k[s] = [float(v) for v in rhs(r + _DP_C[s] * hs, ys)]
            except (ArithmeticError, ValueError):
                bad = True
                break
            n_rhs += 1
            if any(not math.isfinite(v) for v in k[s]):
                bad = True
                break
        if bad:
            h *= 0.25
            continue
        y_new = ys  # stage 7 state equals the 5th-order solution (FSAL)
        f_new = k[6]
        err_vec = [hs * math.fsum(_DP_E[j] * k[j][i] for j in range(7)) for i in range(n)]
        err = _error_norm(err_vec, y, y_new, tol)
        if not math.isfinite(err):
            h *= 0.25
            continue

        if err <= 1.0:
            # 4th-order midpoint value (Hairer continuous extension at theta=1/2)
            ymid = []
            for i in range(n):
                ydiff = y_new[i] - y[i]
                bspl = hs * k[0][i] - ydiff
                r5 = hs * math.fsum(_DP_D[j] * k[j][i] for j in range(7))
                th = 0.5
                ymid.append(
                    y[i]
                    + th * (ydiff + (1 - th) * (bspl + th * (ydiff - hs * f_new[i] - bspl + (1 - th) * r5)))
                )
            step = StepRecord(r, hs, tuple(y), tuple(k[0]), tuple(y_new), tuple(f_new), tuple(ymid))
            if dense_check:
                rm = r + 0.5 * hs
                pm = step.eval(rm)
                dpm = step.eval_derivative(rm)
                try:
                    fm = rhs(rm, pm)
                    n_rhs += 1
                    defect = [hs * (dpm[i] - fm[i]) for i in range(n)]
                    err_dense = 0.05 * _error_norm(defect, y, y_new, tol)
                except (ArithmeticError, ValueError):
                    err_dense = 2.0
                if not math.isfinite(err_dense):
                    err_dense = 2.0
                if err_dense > 1.0:
                    h *= 0.5
                    continue
            traj.steps.append(step)
            r_new = r + hs

            if events:
                new_vals = [g(r_new, y_new) for g in events]
                hit = None
                for idx in range(len(events)):
                    v0, v1 = ev_vals[idx], new_vals[idx]
                    if v0 == 0.0 and v1 == 0.0:
                        continue
                    if v1 == 0.0 or (v0 < 0.0 < v1) or (v1 < 0.0 < v0):
                        g = events[idx]
                        if v1 == 0.0:
                            r_star = r_new
                        else:
                            r_star = find_root_bracketed(
                                lambda rr: g(rr, step.eval(rr)), r, r_new, tol=1e-13
                            )
                        if hit is None or direction * (r_star - hit[1]) < 0:
                            hit = (idx, r_star)
                if hit is not None:
                    idx, r_star = hit
                    traj.event_index = idx
                    traj.event_r = r_star
                    traj.r_end = r_star
                    traj.y_end = tuple(step.eval(r_star))
                    traj.n_rhs = n_rhs
                    return traj
                ev_vals = new_vals

            r, y, f_now = r_new, y_new, f_new
            fac11 = err**0.17 if err > 0 else 1e-10
            fac = max(0.1, min(5.0, fac11 / (facold**0.04) / 0.9))
            h /= fac
            facold = max(err, 1e-4)
        else:
            fac11 = err**0.17
            h /= min(5.0, fac11 / 0.9)

    traj.r_end = r
    traj.y_end = tuple(y)
    traj.n_rhs = n_rhs
    return traj
