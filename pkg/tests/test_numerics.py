import math
import random

import pytest

from cohomlab.errors import BracketError, SingularSystemError
from cohomlab.numerics import (
    Tolerance,
    fd3_order4,
    fd_derivative,
    find_root_bracketed,
    gauss_legendre_nodes,
    integrate_gl,
    integrate_sqrt_endpoint,
    invert_monotone,
    linspace,
    rk_integrate,
    solve_banded,
    solve_linear,
    solve_linear_3,
)


class TestQuadrature:
    def test_gl_nodes_weights(self):
        nodes, weights = gauss_legendre_nodes(32)
        assert abs(sum(weights) - 2.0) < 1e-14
        assert abs(sum(w * x for x, w in zip(nodes, weights))) < 1e-14

    def test_polynomial_exactness(self):
        # 32-point rule integrates degree-63 polynomials exactly
        val = integrate_gl(lambda x: x**20, 0.0, 1.0)
        assert abs(val - 1.0 / 21.0) < 1e-15

    def test_sqrt_endpoint_linear(self):
        val = integrate_sqrt_endpoint(lambda t: 4.0 * (t - 1.0), 1.0, 2.0, ("left",))
        assert abs(val - 1.0) < 1e-10

    def test_sqrt_endpoint_acosh(self):
        val = integrate_sqrt_endpoint(lambda t: t * t - 1.0, 1.0, 2.0, ("left",))
        assert abs(val - math.acosh(2.0)) < 1e-10

    def test_sqrt_endpoint_both_ends(self):
        val = integrate_sqrt_endpoint(
            lambda t: (t - 1.0) * (2.0 - t), 1.0, 2.0, ("left", "right")
        )
        assert abs(val - math.pi) < 1e-10

    def test_sqrt_endpoint_rejects_nonpositive(self):
        with pytest.raises(Exception):
            integrate_sqrt_endpoint(lambda t: -1.0, 1.0, 2.0, ("left",))


class TestRoots:
    def test_brent_cos(self):
        assert abs(find_root_bracketed(math.cos, 1.0, 2.0) - math.pi / 2) < 1e-12

    def test_brent_needs_bracket(self):
        with pytest.raises(BracketError):
            find_root_bracketed(math.cos, 0.1, 1.0)

    def test_invert_monotone(self):
        x = invert_monotone(lambda t: t**3 + t, 10.0, 0.0, 3.0, dfn=lambda t: 3 * t * t + 1)
        assert abs(x**3 + x - 10.0) < 1e-10


class TestLinear:
    def test_identity(self):
        x, res = solve_linear_3([[1, 0, 0], [0, 1, 0], [0, 0, 1]], [1, 2, 3])
        assert x == [1.0, 2.0, 3.0]
        assert res == 0.0

    def test_generic(self):
        x, res = solve_linear([[2, 1, -1], [-3, -1, 2], [-2, 1, 2]], [8, -11, -3])
        assert max(abs(a - b) for a, b in zip(x, [2.0, 3.0, -1.0])) < 1e-12
        assert res < 1e-12

    def test_singular(self):
        with pytest.raises(SingularSystemError):
            solve_linear_3([[1, 2, 3], [1, 2, 3], [0, 0, 1]], [1, 1, 1])

    def test_banded_tridiagonal(self):
        n = 50
        rows = lambda i: [(j, 2.0 if j == i else -1.0) for j in (i - 1, i, i + 1) if 0 <= j < n]
        b = [1.0] * n
        x = solve_banded(1, 1, rows, b)
        # verify A x = b
        for i in range(n):
            acc = sum(v * x[j] for j, v in rows(i))
            assert abs(acc - 1.0) < 1e-10


class TestFiniteDifferences:
    def test_orders(self):
        f = math.sin
        x = 0.7
        assert abs(fd_derivative(f, x, 1) - math.cos(x)) < 1e-10
        assert abs(fd_derivative(f, x, 2) + math.sin(x)) < 1e-7
        assert abs(fd_derivative(f, x, 3, h=1e-3) + math.cos(x)) < 1e-6

    def test_fd3_order4_cubic_exact(self):
        assert abs(fd3_order4(lambda x: x**3, 2.0, 0.1) - 6.0) < 1e-10


class TestRungeKutta:
    def test_exponential(self):
        traj = rk_integrate(lambda r, y: [y[0]], [1.0], 0.0, 1.0, Tolerance(1e-10, 1e-10))
        assert abs(traj.y_end[0] - math.e) < 1e-10

    def test_dense_output(self):
        traj = rk_integrate(lambda r, y: [y[0]], [1.0], 0.0, 1.0, Tolerance(1e-10, 1e-10))
        worst = max(abs(traj(r)[0] - math.exp(r)) for r in linspace(0.0, 1.0, 37))
        assert worst < 1e-9

    def test_power_law_decay(self):
        # v' = A v / r with A = diag(0, -2, 0, -1), regular part off, from r0 = 1
        diag = (0.0, -2.0, 0.0, -1.0)
        traj = rk_integrate(
            lambda r, v: [diag[i] * v[i] / r for i in range(4)],
            [1.0, 1.0, 1.0, 1.0],
            1.0,
            3.0,
            Tolerance(1e-12, 1e-12),
        )
        expected = [3.0**d for d in diag]
        assert max(abs(a - b) for a, b in zip(traj.y_end, expected)) < 1e-10

    def test_harmonic_energy_drift(self):
        traj = rk_integrate(
            lambda r, y: [y[1], -y[0]],
            [1.0, 0.0],
            0.0,
            200.0 * math.pi,
            Tolerance(1e-10, 1e-10),
        )
        energy = traj.y_end[0] ** 2 + traj.y_end[1] ** 2
        assert abs(energy - 1.0) < 1e-8

    def test_convergence_order(self):
        # global error versus accepted step count under tolerance tightening
        errs = []
        for tol in (1e-5, 1e-9):
            traj = rk_integrate(
                lambda r, y: [math.cos(r) * y[0]],
                [1.0],
                0.0,
                5.0,
                Tolerance(tol, tol),
            )
            errs.append((abs(traj.y_end[0] - math.exp(math.sin(5.0))), len(traj.steps)))
        (e1, n1), (e2, n2) = errs
        order = math.log(e1 / e2) / math.log(n2 / n1)
        assert order >= 4.5

    def test_event_location(self):
        # y = sin(r): event y - 1/2 first crossed at pi/6
        traj = rk_integrate(
            lambda r, y: [math.cos(r)],
            [0.0],
            0.0,
            3.0,
            Tolerance(1e-12, 1e-12),
            events=[lambda r, y: y[0] - 0.5],
        )
        assert traj.event_index == 0
        assert abs(traj.event_r - math.pi / 6) < 1e-9

    def test_determinism(self):
        def run():
            t = rk_integrate(
                lambda r, y: [y[1], -math.sin(y[0])],
                [1.0, 0.3],
                0.0,
                10.0,
                Tolerance(1e-9, 1e-9),
            )
            return t.y_end

        assert run() == run()
