import numpy as np
import pytest

from exner.numerics import (
    EdgeValues,
    FivePointSystem,
    IterationError,
    LimiterParams,
    SingularSystemError,
    TridiagonalSystem,
    interface_means,
    limited_slopes,
    minmod3,
    op_dx_centered,
    op_dx_upwind,
    reconstruct,
    rusanov_from_values,
    rusanov_interface,
    solve_spd,
    solve_tridiagonal,
)

LIM = LimiterParams()


class TestMinmod:
    @pytest.mark.parametrize("abc,expected", [
        ((1, 2, 3), 1.0),
        ((-1, 2, 3), 0.0),
        ((-3, -2, -1), -1.0),
        ((0, 1, 2), 0.0),
        ((2, 0, 1), 0.0),
        ((5, 4, 3), 3.0),
    ])
    def test_values(self, abc, expected):
        assert minmod3(*abc) == expected

    def test_theta_bounds(self):
        with pytest.raises(ValueError):
            LimiterParams(theta=0.5)
        with pytest.raises(ValueError):
            LimiterParams(theta=2.5)


class TestReconstruct:
    def test_constant(self):
        ev = reconstruct(np.full(8, 3.7), LIM, dx=0.1)
        np.testing.assert_allclose(ev.left, 3.7)
        np.testing.assert_allclose(ev.right, 3.7)

    def test_linear_reproduction(self):
        dx = 0.25
        x = np.arange(10) * dx
        ev = reconstruct(x, LIM, dx)
        # interior interfaces are exact midpoints (end cells have zero slope)
        mid = 0.5 * (x[:-1] + x[1:])
        np.testing.assert_allclose(ev.left[1:-1], mid[1:-1], rtol=1e-14)
        np.testing.assert_allclose(ev.right[1:-1], mid[1:-1], rtol=1e-14)
        s = limited_slopes(x, LIM, dx)
        np.testing.assert_allclose(s[1:-1], 1.0, rtol=1e-14)

    def test_spike_clipped(self):
        v = np.zeros(9)
        v[4] = 1.0
        s = limited_slopes(v, LIM, dx=1.0)
        assert s[4] == 0.0  # mixed signs at the spike

    def test_conservative_mean(self):
        rng = np.random.default_rng(11)
        v = rng.normal(size=50)
        dx = 0.3
        ev = reconstruct(v, LIM, dx)
        # 0.5*(v-_{i+1/2} + v+_{i-1/2}) recovers the cell mean
        mean = 0.5 * (ev.left[1:] + ev.right[:-1])
        np.testing.assert_allclose(mean, v[1:-1], atol=1e-14)

    def test_total_variation_bound(self):
        # theta > 1 allows small local overshoots, but the reconstruction's
        # variation stays within (1 + 2*theta) times the cell-mean variation
        rng = np.random.default_rng(5)
        v = np.cumsum(rng.normal(size=80))
        ev = reconstruct(v, LIM, dx=1.0)
        edges = np.ravel(np.column_stack([ev.right[:-1], ev.left[1:]]))
        tv_cells = np.abs(np.diff(v)).sum()
        tv_edges = np.abs(np.diff(edges)).sum()
        assert tv_edges <= (1.0 + 2.0 * LIM.theta) * tv_cells + 1e-12

    def test_requires_ghosts(self):
        with pytest.raises(ValueError):
            reconstruct(np.array([1.0, 2.0]), LIM, dx=1.0)


class TestRusanov:
    def test_consistency(self):
        f = lambda w: w * w
        assert rusanov_interface(f, 1.5, 1.5, alpha=2.0) == 1.5**2

    def test_central_at_zero_alpha(self):
        f = lambda w: 3.0 * w
        assert rusanov_interface(f, 1.0, 2.0, alpha=0.0) == pytest.approx(4.5)

    def test_identity_hand_value(self):
        f = lambda w: w
        assert rusanov_interface(f, 0.0, 2.0, alpha=1.0) == 0.0

    def test_componentwise_tuple(self):
        f = lambda w: (w[0], 2.0 * w[1])
        out = rusanov_interface(f, (0.0, 1.0), (2.0, 3.0), alpha=1.0)
        assert out == (0.0, pytest.approx(3.0))

    def test_from_values_matches(self):
        f = lambda w: np.sin(w)
        ul, ur = np.array([0.2, 0.4]), np.array([0.3, 0.1])
        np.testing.assert_allclose(
            rusanov_interface(f, ul, ur, 0.7),
            rusanov_from_values(f(ul), f(ur), ul, ur, 0.7))

    def test_monotone_scheme_for_advection(self):
        """With alpha >= |a| and CFL <= 1 the 3-cell update is monotone:
        raising any stencil input never lowers the output."""
        a, alpha, nu = 1.0, 1.0, 0.8  # nu = a*dt/dx
        f = lambda w: a * w

        def update(um, uc, up):
            fp = rusanov_interface(f, uc, up, alpha)
            fm = rusanov_interface(f, um, uc, alpha)
            return uc - nu / a * (fp - fm)

        rng = np.random.default_rng(17)
        for _ in range(300):
            um, uc, up = rng.normal(size=3)
            eps = 1e-6
            base = update(um, uc, up)
            assert update(um + eps, uc, up) >= base - 1e-15
            assert update(um, uc + eps, up) >= base - 1e-15
            assert update(um, uc, up + eps) >= base - 1e-15


class TestOperators:
    def test_constant_and_linear(self):
        const = np.full(7, 2.0)
        np.testing.assert_allclose(op_dx_centered(const, 0.5), 0.0)
        lin = np.arange(7) * 1.5
        np.testing.assert_allclose(op_dx_centered(lin, 1.0), 1.5)

    def test_mean_interface_hand_value(self):
        eta = np.array([1.0, 2.0, 4.0])
        d = op_dx_centered(interface_means(eta), dx=1.0)
        assert d[0] == pytest.approx(1.5)  # (3 - 1.5)/1

    def test_upwind_first_order_advection(self):
        # F(v) = v with alpha = 1 degenerates to the pure upwind difference
        v = np.array([0.0, 0.0, 1.0, 1.0])
        flux = rusanov_from_values(v[:-1], v[1:], v[:-1], v[1:], alpha=1.0)
        np.testing.assert_allclose(flux, v[:-1])
        np.testing.assert_allclose(op_dx_upwind(flux, 1.0), [0.0, 1.0])

    def test_dissipation_sign(self):
        # an isolated jump produces a divergence with the sign of -alpha*jump
        v = np.array([0.0, 0.0, 1.0, 1.0])
        zero_flux = rusanov_from_values(0 * v[:-1], 0 * v[1:], v[:-1], v[1:], 1.0)
        div = op_dx_upwind(zero_flux, 1.0)
        assert div[0] < 0.0 and div[1] > 0.0


def eta_like_system(n, k, h, rng):
    """The 1D implicit surface system: diag = 1 + k(h_{i+1/2} + h_{i-1/2})."""
    hmid = 0.5 * (h[:-1] + h[1:])
    lower = np.zeros(n)
    upper = np.zeros(n)
    lower[1:] = -k * hmid
    upper[:-1] = -k * hmid
    diag = 1.0 - lower - upper  # folded zero-gradient closure
    diag[1:-1] = 1.0 + k * (hmid[:-1] + hmid[1:])
    rhs = rng.normal(size=n)
    return TridiagonalSystem(lower, diag, upper, rhs)


class TestTridiagonal:
    def test_identity(self):
        n = 12
        rhs = np.linspace(0, 1, n)
        sys = TridiagonalSystem(np.zeros(n), np.ones(n), np.zeros(n), rhs)
        np.testing.assert_allclose(solve_tridiagonal(sys), rhs)

    def test_round_trip(self):
        n = 64
        rng = np.random.default_rng(2)
        x = rng.normal(size=n)
        lower = np.full(n, -1.0)
        upper = np.full(n, -1.0)
        lower[0] = upper[-1] = 0.0
        sys = TridiagonalSystem(lower, np.full(n, 2.0), upper, np.zeros(n))
        sys.rhs = sys.matvec(x)
        np.testing.assert_allclose(solve_tridiagonal(sys), x, atol=1e-12)

    def test_eta_system_residual(self):
        rng = np.random.default_rng(9)
        for k in [0.0, 0.5, 40.0]:
            h = rng.uniform(0.2, 2.0, size=33)
            sys = eta_like_system(33, k, h, rng)
            x = solve_tridiagonal(sys)
            res = np.max(np.abs(sys.matvec(x) - sys.rhs))
            assert res <= 1e-12 * (1.0 + np.max(np.abs(sys.rhs)))

    def test_zero_coupling_is_identity(self):
        rng = np.random.default_rng(4)
        h = rng.uniform(0.2, 2.0, size=20)
        sys = eta_like_system(20, 0.0, h, rng)
        np.testing.assert_allclose(solve_tridiagonal(sys), sys.rhs)

    def test_zero_pivot_raises(self):
        n = 3
        sys = TridiagonalSystem(np.zeros(n), np.zeros(n), np.zeros(n),
                                np.ones(n))
        with pytest.raises(SingularSystemError):
            solve_tridiagonal(sys)


def five_point_system(nx, ny, kx, ky, h, rhs):
    """Assemble the folded-Neumann implicit system used by the 2D stepper."""
    hx = 0.5 * (h[:-1, :] + h[1:, :])   # (nx-1, ny) interfaces in x
    hy = 0.5 * (h[:, :-1] + h[:, 1:])   # (nx, ny-1) interfaces in y
    west = np.zeros((nx, ny))
    east = np.zeros((nx, ny))
    south = np.zeros((nx, ny))
    north = np.zeros((nx, ny))
    west[1:, :] = -kx * hx
    east[:-1, :] = -kx * hx
    south[:, 1:] = -ky * hy
    north[:, :-1] = -ky * hy
    center = 1.0 - west - east - south - north
    return FivePointSystem(center, west, east, south, north, rhs,
                           mean_coeff=kx * float(np.mean(h)))


class TestSolveSpd:
    def test_identity(self):
        rhs = np.arange(12.0).reshape(3, 4)
        sys = five_point_system(3, 4, 0.0, 0.0, np.ones((3, 4)), rhs)
        x, it = solve_spd(sys)
        np.testing.assert_allclose(x, rhs)
        assert it <= 1  # identity system: first CG step is exact

    def test_round_trip(self):
        rng = np.random.default_rng(21)
        nx, ny = 17, 13
        h = rng.uniform(0.5, 1.5, size=(nx, ny))
        x_true = rng.normal(size=(nx, ny))
        sys = five_point_system(nx, ny, 3.0, 2.0, h, np.zeros((nx, ny)))
        assert sys.is_symmetric()
        assert sys.is_diagonally_dominant()
        sys.rhs = sys.matvec(x_true)
        x, it = solve_spd(sys, tol=1e-13)
        assert it > 0
        np.testing.assert_allclose(x, x_true, atol=1e-10)
        res = np.max(np.abs(sys.matvec(x) - sys.rhs))
        assert res <= 1e-10 * max(1.0, np.max(np.abs(sys.rhs)))

    @pytest.mark.parametrize("precond", ["jacobi", "dct"])
    def test_preconditioners_agree(self, precond):
        rng = np.random.default_rng(31)
        nx, ny = 24, 24
        h = np.full((nx, ny), 1.7) + 0.01 * rng.normal(size=(nx, ny))
        sys = five_point_system(nx, ny, 60.0, 60.0, h, rng.normal(size=(nx, ny)))
        x_ref, it_ref = solve_spd(sys, tol=1e-12)
        x_pre, it_pre = solve_spd(sys, tol=1e-12, preconditioner=precond)
        np.testing.assert_allclose(x_pre, x_ref, atol=1e-9)
        if precond == "dct":
            assert it_pre < it_ref  # near-constant coefficients: dct is exact-ish

    def test_warm_start_reduces_iterations(self):
        rng = np.random.default_rng(41)
        nx = ny = 20
        h = rng.uniform(0.9, 1.1, size=(nx, ny))
        sys = five_point_system(nx, ny, 25.0, 25.0, h, rng.normal(size=(nx, ny)))
        x, it_cold = solve_spd(sys, tol=1e-12)
        _, it_warm = solve_spd(sys, tol=1e-12, x0=x)
        assert it_warm == 0

    def test_nonconvergence_raises(self):
        sys = five_point_system(8, 8, 1e6, 1e6, np.ones((8, 8)),
                                np.random.default_rng(1).normal(size=(8, 8)))
        with pytest.raises(IterationError) as ei:
            solve_spd(sys, tol=1e-14, max_iter=2)
        assert ei.value.iterations == 2
        assert ei.value.residual > 0
