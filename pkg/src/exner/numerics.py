"""Spatial discretization bricks and linear solvers.

Provides the generalized MinMod reconstruction, the Rusanov interface flux,
the divided-difference operators used by the semi-implicit schemes, a Thomas
tridiagonal solver for the 1D surface-elevation system and a conjugate
gradient solver for the 2D five-point system.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numba import njit
from scipy.fft import dctn, idctn


class SingularSystemError(RuntimeError):
    """Zero pivot met while factorizing a tridiagonal system."""


class IterationError(RuntimeError):
    """Conjugate gradient failed to reach the requested residual."""

    def __init__(self, message: str, residual: float, iterations: int):
        super().__init__(f"{message} (residual={residual:.3e}, "
                         f"iterations={iterations})")
        self.residual = residual
        self.iterations = iterations


@dataclass
class LimiterParams:
    """Generalized MinMod parameter; theta = 1 is most dissipative, 2 least."""

    theta: float = 1.9

    def __post_init__(self):
        if not 1.0 <= self.theta <= 2.0:
            raise ValueError(f"theta must lie in [1, 2], got {self.theta}")


@dataclass
class EdgeValues:
    """Reconstructed one-sided values at the interfaces between consecutive
    cells: interface j sits between cells j and j+1 of the input array, so an
    input of M cells yields M-1 interfaces (N+1 with one ghost per side)."""

    left: np.ndarray
    right: np.ndarray


def minmod3(a: float, b: float, c: float) -> float:
    """sign(a) * min(|a|, |b|, |c|) when all three share a strict sign, else 0."""
    if a > 0.0 and b > 0.0 and c > 0.0:
        return min(a, b, c)
    if a < 0.0 and b < 0.0 and c < 0.0:
        return max(a, b, c)
    return 0.0


@njit(cache=True)
def _slopes_minmod(v, theta, out):
    """Limited slope*dx per cell; end cells get zero slope (no full stencil)."""
    M = v.shape[0]
    out[0] = 0.0
    out[M - 1] = 0.0
    for i in range(1, M - 1):
        a = theta * (v[i] - v[i - 1])
        b = 0.5 * (v[i + 1] - v[i - 1])
        c = theta * (v[i + 1] - v[i])
        if a > 0.0 and b > 0.0 and c > 0.0:
            out[i] = min(a, min(b, c))
        elif a < 0.0 and b < 0.0 and c < 0.0:
            out[i] = max(a, max(b, c))
        else:
            out[i] = 0.0


def limited_slopes(values: np.ndarray, lim: LimiterParams, dx: float) -> np.ndarray:
    """MinMod-limited slopes v'_i; boundary cells of the array get slope 0."""
    v = np.ascontiguousarray(values, dtype=float)
    out = np.empty_like(v)
    _slopes_minmod(v, lim.theta, out)
    return out / dx


def reconstruct(values: np.ndarray, lim: LimiterParams, dx: float) -> EdgeValues:
    """Conservative piecewise-linear reconstruction with MinMod slopes.

    Returns the one-sided values v^-|v^+ at every interface between
    consecutive cells of ``values`` (ghost cells included in the input).
    """
    v = np.asarray(values, dtype=float)
    if v.shape[0] < 3:
        raise ValueError("reconstruct needs at least one ghost cell per side")
    half = 0.5 * dx * limited_slopes(v, lim, dx)
    return EdgeValues(left=v[:-1] + half[:-1], right=v[1:] - half[1:])


def rusanov_interface(flux, u_left, u_right, alpha):
    """Rusanov flux 0.5*(F(UL) + F(UR) - alpha*(UR - UL)).

    ``flux`` maps a state (scalar, array or tuple of arrays) to its flux;
    tuples are handled component-wise.
    """
    f_left, f_right = flux(u_left), flux(u_right)
    if isinstance(f_left, tuple):
        return tuple(
            0.5 * (fl + fr - alpha * (ur - ul))
            for fl, fr, ul, ur in zip(f_left, f_right, u_left, u_right))
    return 0.5 * (f_left + f_right - alpha * (u_right - u_left))


def rusanov_from_values(f_left, f_right, w_left, w_right, alpha):
    """Rusanov flux from precomputed edge fluxes and the advected component."""
    return 0.5 * (f_left + f_right - alpha * (w_right - w_left))


def interface_means(cell_values: np.ndarray, axis: int = 0) -> np.ndarray:
    """Arithmetic interface means 0.5*(v_i + v_{i+1}) along ``axis``."""
    v = np.asarray(cell_values, dtype=float)
    lo = [slice(None)] * v.ndim
    hi = [slice(None)] * v.ndim
    lo[axis] = slice(None, -1)
    hi[axis] = slice(1, None)
    return 0.5 * (v[tuple(lo)] + v[tuple(hi)])


def op_dx_centered(interface_values: np.ndarray, dx: float,
                   axis: int = 0) -> np.ndarray:
    """Divided difference (F_{i+1/2} - F_{i-1/2}) / dx of interface values.

    For cell-centered data compose with :func:`interface_means` first.
    """
    return np.diff(np.asarray(interface_values, dtype=float), axis=axis) / dx


def op_dx_upwind(flux_values: np.ndarray, dx: float, axis: int = 0) -> np.ndarray:
    """Same divided difference, applied to Rusanov interface fluxes."""
    return op_dx_centered(flux_values, dx, axis)


@dataclass
class TridiagonalSystem:
    """Rows lower_i x_{i-1} + diag_i x_i + upper_i x_{i+1} = rhs_i
    (lower[0] and upper[-1] are ignored)."""

    lower: np.ndarray
    diag: np.ndarray
    upper: np.ndarray
    rhs: np.ndarray

    def matvec(self, x: np.ndarray) -> np.ndarray:
        y = self.diag * x
        y[1:] += self.lower[1:] * x[:-1]
        y[:-1] += self.upper[:-1] * x[1:]
        return y


@njit(cache=True)
def _thomas(lower, diag, upper, rhs, out, cp, dp):
    """Thomas forward elimination + back substitution.

    Returns the index of a vanishing pivot, or -1 on success.
    """
    n = diag.shape[0]
    if diag[0] == 0.0:
        return 0
    cp[0] = upper[0] / diag[0]
    dp[0] = rhs[0] / diag[0]
    for i in range(1, n):
        den = diag[i] - lower[i] * cp[i - 1]
        if den == 0.0:
            return i
        cp[i] = upper[i] / den
        dp[i] = (rhs[i] - lower[i] * dp[i - 1]) / den
    out[n - 1] = dp[n - 1]
    for i in range(n - 2, -1, -1):
        out[i] = dp[i] - cp[i] * out[i + 1]
    return -1


def solve_tridiagonal(sys: TridiagonalSystem) -> np.ndarray:
    """Thomas-algorithm solution of a tridiagonal system.

    Raises SingularSystemError on a zero pivot (cannot happen for the
    diagonally dominant surface-elevation system).
    """
    n = sys.diag.shape[0]
    out = np.empty(n)
    cp = np.empty(n)
    dp = np.empty(n)
    bad = _thomas(np.ascontiguousarray(sys.lower, dtype=float),
                  np.ascontiguousarray(sys.diag, dtype=float),
                  np.ascontiguousarray(sys.upper, dtype=float),
                  np.ascontiguousarray(sys.rhs, dtype=float),
                  out, cp, dp)
    if bad >= 0:
        raise SingularSystemError(f"zero pivot at row {bad}")
    return out


@dataclass
class FivePointSystem:
    """Symmetric five-point system on an Nx x Ny grid.

    Row (i, j):  center*x[i,j] + west*x[i-1,j] + east*x[i+1,j]
               + south*x[i,j-1] + north*x[i,j+1] = rhs[i,j],
    with out-of-range neighbours dropped (coefficients folded into center by
    the assembler).  Symmetry requires west[i,j] = east[i-1,j] and
    south[i,j] = north[i,j-1].
    """

    center: np.ndarray
    west: np.ndarray
    east: np.ndarray
    south: np.ndarray
    north: np.ndarray
    rhs: np.ndarray
    mean_coeff: float = field(default=0.0)  # hint for the dct preconditioner

    def matvec(self, x: np.ndarray) -> np.ndarray:
        y = self.center * x
        y[1:, :] += self.west[1:, :] * x[:-1, :]
        y[:-1, :] += self.east[:-1, :] * x[1:, :]
        y[:, 1:] += self.south[:, 1:] * x[:, :-1]
        y[:, :-1] += self.north[:, :-1] * x[:, 1:]
        return y

    def is_symmetric(self, tol: float = 0.0) -> bool:
        return (np.allclose(self.west[1:, :], self.east[:-1, :], atol=tol)
                and np.allclose(self.south[:, 1:], self.north[:, :-1], atol=tol))

    def is_diagonally_dominant(self) -> bool:
        off = np.zeros_like(self.center)
        off[1:, :] += np.abs(self.west[1:, :])
        off[:-1, :] += np.abs(self.east[:-1, :])
        off[:, 1:] += np.abs(self.south[:, 1:])
        off[:, :-1] += np.abs(self.north[:, :-1])
        return bool(np.all(self.center >= off))


def _dct_inverse_factory(sys: FivePointSystem):
    """Exact inverse of the constant-coefficient surrogate of the system.

    The folded-Neumann five-point operator with constant interface
    coefficient kh is diagonalized by the type-II DCT with symbol
    1 + 4*kh*(sin^2(pi k / 2Nx) + sin^2(pi l / 2Ny)).
    """
    nx, ny = sys.center.shape
    kh = sys.mean_coeff
    if kh <= 0.0:
        kh = max(float(np.mean(-sys.east)), float(np.mean(-sys.north)), 0.0)
    kx = np.sin(0.5 * np.pi * np.arange(nx) / nx) ** 2
    ky = np.sin(0.5 * np.pi * np.arange(ny) / ny) ** 2
    symbol = 1.0 + 4.0 * kh * (kx[:, None] + ky[None, :])

    def apply(r):
        return idctn(dctn(r, type=2, norm="ortho") / symbol,
                     type=2, norm="ortho")

    return apply


def solve_spd(sys: FivePointSystem, tol: float = 1e-12, max_iter: int = 20000,
              x0: np.ndarray | None = None,
              preconditioner: str = "none") -> tuple[np.ndarray, int]:
    """Conjugate-gradient solve of the SPD five-point system.

    Stops when ||rhs - A x|| <= tol * ||rhs||; returns (solution, iterations).
    ``preconditioner`` is "none", "jacobi" or "dct" (exact constant-coefficient
    inverse, effective when the depth field is nearly uniform).  ``x0`` warm
    starts the iteration.
    """
    b = sys.rhs
    x = np.zeros_like(b) if x0 is None else x0.astype(float, copy=True)
    r = b - sys.matvec(x)
    bnorm = float(np.linalg.norm(b))
    target = tol * (bnorm if bnorm > 0.0 else 1.0)

    if preconditioner == "jacobi":
        apply_m = lambda v: v / sys.center
    elif preconditioner == "dct":
        apply_m = _dct_inverse_factory(sys)
    elif preconditioner == "none":
        apply_m = None
    else:
        raise ValueError(f"unknown preconditioner {preconditioner!r}")

    rnorm = float(np.linalg.norm(r))
    if rnorm <= target:
        return x, 0
    z = apply_m(r) if apply_m else r
    p = z.copy()
    rz = float(np.sum(r * z))
    for it in range(1, max_iter + 1):
        ap = sys.matvec(p)
        denom = float(np.sum(p * ap))
        if denom <= 0.0:
            raise IterationError("system is not positive definite", rnorm, it)
        alpha = rz / denom
        x += alpha * p
        r -= alpha * ap
        rnorm = float(np.linalg.norm(r))
        if rnorm <= target:
            return x, it
        z = apply_m(r) if apply_m else r
        rz_new = float(np.sum(r * z))
        p = z + (rz_new / rz) * p
        rz = rz_new
    raise IterationError("conjugate gradient did not converge", rnorm, max_iter)
