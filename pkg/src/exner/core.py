"""Domain types, Grass sediment flux and wave analysis for the shallow-water
Exner system.

The 1D quasilinear system in (h, q, S) has the characteristic polynomial

    p(lam) = -lam*((u - lam)^2 - g*h) + g*h*beta*(lam - u)

whose three real roots are the wave speeds.  For weak coupling (beta << 1)
and subsonic flow the middle root is the slow sediment wave; the first-order
expansions of the three roots are provided alongside an exact cubic solver.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numba import njit

DEFAULT_GRAVITY = 9.81

# cells thinner than this are treated as dry: u = 0 there
H_DRY = 1e-8


class HyperbolicityError(ValueError):
    """Characteristic cubic has a complex (or repeated) root pair.

    Carries the discriminant of the deflated quadratic for the two
    non-extreme roots; negative values mean loss of strict hyperbolicity.
    """

    def __init__(self, message: str, discriminant: float):
        super().__init__(f"{message} (discriminant={discriminant:.6e})")
        self.discriminant = discriminant


@dataclass
class GrassParams:
    """Grass closure constants plus gravity.

    ``xi`` is always recomputed as 1/(1 - rho0) on construction.  A_g = 0 is
    allowed as the decoupled (pure shallow water) limit.
    """

    A_g: float
    m_g: float = 3.0
    rho0: float = 0.0
    g: float = DEFAULT_GRAVITY
    xi: float = field(init=False)

    def __post_init__(self):
        if not 0.0 <= self.A_g < 1.0:
            raise ValueError(f"A_g must lie in [0, 1), got {self.A_g}")
        if not 1.0 <= self.m_g <= 4.0:
            raise ValueError(f"m_g must lie in [1, 4], got {self.m_g}")
        if not 0.0 <= self.rho0 < 1.0:
            raise ValueError(f"rho0 must lie in [0, 1), got {self.rho0}")
        if not self.g > 0.0:
            raise ValueError(f"g must be positive, got {self.g}")
        self.xi = 1.0 / (1.0 - self.rho0)


@dataclass
class Grid1D:
    """Uniform partition of [a, b] into N cells with ghost layers."""

    a: float
    b: float
    N: int
    n_ghost: int = 2

    def __post_init__(self):
        if self.N < 1:
            raise ValueError(f"N must be positive, got {self.N}")
        if not self.b > self.a:
            raise ValueError(f"need b > a, got [{self.a}, {self.b}]")
        if self.n_ghost < 1:
            raise ValueError("need at least one ghost layer")

    @property
    def dx(self) -> float:
        return (self.b - self.a) / self.N

    def cell_centers(self, with_ghosts: bool = False) -> np.ndarray:
        """x_i = a + (i - 1/2) dx for i = 1..N (optionally padded)."""
        ng = self.n_ghost if with_ghosts else 0
        i = np.arange(1 - ng, self.N + ng + 1)
        return self.a + (i - 0.5) * self.dx


@dataclass
class Grid2D:
    """Uniform Cartesian mesh on [a1, b1] x [a2, b2], direction by direction."""

    a1: float
    b1: float
    a2: float
    b2: float
    Nx: int
    Ny: int
    n_ghost: int = 2

    def __post_init__(self):
        if self.Nx < 1 or self.Ny < 1:
            raise ValueError("Nx and Ny must be positive")
        if not (self.b1 > self.a1 and self.b2 > self.a2):
            raise ValueError("domain sides must have positive length")
        if self.n_ghost < 1:
            raise ValueError("need at least one ghost layer")

    @property
    def dx(self) -> float:
        return (self.b1 - self.a1) / self.Nx

    @property
    def dy(self) -> float:
        return (self.b2 - self.a2) / self.Ny

    def cell_centers(self, with_ghosts: bool = False):
        ng = self.n_ghost if with_ghosts else 0
        i = np.arange(1 - ng, self.Nx + ng + 1)
        j = np.arange(1 - ng, self.Ny + ng + 1)
        return self.a1 + (i - 0.5) * self.dx, self.a2 + (j - 0.5) * self.dy


def _padded(arr: np.ndarray, ng: int) -> np.ndarray:
    return np.pad(np.asarray(arr, dtype=float), ng, mode="edge")


@dataclass
class State1D:
    """Cell-averaged fields including ghost layers (array length N + 2*ng).

    h, q and z_b evolve; b_bed is static.  eta = h + b_bed + z_b is derived.
    """

    h: np.ndarray
    q: np.ndarray
    z_b: np.ndarray
    b_bed: np.ndarray
    ng: int = 2

    @classmethod
    def from_interior(cls, h, q, z_b, b_bed, ng: int = 2) -> "State1D":
        """Build a state from interior arrays, ghost cells edge-replicated."""
        return cls(_padded(h, ng), _padded(q, ng), _padded(z_b, ng),
                   _padded(b_bed, ng), ng)

    @property
    def inner(self) -> slice:
        return slice(self.ng, -self.ng)

    @property
    def eta(self) -> np.ndarray:
        return self.h + self.b_bed + self.z_b

    @property
    def u(self) -> np.ndarray:
        """Velocity q/h with dry cells (h <= H_DRY) set to zero."""
        wet = self.h > H_DRY
        out = np.zeros_like(self.q)
        np.divide(self.q, self.h, out=out, where=wet)
        return out

    def copy(self) -> "State1D":
        return State1D(self.h.copy(), self.q.copy(), self.z_b.copy(),
                       self.b_bed.copy(), self.ng)


@dataclass
class State2D:
    """2D analogue of State1D with momenta m = h*u and n = h*v.

    Arrays are shaped (Nx + 2*ng, Ny + 2*ng); index [i, j] maps to (x_i, y_j).
    """

    h: np.ndarray
    m: np.ndarray
    n: np.ndarray
    z_b: np.ndarray
    b_bed: np.ndarray
    ng: int = 2

    @classmethod
    def from_interior(cls, h, m, n, z_b, b_bed, ng: int = 2) -> "State2D":
        return cls(_padded(h, ng), _padded(m, ng), _padded(n, ng),
                   _padded(z_b, ng), _padded(b_bed, ng), ng)

    @property
    def inner(self):
        return (slice(self.ng, -self.ng), slice(self.ng, -self.ng))

    @property
    def eta(self) -> np.ndarray:
        return self.h + self.b_bed + self.z_b

    @property
    def u(self) -> np.ndarray:
        wet = self.h > H_DRY
        out = np.zeros_like(self.m)
        np.divide(self.m, self.h, out=out, where=wet)
        return out

    @property
    def v(self) -> np.ndarray:
        wet = self.h > H_DRY
        out = np.zeros_like(self.n)
        np.divide(self.n, self.h, out=out, where=wet)
        return out

    def copy(self) -> "State2D":
        return State2D(self.h.copy(), self.m.copy(), self.n.copy(),
                       self.z_b.copy(), self.b_bed.copy(), self.ng)


@dataclass
class WaveAnalysis:
    """Sorted eigenvalues of the 1D system plus the coupling diagnostics."""

    lambda1: float
    lambda2: float
    lambda3: float
    beta: float
    froude: float

    def as_array(self) -> np.ndarray:
        return np.array([self.lambda1, self.lambda2, self.lambda3])


def grass_flux_1d(u, p: GrassParams):
    """Solid transport discharge q_b = xi * A_g * u * |u|^(m_g - 1).

    Odd in u and strictly increasing in |u|; accepts scalars or arrays.
    """
    return p.xi * p.A_g * u * np.abs(u) ** (p.m_g - 1.0)


def grass_flux_2d(u, v, p: GrassParams):
    """2D Grass flux pair (q_xb, q_yb); rotationally equivariant."""
    s = u * u + v * v
    f = p.xi * p.A_g * s ** ((p.m_g - 1.0) / 2.0)
    return u * f, v * f


def beta_coefficient(h, u, p: GrassParams):
    """Coupling coefficient beta = m_g * xi * A_g * |u|^(m_g-1) / h.

    The |u| form extends the u > 0 formula to diagnostic sweeps with u <= 0;
    it equals d(q_b)/dq at fixed h for every sign of u.
    """
    if np.any(np.asarray(h) <= 0.0):
        raise ValueError("beta_coefficient requires h > 0")
    return p.m_g * p.xi * p.A_g * np.abs(u) ** (p.m_g - 1.0) / h


def char_poly(lam, h, u, p: GrassParams):
    """Characteristic polynomial p(lam) of the quasilinear 1D system."""
    gh = p.g * h
    beta = beta_coefficient(h, u, p)
    return -lam * ((u - lam) ** 2 - gh) + gh * beta * (lam - u)


@njit(cache=True)
def _eig3_newton(w, c2, beta):
    """Roots of lam^3 - 2w lam^2 + (w^2 - c2(1+beta)) lam + c2 beta w for
    w > 0, beta > 0.

    The largest root is bracketed by w + sqrt(c2 (1+beta)) from above; Newton
    from there converges monotonically.  The other two come from deflation
    (trace and product identities) plus one Newton polish each.

    Returns (l1, l2, l3, ok, disc) with ok = 0 on a non-hyperbolic state.
    """
    a = -2.0 * w
    b = w * w - c2 * (1.0 + beta)
    d = c2 * beta * w

    lam3 = w + np.sqrt(c2 * (1.0 + beta))
    for _ in range(60):
        pv = ((lam3 + a) * lam3 + b) * lam3 + d
        dp = (3.0 * lam3 + 2.0 * a) * lam3 + b
        if dp == 0.0:
            break
        step = pv / dp
        lam3 -= step
        if abs(step) <= 1e-15 * abs(lam3):
            break

    res3 = abs(((lam3 + a) * lam3 + b) * lam3 + d)
    if not np.isfinite(lam3) or res3 > 1e-9 * max(1.0, c2 * w):
        return 0.0, 0.0, 0.0, 0, -1.0

    # deflation: l1 + l2 = 2w - l3, l1 * l2 = -d / l3
    s = 2.0 * w - lam3
    prod = -d / lam3
    disc = s * s - 4.0 * prod
    if disc <= 0.0:
        return 0.0, 0.0, 0.0, 0, disc
    r = np.sqrt(disc)
    lam1 = 0.5 * (s - r)
    lam2 = prod / lam1

    for _ in range(2):
        pv = ((lam1 + a) * lam1 + b) * lam1 + d
        dp = (3.0 * lam1 + 2.0 * a) * lam1 + b
        if dp != 0.0:
            lam1 -= pv / dp
    for _ in range(2):
        pv = ((lam2 + a) * lam2 + b) * lam2 + d
        dp = (3.0 * lam2 + 2.0 * a) * lam2 + b
        if dp != 0.0:
            lam2 -= pv / dp

    return lam1, lam2, lam3, 1, disc


def eigenvalues_exact(h: float, u: float, p: GrassParams) -> WaveAnalysis:
    """Exact sorted roots of the characteristic cubic.

    Residual |p(lam_k)| <= 1e-10 * max(1, g*h*|u|) for each returned root.
    Raises HyperbolicityError if the root pair after deflation is complex.
    """
    if h <= 0.0:
        raise ValueError(f"eigenvalues_exact requires h > 0, got h={h}")
    gh = p.g * h
    c = np.sqrt(gh)
    beta = float(beta_coefficient(h, u, p))
    froude = abs(u) / c

    if beta == 0.0:
        lams = sorted((u - c, 0.0, u + c))
    elif u == 0.0:
        cb = c * np.sqrt(1.0 + beta)
        lams = (-cb, 0.0, cb)
    else:
        w = abs(u)
        l1, l2, l3, ok, disc = _eig3_newton(w, gh, beta)
        if not ok:
            raise HyperbolicityError(
                f"complex characteristic roots at h={h}, u={u}", disc)
        lams = (l1, l2, l3) if u > 0.0 else (-l3, -l2, -l1)

    scale = max(1.0, gh * abs(u))
    for lam in lams:
        res = abs(float(char_poly(lam, h, u, p)))
        if res > 1e-10 * scale:
            raise HyperbolicityError(
                f"root residual {res:.3e} exceeds tolerance at h={h}, u={u}",
                float("nan"))
    return WaveAnalysis(lams[0], lams[1], lams[2], beta, froude)


def eigenvalues_asymptotic(h: float, u: float, p: GrassParams) -> WaveAnalysis:
    """First-order-in-beta expansions of the three wave speeds.

    Valid only in the subsonic regime; raises ValueError for F_r >= 1.
    """
    if h <= 0.0:
        raise ValueError(f"eigenvalues_asymptotic requires h > 0, got h={h}")
    c = np.sqrt(p.g * h)
    beta = float(beta_coefficient(h, u, p))
    froude = abs(u) / c
    if froude >= 1.0:
        raise ValueError(
            f"asymptotic expansion invalid for F_r = {froude:.3f} >= 1")

    w = abs(u)
    fr = froude
    l1 = w - c - beta * c / (2.0 * (1.0 - fr))
    l2 = beta * w / (1.0 - fr * fr)
    l3 = w + c + beta * c / (2.0 * (1.0 + fr))
    lams = (l1, l2, l3) if u >= 0.0 else (-l3, -l2, -l1)
    lams = tuple(sorted(lams))
    return WaveAnalysis(lams[0], lams[1], lams[2], beta, froude)
