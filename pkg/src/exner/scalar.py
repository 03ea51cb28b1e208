"""Quasi-stationary scalar reduction of the 1D Exner system.

Neglecting the time derivatives of eta and q collapses the system onto a
single transport equation u_t + lambda(u) u_x = 0 (valid before shock
formation).  The integration constants are the total flux Q = q + q_b and
the Bernoulli-like constant C; all other fields follow from u:

    h(u)   = Q/u - A u^(m-1)
    G'(u)  = u (Q - (m+1) A u^m) / (Q - A u^m)
    z_b(u) = (C - G(u))/g - h(u) - b

Following the reduction's convention, the porosity factor xi is folded into
the effective coefficient A = xi * A_g (stored alongside the original
closure so cross-checks against the full system stay consistent).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from exner.core import GrassParams, State1D


class RegimeError(ValueError):
    """The scalar reduction is outside its validity regime."""


class ConsistencyError(ValueError):
    """A constructed field violates positivity at some cell."""


@dataclass
class ScalarModelConstants:
    """Integration constants of the reduction plus the sediment closure.

    ``u_ref`` fixes the gauge G(u_ref) = 0; the gauge cancels in C so any
    reference in the run's velocity range works.
    """

    Q: float
    C: float
    u_ref: float
    p: GrassParams

    def __post_init__(self):
        if not self.Q > 0.0:
            raise ValueError(f"net flux Q must be positive, got {self.Q}")

    @property
    def a_eff(self) -> float:
        """Effective Grass coefficient with the porosity factor folded in."""
        return self.p.xi * self.p.A_g

    @classmethod
    def from_left_boundary(cls, u_a: float, h_a: float, zb_a: float,
                           b_a: float, p: GrassParams) -> "ScalarModelConstants":
        """Anchor Q = q(a) + q_b(a) and C = G(u(a)) + g*(h + z_b + b)(a)."""
        if u_a <= 0.0:
            raise RegimeError("the reduction assumes u > 0 at the anchor")
        a = p.xi * p.A_g
        q_tot = h_a * u_a + a * u_a ** p.m_g
        c = p.g * (h_a + zb_a + b_a)  # G(u_a) = 0 in the u_ref = u_a gauge
        return cls(Q=q_tot, C=c, u_ref=u_a, p=p)


def h_of_u(u, k: ScalarModelConstants):
    """Water thickness h = Q/u - A u^(m-1) implied by constant total flux."""
    u = np.asarray(u, dtype=float)
    if np.any(u <= 0.0):
        raise RegimeError("h_of_u requires u > 0")
    h = k.Q / u - k.a_eff * u ** (k.p.m_g - 1.0)
    if np.any(h <= 0.0):
        raise ConsistencyError("h(u) is nonpositive inside the requested range")
    return h if h.ndim else float(h)


def g_prime(u, k: ScalarModelConstants):
    """G'(u) = u (Q - (m+1) A u^m) / (Q - A u^m)."""
    u = np.asarray(u, dtype=float)
    m, a = k.p.m_g, k.a_eff
    den = k.Q - a * u ** m
    if np.any(den == 0.0):
        raise ZeroDivisionError("G' singular where the water flux q vanishes")
    out = u * (k.Q - (m + 1.0) * a * u ** m) / den
    return out if out.ndim else float(out)


def g_of_u(u: float, u_ref: float, k: ScalarModelConstants) -> float:
    """G(u) = integral of G' from u_ref to u (adaptive quadrature, 1e-12)."""
    a, m = k.a_eff, k.p.m_g
    if a > 0.0:
        u_sing = (k.Q / a) ** (1.0 / m)
        lo, hi = min(u, u_ref), max(u, u_ref)
        if lo <= 0.0 or hi >= u_sing:
            raise ZeroDivisionError(
                f"integration path [{lo}, {hi}] touches the q = 0 "
                f"singularity at u = {u_sing:.6g}")
    if u == u_ref:
        return 0.0
    val, _ = quad(lambda s: g_prime(s, k), u_ref, u,
                  epsabs=1e-12, epsrel=1e-12, limit=200)
    return val


def g_of_u_array(u: np.ndarray, k: ScalarModelConstants) -> np.ndarray:
    """G evaluated per cell (setup-time helper, straight quadrature)."""
    return np.array([g_of_u(float(ui), k.u_ref, k) for ui in np.ravel(u)]
                    ).reshape(np.shape(u))


def zb_prime(u, k: ScalarModelConstants):
    """dz_b/du = -G'/g + (Q + (m-1) A u^m) / u^2."""
    u = np.asarray(u, dtype=float)
    if np.any(u <= 0.0):
        raise RegimeError("zb_prime requires u > 0")
    m, a = k.p.m_g, k.a_eff
    out = -g_prime(u, k) / k.p.g + (k.Q + (m - 1.0) * a * u ** m) / (u * u)
    return out if out.ndim else float(out)


def lambda_scalar_closed(u, k: ScalarModelConstants):
    """Transport speed in the closed beta/Froude form:
    lambda = beta u / (1 - F_r^2 + beta (1 + F_r^2))."""
    u = np.asarray(u, dtype=float)
    h = np.asarray(h_of_u(u, k))
    beta = k.p.m_g * k.a_eff * u ** (k.p.m_g - 1.0) / h
    fr2 = u * u / (k.p.g * h)
    out = beta * u / (1.0 - fr2 + beta * (1.0 + fr2))
    return out if out.ndim else float(out)


def lambda_scalar(u, k: ScalarModelConstants):
    """Transport speed lambda(u) = m A u^(m-1) / ((Q + (m-1) A u^m)/u^2 - G'/g).

    Also evaluates the closed beta/Froude form and checks the two agree to
    1e-12 relative; they are algebraically identical when h = h(u).
    """
    u = np.asarray(u, dtype=float)
    if np.any(u <= 0.0):
        raise RegimeError("lambda_scalar requires u > 0")
    m, a = k.p.m_g, k.a_eff
    den = (k.Q + (m - 1.0) * a * u ** m) / (u * u) - g_prime(u, k) / k.p.g
    if np.any(den <= 0.0):
        raise RegimeError("nonpositive wave-speed denominator "
                          "(outside the subsonic pre-shock regime)")
    out = m * a * u ** (m - 1.0) / den
    closed = np.asarray(lambda_scalar_closed(u, k))
    scale = np.maximum(np.abs(out), 1e-300)
    if np.any(np.abs(out - closed) > 1e-12 * scale + 1e-15):
        raise AssertionError("the two lambda(u) forms disagree")
    return out if out.ndim else float(out)


def lambda_scalar_derivative(u, k: ScalarModelConstants):
    """Analytic d(lambda)/du by the quotient rule through G' and G''."""
    u = np.asarray(u, dtype=float)
    if np.any(u <= 0.0):
        raise RegimeError("lambda_scalar_derivative requires u > 0")
    m, a, g = k.p.m_g, k.a_eff, k.p.g
    um = u ** m
    num = m * a * u ** (m - 1.0)
    dnum = m * (m - 1.0) * a * u ** (m - 2.0)

    den = (k.Q + (m - 1.0) * a * um) / (u * u) - g_prime(u, k) / g
    if np.any(den <= 0.0):
        raise RegimeError("nonpositive wave-speed denominator")
    # d/du [(Q + (m-1) A u^m) u^-2]
    dterm = (m * (m - 1.0) * a * u ** (m - 1.0)) / (u * u) \
        - 2.0 * (k.Q + (m - 1.0) * a * um) / u ** 3
    # G'' from G' = u P / R with P = Q - (m+1) A u^m, R = Q - A u^m
    P = k.Q - (m + 1.0) * a * um
    R = k.Q - a * um
    dP = -m * (m + 1.0) * a * u ** (m - 1.0)
    dR = -m * a * u ** (m - 1.0)
    g2 = P / R + u * (dP * R - P * dR) / (R * R)
    dden = dterm - g2 / g
    out = (dnum * den - num * dden) / (den * den)
    return out if out.ndim else float(out)


def step_lax_wendroff(u_field: np.ndarray, dt: float, dx: float,
                      k: ScalarModelConstants, lam=None, lam_prime=None
                      ) -> np.ndarray:
    """One Lax-Wendroff step of u_t + lambda(u) u_x = 0 with free boundaries.

    No limiter: the integration is restricted to smooth pre-shock data by
    the caller.  ``lam``/``lam_prime`` override the transport speed (used to
    freeze lambda for linear-advection checks).
    """
    if lam is None:
        lam = lambda w: lambda_scalar(w, k)
    if lam_prime is None:
        lam_prime = lambda w: lambda_scalar_derivative(w, k)
    u = np.empty(u_field.shape[0] + 2)
    u[1:-1] = u_field
    u[0] = u_field[0]
    u[-1] = u_field[-1]

    lam_c = np.asarray(lam(u))
    lamp = np.asarray(lam_prime(u[1:-1]))
    lam_half = 0.5 * (lam_c[:-1] + lam_c[1:])

    dc = (u[2:] - u[:-2]) / (2.0 * dx)
    d2 = (lam_half[1:] * (u[2:] - u[1:-1])
          - lam_half[:-1] * (u[1:-1] - u[:-2])) / (dx * dx)
    li = lam_c[1:-1]
    return u[1:-1] - dt * li * dc + 0.5 * dt * dt * li * (lamp * dc * dc + d2)


def fields_from_u(u_field: np.ndarray, b: np.ndarray,
                  k: ScalarModelConstants) -> dict:
    """All quasi-stationary fields implied by a velocity profile."""
    h = np.asarray(h_of_u(u_field, k))
    g_vals = g_of_u_array(u_field, k)
    eta = (k.C - g_vals) / k.p.g
    zb = eta - h - np.asarray(b, dtype=float)
    return {"h": h, "q": h * u_field, "z_b": zb, "eta": eta}


def build_full_state_from_u(u_field: np.ndarray, h_left: float, zb_left: float,
                            b: np.ndarray, p: GrassParams,
                            u_left: float | None = None, b_left: float = 0.0,
                            ng: int = 2) -> tuple[State1D, ScalarModelConstants]:
    """Turn a velocity profile into a consistent quasi-stationary full state.

    Q and C are anchored at the left boundary: pass the analytic boundary
    velocity ``u_left`` so the constants stay grid independent (defaults to
    the first cell value).  Returns the state and the constants.
    """
    u_field = np.asarray(u_field, dtype=float)
    b = np.asarray(b, dtype=float)
    u_a = float(u_field[0]) if u_left is None else float(u_left)
    k = ScalarModelConstants.from_left_boundary(u_a, h_left, zb_left, b_left, p)

    f = fields_from_u(u_field, b, k)
    h, zb = f["h"], f["z_b"]
    for name, arr in (("h", h), ("z_b", zb)):
        bad = np.nonzero(arr < 0.0)[0]
        if bad.size:
            raise ConsistencyError(
                f"constructed {name} is negative at cell {bad[0]} "
                f"(value {arr[bad[0]]:.6g})")
    state = State1D.from_interior(h, f["q"], zb, b, ng=ng)
    return state, k
