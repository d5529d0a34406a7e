"""Orientation state, shape functions and the special functions they need.

The propagation state is the symmetry-axis unit vector m plus a transverse
angular momentum L with m.L = 0 (linear rotor). Euler angles in the z-y'-z''
convention are a read-only reporting chart; the dynamics never divides by
sin(beta).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit, vectorize

from .params import DISK, ROD, SPHERE

BESSEL_MAX_ARG = 1.0e4


# ---------------------------------------------------------------------------
# Bessel functions J0, J1: power series for |x| <= 16, Hankel asymptotic
# beyond. Self-contained so the same code runs inside numba kernels and is
# bit-reproducible across platforms.

# Hankel coefficients a_k(nu) = prod_{j<=k} (4 nu^2 - (2j-1)^2) / (k! 8^k).
_J1_P = (1.0, -15.0 / 128.0, -14175.0 / 98304.0,
         -127702575.0 / 188743680.0, -4656674397375.0 / 676457349120.0)
_J1_Q = (3.0 / 8.0, 105.0 / 1024.0, 1091475.0 / 3932160.0,
         21070924875.0 / 10569646080.0, 1327152203251875.0 / 48704929136640.0)
_J0_P = (1.0, 9.0 / 128.0, 11025.0 / 98304.0,
         108056025.0 / 188743680.0, 4108830350625.0 / 676457349120.0)
_J0_Q = (-1.0 / 8.0, -75.0 / 1024.0, -893025.0 / 3932160.0,
         -18261468225.0 / 10569646080.0, -1187451971330625.0 / 48704929136640.0)


@njit(cache=True)
def _j1_core(x: float) -> float:
    ax = abs(x)
    if ax <= 16.0:
        half = 0.5 * x
        term = half
        total = half
        hh = half * half
        for j in range(1, 40):
            term *= -hh / (j * (j + 1))
            total += term
            if abs(term) < 1e-18 * (abs(total) + 1e-300):
                break
        return total
    inv2 = 1.0 / (ax * ax)
    p = _J1_P[0] + inv2 * (-_J1_P[1] + inv2 * (_J1_P[2] + inv2 * (-_J1_P[3] + inv2 * _J1_P[4])))
    q = (_J1_Q[0] + inv2 * (-_J1_Q[1] + inv2 * (_J1_Q[2] + inv2 * (-_J1_Q[3] + inv2 * _J1_Q[4])))) / ax
    chi = ax - 2.356194490192345  # 3 pi / 4
    val = math.sqrt(2.0 / (math.pi * ax)) * (p * math.cos(chi) - q * math.sin(chi))
    return -val if x < 0.0 else val


@njit(cache=True)
def _j0_core(x: float) -> float:
    ax = abs(x)
    if ax <= 16.0:
        term = 1.0
        total = 1.0
        hh = 0.25 * x * x
        for j in range(1, 40):
            term *= -hh / (j * j)
            total += term
            if abs(term) < 1e-18 * (abs(total) + 1e-300):
                break
        return total
    inv2 = 1.0 / (ax * ax)
    p = _J0_P[0] + inv2 * (-_J0_P[1] + inv2 * (_J0_P[2] + inv2 * (-_J0_P[3] + inv2 * _J0_P[4])))
    q = (_J0_Q[0] + inv2 * (-_J0_Q[1] + inv2 * (_J0_Q[2] + inv2 * (-_J0_Q[3] + inv2 * _J0_Q[4])))) / ax
    chi = ax - 0.7853981633974483  # pi / 4
    return math.sqrt(2.0 / (math.pi * ax)) * (p * math.cos(chi) - q * math.sin(chi))


@vectorize(["float64(float64)"], cache=True)
def _j1_ufunc(x):
    return _j1_core(x)


@vectorize(["float64(float64)"], cache=True)
def _j0_ufunc(x):
    return _j0_core(x)


def bessel_j1(x):
    """Bessel function of the first kind, order one. Domain |x| <= 1e4."""
    if np.any(np.abs(x) > BESSEL_MAX_ARG):
        raise ValueError(f"bessel_j1 argument out of range |x| <= {BESSEL_MAX_ARG:g}")
    out = _j1_ufunc(x)
    return float(out) if np.isscalar(x) else out


def bessel_j0(x):
    """Bessel function of the first kind, order zero. Domain |x| <= 1e4."""
    if np.any(np.abs(x) > BESSEL_MAX_ARG):
        raise ValueError(f"bessel_j0 argument out of range |x| <= {BESSEL_MAX_ARG:g}")
    out = _j0_ufunc(x)
    return float(out) if np.isscalar(x) else out


# ---------------------------------------------------------------------------
# Scalar shape-function kernels. sinc(t) = sin(t)/t and jinc(t) = J1(2t)/t
# with their removable singularities handled by series switchover.

@njit(cache=True)
def sinc(t: float) -> float:
    if abs(t) < 1e-4:
        t2 = t * t
        return 1.0 - t2 / 6.0 * (1.0 - t2 / 20.0)
    return math.sin(t) / t


@njit(cache=True)
def dsinc(t: float) -> float:
    """d/dt [sin(t)/t]."""
    if abs(t) < 1e-3:
        t2 = t * t
        return t * (-1.0 / 3.0 + t2 * (1.0 / 30.0 - t2 / 840.0))
    return (math.cos(t) - math.sin(t) / t) / t


@njit(cache=True)
def jinc(t: float) -> float:
    """J1(2t)/t, normalized to 1 at t = 0."""
    if abs(t) < 1e-4:
        t2 = t * t
        return 1.0 - t2 / 2.0 * (1.0 - t2 / 6.0)
    return _j1_core(2.0 * t) / t


@njit(cache=True)
def djinc_over_t(t: float) -> float:
    """[d/dt (J1(2t)/t)] / t; smooth and even, -1 at t = 0."""
    if abs(t) < 1e-2:
        t2 = t * t
        return -1.0 + t2 * (1.0 / 3.0 - t2 / 24.0)
    return 2.0 * (t * _j0_core(2.0 * t) - _j1_core(2.0 * t)) / (t * t * t)


_KIND_CODE = {ROD: 0, DISK: 1, SPHERE: 2}


def kind_code(kind: str) -> int:
    return _KIND_CODE[kind]


def shape(kind: str, scale: float, m, n) -> float:
    """Orientation-dependent shape function S(m, n).

    Rod: sin(s u)/(s u) with u = m.n and s = k*length.
    Disk: J1(2 s w)/(s w) with w = |m x n| and s = k*radius.
    ``n`` need not be a unit vector. Spheres return 1.
    """
    m = np.asarray(m, dtype=float)
    n = np.asarray(n, dtype=float)
    if kind == ROD:
        return sinc(scale * float(m @ n))
    if kind == DISK:
        w = float(np.linalg.norm(np.cross(m, n)))
        return jinc(scale * w)
    if kind == SPHERE:
        return 1.0
    raise ValueError(f"unknown particle kind {kind!r}")


def shape_grad_m(kind: str, scale: float, m, n) -> np.ndarray:
    """Euclidean gradient of S(m, n) with respect to the components of m."""
    m = np.asarray(m, dtype=float)
    n = np.asarray(n, dtype=float)
    if kind == ROD:
        return scale * dsinc(scale * float(m @ n)) * n
    if kind == DISK:
        nsq = float(n @ n)
        mn = float(m @ n)
        wsq = float(m @ m) * nsq - mn * mn
        w = math.sqrt(wsq) if wsq > 0.0 else 0.0
        # dS/dm = S'(s w) s * (m |n|^2 - (m.n) n)/w, written via the smooth
        # even combination S'(t)/t to stay regular at w = 0.
        return scale * scale * djinc_over_t(scale * w) * (m * nsq - mn * n)
    if kind == SPHERE:
        return np.zeros(3)
    raise ValueError(f"unknown particle kind {kind!r}")


# ---------------------------------------------------------------------------
# Orientation chart and rotor state.

def m_from_euler(alpha: float, beta: float) -> np.ndarray:
    """Symmetry-axis unit vector for Euler angles (z-y'-z'' convention)."""
    sb = math.sin(beta)
    return np.array([math.cos(alpha) * sb, math.sin(alpha) * sb, math.cos(beta)])


def euler_from_m(m) -> tuple[float, float]:
    """(alpha mod 2pi, beta) recovering m; alpha = 0 at the beta poles."""
    m = np.asarray(m, dtype=float)
    beta = math.atan2(math.hypot(m[0], m[1]), m[2])
    alpha = math.atan2(m[1], m[0]) % (2.0 * math.pi)
    return alpha, beta


@dataclass
class RotorState:
    """Linear-rotor state: unit axis m and angular momentum L with m.L = 0.

    ``spin`` is the conserved angular momentum about the symmetry axis
    (relevant for disks); it adds constant kinetic energy and never couples
    to the dynamics.
    """

    m: np.ndarray
    L: np.ndarray
    spin: float = 0.0

    def __post_init__(self):
        self.m = np.asarray(self.m, dtype=float)
        self.L = np.asarray(self.L, dtype=float)

    def project(self) -> "RotorState":
        """Renormalize m and remove the L component along m."""
        m = self.m / np.linalg.norm(self.m)
        L = self.L - (self.L @ m) * m
        return RotorState(m=m, L=L, spin=self.spin)

    def kinetic_energy(self, inertia: float, inertia_axial: float | None = None) -> float:
        e = float(self.L @ self.L) / (2.0 * inertia)
        if self.spin != 0.0 and inertia_axial:
            e += self.spin**2 / (2.0 * inertia_axial)
        return e


@dataclass
class EulerRates:
    """Euler-chart report of a rotor state; ``ok`` is False near the poles."""

    alpha_rate: float
    beta_rate: float
    p_alpha: float
    p_beta: float
    ok: bool = True


POLE_TOLERANCE = 1e-6


def euler_rates_from_state(state: RotorState, inertia: float) -> EulerRates:
    """(alpha_dot, beta_dot, p_alpha, p_beta) for reporting.

    p_beta = I beta_dot and p_alpha = I sin^2(beta) alpha_dot, consistent
    with L through omega = m x m_dot. Near beta in {0, pi} the chart is
    singular and a flagged result is returned; propagation never uses this.
    """
    m = state.m
    sin_beta = math.hypot(m[0], m[1])
    if sin_beta < POLE_TOLERANCE:
        return EulerRates(math.nan, math.nan, math.nan, math.nan, ok=False)
    alpha, beta = euler_from_m(m)
    omega = state.L / inertia
    mdot = np.cross(omega, m)
    u_alpha = np.array([-math.sin(alpha), math.cos(alpha), 0.0])
    u_beta = np.array([math.cos(alpha) * math.cos(beta),
                       math.sin(alpha) * math.cos(beta), -math.sin(beta)])
    alpha_rate = float(mdot @ u_alpha) / sin_beta
    beta_rate = float(mdot @ u_beta)
    return EulerRates(
        alpha_rate=alpha_rate,
        beta_rate=beta_rate,
        p_alpha=inertia * sin_beta**2 * alpha_rate,
        p_beta=inertia * beta_rate,
    )


def tangent_basis(m) -> tuple[np.ndarray, np.ndarray]:
    """Deterministic orthonormal pair spanning the plane perpendicular to m."""
    m = np.asarray(m, dtype=float)
    ref = np.array([0.0, 0.0, 1.0]) if abs(m[2]) < 0.9 else np.array([1.0, 0.0, 0.0])
    e1 = np.cross(m, ref)
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(m, e1)
    return e1, e2
