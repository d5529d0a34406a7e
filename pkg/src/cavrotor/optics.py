"""Field-particle coupling: potential, scattering amplitudes, rates, forces.

Conventions fixed here:
  * Gaussian envelope f(r) = exp(-(x^2+y^2)/w0^2) (amplitude waist), so the
    intensity envelope is f^2. Curvature and Gouy phase are neglected,
    consistent with the plain cos(kz) standing wave.
  * Polarization basis (eps1, eps2) = (theta_hat, phi_hat) of spherical
    coordinates with polar axis e_z; at the poles the phi -> 0 limit is used,
    which keeps eps1 x eps2 = n right-handed.
  * Sphere-against-cylinder comparisons reuse the same formulas with an
    isotropic susceptibility ratio and shape function identically 1.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .constants import HBAR
from .params import DISK, ROD, SimParams
from .rotor import shape, shape_grad_m

SQRT_3_8 = math.sqrt(3.0 / 8.0)

EX = np.array([1.0, 0.0, 0.0])
EY = np.array([0.0, 1.0, 0.0])
EZ = np.array([0.0, 0.0, 1.0])


class QuadratureError(RuntimeError):
    """Sphere quadrature failed its convergence check."""


@dataclass(frozen=True)
class ModeFunction:
    """Gaussian standing-wave mode envelope."""

    w0: float
    k: float

    def envelope(self, r) -> float:
        x, y = r[0], r[1]
        return math.exp(-(x * x + y * y) / (self.w0 * self.w0))

    def envelope_sq(self, r) -> float:
        x, y = r[0], r[1]
        return math.exp(-2.0 * (x * x + y * y) / (self.w0 * self.w0))


@dataclass(frozen=True)
class GeneralizedForce:
    """Center-of-mass force plus the torque acting on L (perpendicular to m)."""

    force: np.ndarray
    torque_m: np.ndarray


@dataclass(frozen=True)
class SphereQuadrature:
    """Nodes and weights for int d^2n / 4pi, weights summing to one."""

    nodes: np.ndarray    # (N, 3) unit vectors
    weights: np.ndarray  # (N,)
    degree: int


def build_quadrature(degree: int) -> SphereQuadrature:
    """Product rule: Gauss-Legendre in cos(theta) x trapezoid in phi.

    ``degree`` Legendre nodes and 2*degree azimuthal points; exact for
    spherical harmonics up to the requested degree.
    """
    if not 6 <= degree <= 50:
        raise ValueError(f"quadrature degree {degree} outside supported range [6, 50]")
    ct, wt = np.polynomial.legendre.leggauss(degree)
    nphi = 2 * degree
    phi = 2.0 * math.pi * np.arange(nphi) / nphi
    st = np.sqrt(1.0 - ct**2)
    nodes = np.empty((degree * nphi, 3))
    nodes[:, 0] = np.outer(st, np.cos(phi)).ravel()
    nodes[:, 1] = np.outer(st, np.sin(phi)).ravel()
    nodes[:, 2] = np.outer(ct, np.ones(nphi)).ravel()
    weights = np.outer(wt / 2.0, np.full(nphi, 1.0 / nphi)).ravel()
    return SphereQuadrature(nodes=nodes, weights=weights, degree=degree)


def polarization_basis(n) -> tuple[np.ndarray, np.ndarray]:
    """Orthonormal transverse pair (theta_hat, phi_hat) for direction n."""
    n = np.asarray(n, dtype=float)
    st = math.hypot(n[0], n[1])
    if st < 1e-14:
        sign = 1.0 if n[2] > 0 else -1.0
        return np.array([sign, 0.0, 0.0]), EY.copy()
    ct = n[2]
    cp, sp = n[0] / st, n[1] / st
    eps1 = np.array([ct * cp, ct * sp, -st])
    eps2 = np.array([-sp, cp, 0.0])
    return eps1, eps2


def _polarization_all(nodes: np.ndarray) -> np.ndarray:
    """(N, 2, 3) polarization vectors for an array of directions."""
    st = np.hypot(nodes[:, 0], nodes[:, 1])
    safe = np.where(st < 1e-14, 1.0, st)
    cp = np.where(st < 1e-14, np.sign(nodes[:, 2]), nodes[:, 0] / safe)
    sp = np.where(st < 1e-14, 0.0, nodes[:, 1] / safe)
    ct = nodes[:, 2]
    eps = np.empty((nodes.shape[0], 2, 3))
    eps[:, 0, 0] = ct * cp
    eps[:, 0, 1] = ct * sp
    eps[:, 0, 2] = -st
    eps[:, 1, 0] = -sp
    eps[:, 1, 1] = cp
    eps[:, 1, 2] = 0.0
    return eps


# ---------------------------------------------------------------------------
# Optical potential.

def _brackets(r, m, sp: SimParams):
    """Common factors of the dimensionless potential.

    Returns (f2, anisotropy bracket, standing-wave bracket, S(m, e_z),
    cos 2kz, sin 2kz).
    """
    mode = ModeFunction(sp.waist, sp.k)
    f2 = mode.envelope_sq(r)
    mx = m[0]
    b1 = sp.chi_ratio_perp + sp.chi_ratio_delta * mx * mx
    s_axis = shape(sp.kind, sp.shape_scale, m, EZ)
    c2z = math.cos(2.0 * sp.k * r[2])
    s2z = math.sin(2.0 * sp.k * r[2])
    b2 = 0.5 + 0.5 * c2z * s_axis
    return f2, b1, b2, s_axis, c2z, s2z


def dimensionless_potential(r, m, sp: SimParams) -> float:
    """v(r, m) = V / (hbar U0 |b|^2), in [0, 1] for rods and disks."""
    r = np.asarray(r, dtype=float)
    m = np.asarray(m, dtype=float)
    f2, b1, b2, _, _, _ = _brackets(r, m, sp)
    return f2 * b1 * b2


def potential_gradients(r, m, sp: SimParams):
    """(v, dv/dr, dv/dm) with the Euclidean m-gradient (project as needed)."""
    r = np.asarray(r, dtype=float)
    m = np.asarray(m, dtype=float)
    f2, b1, b2, s_axis, c2z, s2z = _brackets(r, m, sp)
    v = f2 * b1 * b2
    w0sq = sp.waist * sp.waist
    dv_dr = np.array([
        -4.0 * r[0] / w0sq * v,
        -4.0 * r[1] / w0sq * v,
        -f2 * b1 * sp.k * s2z * s_axis,
    ])
    ds_dm = shape_grad_m(sp.kind, sp.shape_scale, m, EZ)
    dv_dm = f2 * (2.0 * sp.chi_ratio_delta * m[0] * b2 * EX
                  + b1 * 0.5 * c2z * ds_dm)
    return v, dv_dr, dv_dm


def potential(r, m, b_sq: float, sp: SimParams) -> float:
    """Optical potential in joules; non-positive everywhere."""
    return HBAR * sp.u0 * b_sq * dimensionless_potential(r, m, sp)


def potential_force_torque(r, m, b_sq: float, sp: SimParams) -> GeneralizedForce:
    """Conservative force -dV/dr and torque -m x dV/dm acting on L."""
    _, dv_dr, dv_dm = potential_gradients(r, m, sp)
    scale = HBAR * sp.u0 * b_sq
    m = np.asarray(m, dtype=float)
    return GeneralizedForce(force=-scale * dv_dr,
                            torque_m=-scale * np.cross(m, dv_dm))


# ---------------------------------------------------------------------------
# Rayleigh scattering amplitudes A_ns and their derivatives.

def _coupling_vector(m, sp: SimParams) -> np.ndarray:
    """u(m) = (chi_perp/chi_m) e_x + (dchi/chi_m) (m.e_x) m."""
    return sp.chi_ratio_perp * EX + sp.chi_ratio_delta * m[0] * m


def _cross_norm(m, q: np.ndarray) -> np.ndarray:
    """|m x q_i| for an array of vectors q."""
    mq = q @ m
    wsq = (m @ m) * np.einsum("ij,ij->i", q, q) - mq * mq
    return np.sqrt(np.maximum(wsq, 0.0))


def _jinc_array(t: np.ndarray) -> np.ndarray:
    """J1(2t)/t elementwise with the removable singularity handled."""
    from .rotor import _j1_ufunc
    small = np.abs(t) < 1e-4
    safe = np.where(small, 1.0, t)
    out = _j1_ufunc(2.0 * safe) / safe
    return np.where(small, 1.0 - 0.5 * t * t, out)

def scattering_amplitude(n, s: int, r, m, sp: SimParams) -> complex:
    """Dimensionless Rayleigh amplitude into direction n, polarization s in {1, 2}."""
    a, _, _ = scattering_amplitude_gradients(n, s, r, m, sp)
    return a


def scattering_amplitude_gradients(n, s: int, r, m, sp: SimParams):
    """(A, dA/dr, dA/dm) analytically.

    The m-gradient is Euclidean; contract with tangent directions or take
    m x dA/dm for angular derivatives.
    """
    if s not in (1, 2):
        raise ValueError("polarization index s must be 1 or 2")
    n = np.asarray(n, dtype=float)
    r = np.asarray(r, dtype=float)
    m = np.asarray(m, dtype=float)
    eps = polarization_basis(n)[s - 1]

    mode = ModeFunction(sp.waist, sp.k)
    f = mode.envelope(r)
    u = _coupling_vector(m, sp)
    pol = float(eps @ u)
    k = sp.k
    qm = 0.5 * (EZ - n)
    qp = 0.5 * (EZ + n)
    s_m = shape(sp.kind, sp.shape_scale, m, qm)
    s_p = shape(sp.kind, sp.shape_scale, m, qp)
    phase_r = np.exp(-1j * k * float(n @ r))
    ez_phase = np.exp(1j * k * r[2])
    comb = ez_phase * s_m + s_p / ez_phase

    amp = SQRT_3_8 * f * pol * phase_r * comb

    w0sq = sp.waist * sp.waist
    d_comb_dz = 1j * k * (ez_phase * s_m - s_p / ez_phase)
    base = SQRT_3_8 * f * pol * phase_r
    da_dr = np.empty(3, dtype=complex)
    da_dr[0] = amp * (-2.0 * r[0] / w0sq - 1j * k * n[0])
    da_dr[1] = amp * (-2.0 * r[1] / w0sq - 1j * k * n[1])
    da_dr[2] = amp * (-1j * k * n[2]) + base * d_comb_dz

    # m-dependence: through the coupling vector and both shape functions.
    dpol_dm = sp.chi_ratio_delta * (float(eps @ m) * EX + m[0] * eps)
    ds_m = shape_grad_m(sp.kind, sp.shape_scale, m, qm)
    ds_p = shape_grad_m(sp.kind, sp.shape_scale, m, qp)
    da_dm = (SQRT_3_8 * f * phase_r
             * (dpol_dm * comb + pol * (ez_phase * ds_m + ds_p / ez_phase)))
    return complex(amp), da_dr, da_dm


def _amplitude_fields(nodes: np.ndarray, r, m, sp: SimParams, derivatives=True):
    """Per-node amplitudes (N, 2) and derivatives (N, 2, 3) over a node set."""
    r = np.asarray(r, dtype=float)
    m = np.asarray(m, dtype=float)
    n_nodes = nodes.shape[0]
    eps = _polarization_all(nodes)
    mode = ModeFunction(sp.waist, sp.k)
    f = mode.envelope(r)
    u = _coupling_vector(m, sp)
    pol = eps @ u                      # (N, 2)
    k = sp.k
    qm = 0.5 * (EZ[None, :] - nodes)
    qp = 0.5 * (EZ[None, :] + nodes)
    if sp.kind == ROD:
        sc = sp.shape_scale
        s_m = np.sinc(sc * (qm @ m) / math.pi)
        s_p = np.sinc(sc * (qp @ m) / math.pi)
    elif sp.kind == DISK:
        sc = sp.shape_scale
        s_m = _jinc_array(sc * _cross_norm(m, qm))
        s_p = _jinc_array(sc * _cross_norm(m, qp))
    else:
        s_m = np.ones(n_nodes)
        s_p = np.ones(n_nodes)
    phase_r = np.exp(-1j * k * (nodes @ r))
    ez_phase = complex(np.exp(1j * k * r[2]))
    comb = ez_phase * s_m + s_p / ez_phase

    amp = SQRT_3_8 * f * pol * (phase_r * comb)[:, None]
    if not derivatives:
        return amp, None, None

    w0sq = sp.waist * sp.waist
    da_dr = np.empty((n_nodes, 2, 3), dtype=complex)
    da_dr[:, :, 0] = amp * (-2.0 * r[0] / w0sq - 1j * k * nodes[:, 0])[:, None]
    da_dr[:, :, 1] = amp * (-2.0 * r[1] / w0sq - 1j * k * nodes[:, 1])[:, None]
    d_comb_dz = 1j * k * (ez_phase * s_m - s_p / ez_phase)
    da_dr[:, :, 2] = (amp * (-1j * k * nodes[:, 2])[:, None]
                      + SQRT_3_8 * f * pol * (phase_r * d_comb_dz)[:, None])

    ds_m = np.array([shape_grad_m(sp.kind, sp.shape_scale, m, q) for q in qm])
    ds_p = np.array([shape_grad_m(sp.kind, sp.shape_scale, m, q) for q in qp])
    dpol = sp.chi_ratio_delta * ((eps @ m)[:, :, None] * EX[None, None, :]
                                 + m[0] * eps)
    da_dm = (SQRT_3_8 * f
             * (dpol * (phase_r * comb)[:, None, None]
                + pol[:, :, None] * (phase_r[:, None, None]
                                     * (ez_phase * ds_m + ds_p / ez_phase)[:, None, :])))
    return amp, da_dr, da_dm


# ---------------------------------------------------------------------------
# Quadrature reductions: scattering rate, recoil forces, detector intensity.

def scattering_rate(r, m, sp: SimParams, quad: SphereQuadrature | None = None,
                    check_convergence: bool = False) -> float:
    """gamma_sc(r, m) per intracavity photon: gamma0 sum_s <|A|^2>."""
    if quad is None:
        quad = build_quadrature(30)
    if quad.degree < 20:
        raise ValueError("scattering-rate quadrature degree must be >= 20")
    value = _scattering_rate_with(quad, r, m, sp)
    if check_convergence:
        ref = _scattering_rate_with(build_quadrature(quad.degree + 1), r, m, sp)
        scale = max(abs(value), abs(ref), sp.gamma0 * 1e-30)
        if abs(value - ref) > 1e-8 * scale:
            raise QuadratureError(
                f"scattering rate not converged: degree {quad.degree} vs "
                f"{quad.degree + 1} differ by {abs(value - ref) / scale:.2e} relative")
    return value


def _scattering_rate_with(quad, r, m, sp) -> float:
    amp, _, _ = _amplitude_fields(quad.nodes, r, m, sp, derivatives=False)
    return sp.gamma0 * float(quad.weights @ (np.abs(amp) ** 2).sum(axis=1))


def radiation_pressure(r, m, b_sq: float, sp: SimParams,
                       quad: SphereQuadrature | None = None) -> GeneralizedForce:
    """Non-conservative recoil force and torque from Rayleigh scattering.

    Force: hbar gamma0 |b|^2 sum_s < Im(A* dA/dr) >; the torque on L uses the
    angular derivative m x dA/dm. Vanishes identically for isotropic point
    particles.
    """
    if quad is None:
        quad = build_quadrature(30)
    m = np.asarray(m, dtype=float)
    amp, da_dr, da_dm = _amplitude_fields(quad.nodes, r, m, sp)
    scale = HBAR * sp.gamma0 * b_sq
    w = quad.weights
    force = scale * np.einsum("n,ns,nsi->i", w, np.conj(amp), da_dr).imag
    ang = np.cross(m[None, None, :], da_dm)
    torque = scale * np.einsum("n,ns,nsi->i", w, np.conj(amp), ang).imag
    return GeneralizedForce(force=force, torque_m=torque)


def detector_intensity(n, big_r: float, r, m, b_sq: float, sp: SimParams):
    """Far-field intensity (W/m^2) at a detector at position R n.

    Returns (total, per-polarization tuple) in the (theta_hat, phi_hat)
    basis of the detector direction.
    """
    if big_r <= 0:
        raise ValueError("detector distance must be positive")
    if big_r < 10.0 * sp.cavity.wavelength:
        warnings.warn("detector closer than 10 wavelengths: far-field "
                      "formula questionable", stacklevel=2)
    n = np.asarray(n, dtype=float)
    pref = HBAR * sp.cavity.pump_frequency * sp.gamma0 * b_sq / (4.0 * math.pi * big_r**2)
    parts = []
    for s in (1, 2):
        a = scattering_amplitude(n, s, r, m, sp)
        parts.append(pref * abs(a) ** 2)
    return parts[0] + parts[1], (parts[0], parts[1])
