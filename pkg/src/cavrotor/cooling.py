"""Analytic cooling diagnostics: phase-space contraction rate, trap
frequencies, self-consistent steady-state amplitude and recoil-limited
temperatures with their small-particle closed forms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .constants import HBAR, K_BOLTZMANN
from .optics import (SphereQuadrature, _amplitude_fields, build_quadrature,
                     dimensionless_potential, potential_gradients,
                     scattering_rate)
from .params import DISK, ROD, SPHERE, SimParams
from .rotor import m_from_euler

EX = np.array([1.0, 0.0, 0.0])
EY = np.array([0.0, 1.0, 0.0])
EZ = np.array([0.0, 0.0, 1.0])


def gamma_rate_m(r, m, sp: SimParams) -> float:
    """Phase-space contraction rate at (r, m); negative means cooling.

    The rotational part uses the tangent-plane gradient of v, which equals
    (d_alpha v)^2 / sin^2(beta) + (d_beta v)^2 in the Euler chart without
    ever dividing by sin(beta).
    """
    m = np.asarray(m, dtype=float)
    v, dv_dr, dv_dm = potential_gradients(r, m, sp)
    detune = sp.detuning - sp.u0 * v
    pref = (4.0 * HBAR * sp.kappa * sp.eta**2 * sp.u0**2 * detune
            / (sp.kappa**2 + detune**2) ** 3)
    trans = float(dv_dr @ dv_dr) / sp.mass
    if sp.kind == SPHERE:
        rot = 0.0
    else:
        tangent = dv_dm - (dv_dm @ m) * m
        rot = float(tangent @ tangent) / sp.inertia
    return pref * (trans + rot)


def gamma_rate(r, alpha: float, beta: float, sp: SimParams) -> float:
    """Contraction rate at Euler orientation (alpha, beta)."""
    return gamma_rate_m(r, m_from_euler(alpha, beta), sp)


def steady_state_b0(sp: SimParams, quad: SphereQuadrature | None = None,
                    max_iter: int = 50, tol: float = 1e-12):
    """Self-consistent cavity amplitude at the trap minimum.

    Returns (b0, gamma_sc0). The per-photon scattering rate does not depend
    on |b|^2, so the fixed point converges immediately; the loop guards the
    contract anyway.
    """
    if quad is None:
        quad = build_quadrature(30)
    r0, m0 = sp.trap_minimum
    v0 = dimensionless_potential(r0, m0, sp)
    gamma_sc0 = scattering_rate(r0, m0, sp, quad)
    b0 = sp.eta / (sp.kappa + 1j * (sp.detuning - sp.u0 * v0))
    for _ in range(max_iter):
        b_new = sp.eta / (sp.kappa + gamma_sc0 / 2.0
                          + 1j * (sp.detuning - sp.u0 * v0))
        if abs(b_new - b0) <= tol * abs(b_new):
            return b_new, gamma_sc0
        b0 = b_new
    raise RuntimeError("steady-state cavity amplitude did not converge")


@dataclass(frozen=True)
class TrapFrequencies:
    """Harmonic frequencies (rad/s) of the deeply trapped particle."""

    omega_z: float
    omega_alpha: float
    omega_beta: float
    omega_transverse: float  # x/y; negligible for waist >> wavelength
    transverse_negligible: bool = True


def trap_frequencies(sp: SimParams, b0_sq: float) -> TrapFrequencies:
    """Closed-form trap frequencies at the potential minimum.

    Rod (m0 = e_x): omega_z = sqrt(2 hbar|U0||b0|^2 k^2 / M),
    omega_alpha = sqrt(2 hbar|U0||b0|^2 dchi / (I chi_par)),
    omega_beta adds the (k l)^2/12 shape term. Disk (m0 = e_z):
    omega_z = omega_beta with omega_alpha = 0.
    """
    depth = HBAR * abs(sp.u0) * b0_sq
    chi = sp.chi
    if sp.kind == SPHERE:
        scale = chi.chi_par / chi.chi_m  # isotropic ratio
        wz = math.sqrt(2.0 * depth * scale * sp.k**2 / sp.mass)
        wt = 2.0 * math.sqrt(depth * scale / sp.mass) / sp.waist
        return TrapFrequencies(wz, 0.0, 0.0, wt)
    wz = math.sqrt(2.0 * depth * sp.k**2 / sp.mass)
    wt = 2.0 * math.sqrt(depth / sp.mass) / sp.waist
    if sp.kind == ROD:
        ratio = chi.delta_chi / chi.chi_par
        if ratio < 0:
            raise ValueError("rod with delta_chi < 0 is not trapped in orientation")
        wa = math.sqrt(2.0 * depth * ratio / sp.inertia)
        kl = sp.shape_scale
        wb = math.sqrt(2.0 * depth * (ratio + kl * kl / 12.0) / sp.inertia)
        return TrapFrequencies(wz, wa, wb, wt)
    # Disk: soft tilt (perpendicular to the polarization plane) degenerate
    # with the axial mode; azimuth is free at the minimum.
    return TrapFrequencies(wz, 0.0, wz, wt)


@dataclass(frozen=True)
class CoolingReport:
    """Recoil-limit summary for a trapped particle."""

    gamma: float            # contraction rate at the queried configuration
    omega_z: float
    omega_alpha: float
    omega_beta: float
    b0: complex
    gamma_sc0: float
    kappa_eff: float        # kappa + gamma_sc0/2
    T_z: float
    T_alpha: float
    T_beta: float
    n_z: float | None
    n_alpha: float | None
    n_beta: float | None

    def as_dict(self) -> dict:
        return {
            "gamma_1_s": self.gamma,
            "omega_z_rad_s": self.omega_z,
            "omega_alpha_rad_s": self.omega_alpha,
            "omega_beta_rad_s": self.omega_beta,
            "b0_re": self.b0.real,
            "b0_im": self.b0.imag,
            "b0_abs_sq": abs(self.b0) ** 2,
            "gamma_sc0_1_s": self.gamma_sc0,
            "kappa_eff_1_s": self.kappa_eff,
            "T_z_K": self.T_z,
            "T_alpha_K": self.T_alpha,
            "T_beta_K": self.T_beta,
            "n_z": self.n_z,
            "n_alpha": self.n_alpha,
            "n_beta": self.n_beta,
        }


def _occupation(temperature: float, omega: float) -> float | None:
    """Mean occupation k_B T / (hbar omega); None for free modes.

    Classical equipartition: the recoil-limit T sits above the level
    spacing only marginally, and this form matches the occupation values
    quoted for this system; a Bose form does not.
    """
    if omega <= 0:
        return None
    return K_BOLTZMANN * temperature / (HBAR * omega)


def recoil_temperatures(sp: SimParams, quad: SphereQuadrature | None = None,
                        b0: complex | None = None,
                        gamma_sc0: float | None = None) -> CoolingReport:
    """Recoil-limited steady-state temperatures from the amplitude derivatives.

    T_nu = gamma0 hbar^2 |b0|^2 / (2 M_nu (kappa + gamma_sc0/2) k_B)
           * sum_s < |d_nu A|^2 > evaluated at the trap minimum, with
    M_z = M and M_alpha = M_beta = I.
    """
    if quad is None:
        quad = build_quadrature(30)
    if quad.degree < 20:
        raise ValueError("recoil-temperature quadrature degree must be >= 20")
    if b0 is None or gamma_sc0 is None:
        b0, gamma_sc0 = steady_state_b0(sp, quad)
    b0_sq = abs(b0) ** 2
    r0, m0 = sp.trap_minimum
    kappa_eff = sp.kappa + gamma_sc0 / 2.0

    _, da_dr, da_dm = _amplitude_fields(quad.nodes, r0, m0, sp)
    w = quad.weights

    def avg_sq(da):  # sum over polarizations, quadrature average
        return float(w @ (np.abs(da) ** 2).sum(axis=1))

    q_z = avg_sq(da_dr[:, :, 2])
    if sp.kind == ROD:
        # dm/dalpha = e_y and dm/dbeta = -e_z at (alpha, beta) = (0, pi/2)
        q_a = avg_sq(da_dm @ EY)
        q_b = avg_sq(da_dm @ (-EZ))
    elif sp.kind == DISK:
        # Azimuth is degenerate at m0 = e_z (free mode, zero recoil at leading
        # order); the tilt pairs with the soft direction e_y.
        q_a = 0.0
        q_b = avg_sq(da_dm @ EY)
    else:
        q_a = q_b = 0.0

    pref = sp.gamma0 * HBAR**2 * b0_sq / (2.0 * kappa_eff * K_BOLTZMANN)
    t_z = pref * q_z / sp.mass
    if sp.kind == SPHERE:
        t_a = t_b = 0.0
    else:
        t_a = pref * q_a / sp.inertia
        t_b = pref * q_b / sp.inertia

    freqs = trap_frequencies(sp, b0_sq)
    return CoolingReport(
        gamma=gamma_rate_m(r0, m0, sp),
        omega_z=freqs.omega_z,
        omega_alpha=freqs.omega_alpha,
        omega_beta=freqs.omega_beta,
        b0=b0,
        gamma_sc0=gamma_sc0,
        kappa_eff=kappa_eff,
        T_z=t_z,
        T_alpha=t_a,
        T_beta=t_b,
        n_z=_occupation(t_z, freqs.omega_z),
        n_alpha=_occupation(t_a, freqs.omega_alpha),
        n_beta=_occupation(t_b, freqs.omega_beta),
    )


def small_particle_limits(sp: SimParams, b0_sq: float) -> dict:
    """Closed-form recoil temperatures valid for k l << 1 (or k a << 1).

    T_z = gamma0 hbar^2 k^2 |b0|^2 / (5 M kappa_eff k_B) and
    T_alpha,beta = gamma0 hbar^2 dchi^2 |b0|^2 / (2 I chi_m^2 kappa_eff k_B)
    with kappa_eff = kappa + gamma0/2.
    """
    kappa_eff = sp.kappa + sp.gamma0 / 2.0
    chi = sp.chi
    t_z = (sp.gamma0 * HBAR**2 * sp.k**2 * b0_sq
           / (5.0 * sp.mass * kappa_eff * K_BOLTZMANN))
    if sp.kind == SPHERE:
        t_rot = 0.0
    else:
        t_rot = (sp.gamma0 * HBAR**2 * chi.delta_chi**2 * b0_sq
                 / (2.0 * sp.inertia * chi.chi_m**2 * kappa_eff * K_BOLTZMANN))
    return {"T_z": t_z, "T_rot": t_rot, "kappa_eff": kappa_eff}
