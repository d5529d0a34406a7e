#!/usr/bin/env python3
"""Quantitative validation of the retarded-cavity friction.

Puts a rod at the trap minimum with a small axial displacement at low pump
power (so the oscillation is slow compared with the cavity response),
measures the exponential energy-decay rate and compares it against the
quasi-static prediction gamma_E = |Gamma_pre| k^4 z_A^2 / M with
Gamma_pre = 4 hbar kappa eta^2 U0^2 (Delta - U0) / (kappa^2 + (Delta-U0)^2)^3.

The ratio converges to 1 as omega_z / kappa -> 0, pinning the dissipative
dynamics against an independent closed form.
"""

import math

import numpy as np

from cavrotor.constants import HBAR
from cavrotor.dynamics import IntegratorConfig, SystemState, integrate
from cavrotor.params import CavityConfig, ParticleSpec, SimParams
from cavrotor.rotor import RotorState


def drag_ratio(power, periods=400, z_amp_k=0.03):
    cav = CavityConfig.from_quoted(
        wavelength=1.56e-6, linewidth=0.78e6, detuning=-1.2 * 0.78e6,
        power=power, waist=10e-6, rate_convention="angular",
        coupling_ratio=1.1)
    sp = SimParams(ParticleSpec("rod", 800e-9, 25e-9), cav)
    cfg = IntegratorConfig(cavity_mode="dynamic", radiation_pressure=False,
                           scattering=False, rel_tol=1e-10, abs_tol=1e-12,
                           cadence=2e-5)
    b_ad = sp.eta / (sp.kappa - 1j * (sp.detuning - sp.u0))
    b_sq = abs(b_ad) ** 2
    wz = math.sqrt(2 * HBAR * abs(sp.u0) * b_sq * sp.k ** 2 / sp.mass)
    z_amp = z_amp_k / sp.k
    st = SystemState(r=np.array([0.0, 0.0, z_amp]), p=np.zeros(3),
                     rotor=RotorState(m=np.array([1.0, 0.0, 0.0]),
                                      L=np.zeros(3)), b=b_ad)
    traj = integrate(st, periods * 2 * math.pi / wz, sp, cfg)
    de = traj.energy - HBAR * sp.u0 * b_sq
    period = 2 * math.pi / wz
    per_win = max(1, int(round(period / 2e-5)))
    n = (len(de) // per_win) * per_win
    e_win = de[:n].reshape(-1, per_win).mean(axis=1)
    t_win = traj.t[:n].reshape(-1, per_win).mean(axis=1)
    slope = np.polyfit(t_win, np.log(e_win), 1)[0]

    detune = sp.detuning - sp.u0
    pref = (4 * HBAR * sp.kappa * sp.eta ** 2 * sp.u0 ** 2 * detune
            / (sp.kappa ** 2 + detune ** 2) ** 3)
    predicted = -pref * sp.k ** 4 * z_amp ** 2 / sp.mass
    return wz / sp.kappa, -slope, predicted


if __name__ == "__main__":
    print(f"{'omega_z/kappa':>14} {'measured 1/s':>14} {'predicted 1/s':>14} "
          f"{'ratio':>8}")
    for power in (1e-7, 2.5e-8, 6.25e-9):
        ratio, measured, predicted = drag_ratio(power)
        print(f"{ratio:14.4f} {measured:14.4e} {predicted:14.4e} "
              f"{measured / predicted:8.4f}")
