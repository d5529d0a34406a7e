"""Classical cavity-optomechanics simulator for dielectric rods, disks and spheres.

Covers the coupled particle-cavity dynamics in a driven standing-wave mode:
optical potential and torques for anisotropic thin particles, Rayleigh
scattering rates and recoil forces, capture Monte Carlo, phase-space cooling
rates and recoil-limited steady-state temperatures.
"""

__version__ = "0.1.0"

from .params import (
    ParticleSpec,
    CavityConfig,
    Susceptibilities,
    DerivedParams,
    SimParams,
    derive_susceptibilities,
    derive_coupling,
    calibrate_mode_volume,
    equivalent_sphere,
    validity_report,
)

__all__ = [
    "__version__",
    "ParticleSpec",
    "CavityConfig",
    "Susceptibilities",
    "DerivedParams",
    "SimParams",
    "derive_susceptibilities",
    "derive_coupling",
    "calibrate_mode_volume",
    "equivalent_sphere",
    "validity_report",
]
