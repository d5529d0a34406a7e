"""Physical parameters, unit conventions and derived quantities.

All public values are SI. Frozen dataclasses so parameter bundles can be
shared freely between parallel workers.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

from .constants import C_LIGHT, HBAR

ROD = "rod"
DISK = "disk"
SPHERE = "sphere"
KINDS = (ROD, DISK, SPHERE)

RATE_ANGULAR = "angular"
RATE_DIVIDED_BY_2PI = "divided_by_2pi"

# Default material: silicon at 1.56 um. The source figure names the material
# but not the constants; these are documented assumptions echoed into run
# metadata.
SILICON_DENSITY = 2329.0       # kg/m^3
SILICON_PERMITTIVITY = 12.1    # relative, real


class ParameterError(ValueError):
    """Invalid or inconsistent physical parameters."""


@dataclass(frozen=True)
class Susceptibilities:
    """Susceptibility tensor components of a thin dielectric."""

    chi_par: float
    chi_perp: float
    chi_m: float

    @property
    def delta_chi(self) -> float:
        return self.chi_par - self.chi_perp


def derive_susceptibilities(kind: str, eps_r: float) -> Susceptibilities:
    """Susceptibility components for a thin rod, thin disk or sphere.

    Rod: chi_par = eps_r - 1, chi_perp = 2(eps_r - 1)/(eps_r + 1).
    Disk: chi_par = (eps_r - 1)/eps_r, chi_perp = eps_r - 1.
    Sphere: isotropic 3(eps_r - 1)/(eps_r + 2) in both slots.
    """
    if kind not in KINDS:
        raise ParameterError(f"unknown particle kind {kind!r}")
    if eps_r < 1.0:
        raise ParameterError(
            f"permittivity {eps_r} < 1: absorbing/metallic media unsupported")
    chi_m = eps_r - 1.0
    if kind == ROD:
        return Susceptibilities(chi_m, 2.0 * chi_m / (eps_r + 1.0), chi_m)
    if kind == DISK:
        return Susceptibilities(chi_m / eps_r, chi_m, chi_m)
    chi_s = 3.0 * chi_m / (eps_r + 2.0)
    return Susceptibilities(chi_s, chi_s, chi_m)


@dataclass(frozen=True)
class ParticleSpec:
    """Geometry and material of the particle.

    ``length`` is the rod length or disk thickness (unused for spheres);
    ``radius`` is the cylinder radius, or the sphere radius for spheres.
    """

    kind: str
    length: float
    radius: float
    density: float = SILICON_DENSITY
    permittivity: float = SILICON_PERMITTIVITY

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ParameterError(f"unknown particle kind {self.kind!r}")
        if self.kind != SPHERE and self.length <= 0:
            raise ParameterError("length must be positive")
        if self.radius <= 0:
            raise ParameterError("radius must be positive")
        if self.density <= 0:
            raise ParameterError("density must be positive")
        if self.permittivity < 1.0:
            raise ParameterError("permittivity must be >= 1")

    @property
    def volume(self) -> float:
        if self.kind == SPHERE:
            return 4.0 / 3.0 * math.pi * self.radius**3
        return math.pi * self.radius**2 * self.length

    @property
    def mass(self) -> float:
        return self.density * self.volume

    @property
    def inertia(self) -> float:
        """Moment of inertia perpendicular to the symmetry axis."""
        if self.kind == ROD:
            return self.mass * self.length**2 / 12.0
        if self.kind == DISK:
            return self.mass * self.radius**2 / 4.0
        raise ParameterError("sphere is treated as a point particle")

    @property
    def inertia_axial(self) -> float:
        """Moment of inertia about the symmetry axis (spin is conserved)."""
        if self.kind == SPHERE:
            raise ParameterError("sphere is treated as a point particle")
        return self.mass * self.radius**2 / 2.0

    @property
    def susceptibilities(self) -> Susceptibilities:
        return derive_susceptibilities(self.kind, self.permittivity)

    def shape_scale(self, k: float) -> float:
        """Argument scale of the shape function: k*length (rod) or k*radius (disk)."""
        if self.kind == ROD:
            return k * self.length
        if self.kind == DISK:
            return k * self.radius
        return 0.0


def equivalent_sphere(length: float, radius: float) -> float:
    """Radius of the sphere with the same volume as a cylinder (l, a)."""
    if length <= 0 or radius <= 0:
        raise ParameterError("cylinder dimensions must be positive")
    return (3.0 * radius**2 * length / 4.0) ** (1.0 / 3.0)


@dataclass(frozen=True)
class CavityConfig:
    """Driven-cavity parameters.

    ``linewidth`` and ``detuning`` are stored in angular units (rad/s); use
    :meth:`from_quoted` to apply a rate convention to quoted values. Exactly
    one of ``mode_volume`` or ``coupling_ratio`` (the target |U0|/kappa used
    for calibration) must be supplied.
    """

    wavelength: float
    linewidth: float
    detuning: float
    power: float
    waist: float
    mode_volume: float = 0.0
    coupling_ratio: float = 0.0
    rate_convention: str = RATE_DIVIDED_BY_2PI

    def __post_init__(self):
        if self.wavelength <= 0:
            raise ParameterError("wavelength must be positive")
        if self.linewidth <= 0:
            raise ParameterError("linewidth must be positive")
        if self.power < 0:
            raise ParameterError("power must be non-negative")
        if self.waist <= 0:
            raise ParameterError("waist must be positive")
        if (self.mode_volume <= 0) == (self.coupling_ratio <= 0):
            raise ParameterError(
                "exactly one of mode_volume or coupling_ratio must be set")

    @classmethod
    def from_quoted(cls, wavelength, linewidth, detuning, power, waist,
                    rate_convention=RATE_DIVIDED_BY_2PI, **kw) -> "CavityConfig":
        """Build a config from quoted rates, applying the rate convention.

        Under ``divided_by_2pi`` a quoted 0.78 MHz linewidth means
        kappa = 2*pi*0.78e6 rad/s; under ``angular`` it is 0.78e6 rad/s.
        """
        if rate_convention not in (RATE_ANGULAR, RATE_DIVIDED_BY_2PI):
            raise ParameterError(f"unknown rate convention {rate_convention!r}")
        factor = 1.0 if rate_convention == RATE_ANGULAR else 2.0 * math.pi
        return cls(wavelength=wavelength, linewidth=factor * linewidth,
                   detuning=factor * detuning, power=power, waist=waist,
                   rate_convention=rate_convention, **kw)

    @property
    def wavenumber(self) -> float:
        return 2.0 * math.pi / self.wavelength

    @property
    def pump_frequency(self) -> float:
        return C_LIGHT * self.wavenumber

    @property
    def pump_rate(self) -> float:
        """eta = sqrt(2 kappa P / (hbar omega_p)), from P = hbar omega_p eta^2 / 2 kappa."""
        return math.sqrt(2.0 * self.linewidth * self.power
                         / (HBAR * self.pump_frequency))


@dataclass(frozen=True)
class DerivedParams:
    """Coupling frequency, Rayleigh rate and pump rate for a (particle, cavity) pair."""

    coupling: float      # U0 < 0, rad/s
    rayleigh_rate: float  # gamma_0, 1/s per intracavity photon
    pump_rate: float      # eta, rad/s
    mode_volume: float    # V_c actually used, m^3


def _u0(particle: ParticleSpec, k: float, mode_volume: float) -> float:
    chi_m = particle.permittivity - 1.0
    omega_p = C_LIGHT * k
    return -omega_p * chi_m * particle.volume / (2.0 * mode_volume)


def _gamma0(particle: ParticleSpec, k: float, mode_volume: float) -> float:
    chi_m = particle.permittivity - 1.0
    return (C_LIGHT * chi_m**2 * particle.volume**2 * k**4
            / (6.0 * math.pi * mode_volume))


def calibrate_mode_volume(particle: ParticleSpec, cavity: CavityConfig,
                          target_ratio: float) -> float:
    """Mode volume such that |U0|/kappa equals ``target_ratio``.

    The source quotes the coupling ratio but not V_c or the cavity length,
    so runs are pinned by this calibration. Rejects results below lambda^3.
    """
    if target_ratio <= 0:
        raise ParameterError("coupling ratio target must be positive")
    chi_m = particle.permittivity - 1.0
    vc = (cavity.pump_frequency * chi_m * particle.volume
          / (2.0 * cavity.linewidth * target_ratio))
    if vc < cavity.wavelength**3:
        raise ParameterError(
            f"calibrated mode volume {vc:.3e} m^3 below lambda^3; "
            "target ratio unphysically large")
    return vc


def derive_coupling(particle: ParticleSpec, cavity: CavityConfig) -> DerivedParams:
    """U0, gamma_0 and eta for the pair, resolving the mode-volume calibration."""
    if cavity.mode_volume > 0:
        vc = cavity.mode_volume
    else:
        vc = calibrate_mode_volume(particle, cavity, cavity.coupling_ratio)
    k = cavity.wavenumber
    return DerivedParams(
        coupling=_u0(particle, k, vc),
        rayleigh_rate=_gamma0(particle, k, vc),
        pump_rate=cavity.pump_rate,
        mode_volume=vc,
    )


def validity_report(particle: ParticleSpec, cavity: CavityConfig,
                    threshold: float = 0.5) -> dict:
    """Dimensionless thin-particle validity numbers with a warning flag.

    Rod requires pi k^2 a^2 (eps_r - 1) << 1; disk requires
    k l (eps_r - 1) << 1. Spheres report the Rayleigh size parameter k R.
    Emits a warning (never an error) above the threshold.
    """
    k = cavity.wavenumber
    chi_m = particle.permittivity - 1.0
    if particle.kind == ROD:
        value = math.pi * k**2 * particle.radius**2 * chi_m
        name = "pi k^2 a^2 (eps_r - 1)"
    elif particle.kind == DISK:
        value = k * particle.length * chi_m
        name = "k l (eps_r - 1)"
    else:
        value = k * particle.radius
        name = "k R"
    if value >= threshold:
        warnings.warn(
            f"thin-particle validity number {name} = {value:.3g} exceeds "
            f"{threshold}; the analytic internal-field model is strained",
            stacklevel=2)
    return {
        "criterion": name,
        "value": value,
        "threshold": threshold,
        "ok": value < threshold,
    }


@dataclass(frozen=True)
class SimParams:
    """Immutable bundle of everything the physics kernels need.

    Built once from (ParticleSpec, CavityConfig); shared read-only across
    workers. ``u0``/``gamma0`` already include the resolved mode volume.
    """

    particle: ParticleSpec
    cavity: CavityConfig
    derived: DerivedParams = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "derived", derive_coupling(self.particle, self.cavity))

    # Short names used throughout the physics modules.
    @property
    def kind(self) -> str:
        return self.particle.kind

    @property
    def k(self) -> float:
        return self.cavity.wavenumber

    @property
    def mass(self) -> float:
        return self.particle.mass

    @property
    def inertia(self) -> float:
        return self.particle.inertia

    @property
    def u0(self) -> float:
        return self.derived.coupling

    @property
    def gamma0(self) -> float:
        return self.derived.rayleigh_rate

    @property
    def eta(self) -> float:
        return self.derived.pump_rate

    @property
    def kappa(self) -> float:
        return self.cavity.linewidth

    @property
    def detuning(self) -> float:
        return self.cavity.detuning

    @property
    def waist(self) -> float:
        return self.cavity.waist

    @property
    def shape_scale(self) -> float:
        return self.particle.shape_scale(self.k)

    @property
    def chi(self) -> Susceptibilities:
        return self.particle.susceptibilities

    @property
    def chi_ratio_perp(self) -> float:
        """chi_perp / chi_m; the isotropic ratio chi_s/chi_m for spheres."""
        c = self.chi
        return c.chi_perp / c.chi_m if c.chi_m > 0 else 0.0

    @property
    def chi_ratio_delta(self) -> float:
        """delta_chi / chi_m (zero for spheres)."""
        c = self.chi
        return c.delta_chi / c.chi_m if c.chi_m > 0 else 0.0

    @property
    def trap_minimum(self):
        """(r0, m0) of the deeply trapped configuration."""
        import numpy as np
        r0 = np.zeros(3)
        m0 = np.array([1.0, 0.0, 0.0]) if self.kind == ROD else np.array([0.0, 0.0, 1.0])
        return r0, m0

    def metadata(self) -> dict:
        """Derived quantities echoed into every output file header."""
        rep = validity_report(self.particle, self.cavity)
        chi = self.chi
        return {
            "kind": self.kind,
            "volume_m3": self.particle.volume,
            "mass_kg": self.mass,
            "inertia_kg_m2": self.inertia if self.kind != SPHERE else None,
            "chi_par": chi.chi_par,
            "chi_perp": chi.chi_perp,
            "chi_m": chi.chi_m,
            "u0_rad_s": self.u0,
            "gamma0_1_s": self.gamma0,
            "eta_rad_s": self.eta,
            "kappa_rad_s": self.kappa,
            "detuning_rad_s": self.detuning,
            "mode_volume_m3": self.derived.mode_volume,
            "waist_m": self.waist,
            "wavelength_m": self.cavity.wavelength,
            "validity": rep,
        }
