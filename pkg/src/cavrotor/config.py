"""Strict plain-text run configuration: sections of key = value lines.

Dimensioned values carry explicit unit suffixes (nm, um, MHz, mW, m/s, ...);
bare numbers are rejected for them. Unknown keys are rejected with the
nearest valid name. Every applied default is recorded so run metadata can
echo exactly what was assumed.
"""

from __future__ import annotations

import difflib
import hashlib
import math
from dataclasses import dataclass

from .dynamics import IntegratorConfig
from .ensemble import EnsembleConfig
from .params import (RATE_ANGULAR, RATE_DIVIDED_BY_2PI, CavityConfig,
                     ParticleSpec, SimParams)


class ConfigError(ValueError):
    """Malformed configuration; carries file position context."""

    def __init__(self, message, line=None, column=None):
        loc = ""
        if line is not None:
            loc = f" (line {line}" + (f", column {column}" if column else "") + ")"
        super().__init__(message + loc)
        self.line = line
        self.column = column


LENGTH_UNITS = {"nm": 1e-9, "um": 1e-6, "µm": 1e-6, "mm": 1e-3, "cm": 1e-2, "m": 1.0}
TIME_UNITS = {"ns": 1e-9, "us": 1e-6, "µs": 1e-6, "ms": 1e-3, "s": 1.0}
RATE_UNITS = {"Hz": 1.0, "kHz": 1e3, "MHz": 1e6, "GHz": 1e9}
POWER_UNITS = {"nW": 1e-9, "uW": 1e-6, "µW": 1e-6, "mW": 1e-3, "W": 1.0}
VELOCITY_UNITS = {"m/s": 1.0, "mm/s": 1e-3, "um/s": 1e-6, "cm/s": 1e-2}
DENSITY_UNITS = {"kg/m^3": 1.0, "g/cm^3": 1e3}
VOLUME_UNITS = {"m^3": 1.0, "um^3": 1e-18, "µm^3": 1e-18}

_REQUIRED = object()


@dataclass
class _Entry:
    value: str
    line: int
    column: int


@dataclass
class RawConfig:
    sections: dict          # section -> {key: _Entry}
    text: str
    path: str

    @property
    def sha256(self) -> str:
        return hashlib.sha256(self.text.encode()).hexdigest()


def _parse_raw(text: str, path: str = "<config>") -> RawConfig:
    sections: dict = {}
    current = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].rstrip()
        if not line.strip():
            continue
        stripped = line.strip()
        if stripped.startswith("[") and stripped.endswith("]"):
            current = stripped[1:-1].strip()
            if not current:
                raise ConfigError("empty section name", lineno)
            sections.setdefault(current, {})
            continue
        if "=" not in stripped:
            raise ConfigError(f"expected 'key = value', got {stripped!r}", lineno)
        if current is None:
            raise ConfigError("key outside of any [section]", lineno)
        key, _, value = stripped.partition("=")
        key = key.strip()
        value = value.strip()
        if not value:
            raise ConfigError(f"empty value for key {key!r}", lineno)
        if key in sections[current]:
            raise ConfigError(f"duplicate key {key!r} in [{current}]", lineno)
        sections[current][key] = _Entry(value, lineno, raw.index("=") + 1)
    return RawConfig(sections=sections, text=text, path=path)


def _parse_quantity(entry: _Entry, units: dict, what: str,
                    extra_units: dict | None = None) -> float:
    parts = entry.value.split()
    table = dict(units)
    if extra_units:
        table.update(extra_units)
    if len(parts) == 1:
        try:
            float(parts[0])
        except ValueError:
            raise ConfigError(f"cannot parse {what} value {entry.value!r}",
                              entry.line, entry.column) from None
        raise ConfigError(
            f"{what} value {entry.value!r} lacks a unit suffix "
            f"(expected one of {', '.join(sorted(table))})",
            entry.line, entry.column)
    if len(parts) != 2:
        raise ConfigError(f"malformed {what} value {entry.value!r}",
                          entry.line, entry.column)
    num, unit = parts
    if unit not in table:
        raise ConfigError(
            f"unknown unit {unit!r} for {what} "
            f"(expected one of {', '.join(sorted(table))})",
            entry.line, entry.column)
    try:
        return float(num) * table[unit]
    except ValueError:
        raise ConfigError(f"cannot parse number {num!r}", entry.line,
                          entry.column) from None


def _parse_float(entry: _Entry, what: str) -> float:
    try:
        return float(entry.value)
    except ValueError:
        raise ConfigError(f"cannot parse {what} value {entry.value!r} as a number",
                          entry.line, entry.column) from None


def _parse_int(entry: _Entry, what: str) -> int:
    try:
        return int(entry.value)
    except ValueError:
        raise ConfigError(f"cannot parse {what} value {entry.value!r} as an integer",
                          entry.line, entry.column) from None


def _parse_bool(entry: _Entry, what: str) -> bool:
    lowered = entry.value.lower()
    if lowered in ("on", "true", "yes", "1"):
        return True
    if lowered in ("off", "false", "no", "0"):
        return False
    raise ConfigError(f"cannot parse {what} value {entry.value!r} as on/off",
                      entry.line, entry.column)


def _parse_choice(entry: _Entry, what: str, choices) -> str:
    if entry.value not in choices:
        raise ConfigError(f"{what} must be one of {', '.join(choices)}; "
                          f"got {entry.value!r}", entry.line, entry.column)
    return entry.value


# (section, key) -> parse kind; used for strict-schema checking and defaults.
_SCHEMA = {
    ("particle", "kind"): "choice:rod,disk,sphere",
    ("particle", "length"): "length",
    ("particle", "radius"): "length",
    ("particle", "density"): "density",
    ("particle", "permittivity"): "float",
    ("cavity", "wavelength"): "length",
    ("cavity", "linewidth"): "rate",
    ("cavity", "detuning"): "rate_or_kappa",
    ("cavity", "power"): "power",
    ("cavity", "waist"): "length",
    ("cavity", "rate_convention"): "choice:angular,divided_by_2pi",
    ("cavity", "coupling_ratio"): "float",
    ("cavity", "mode_volume"): "volume",
    ("integrator", "rel_tol"): "float",
    ("integrator", "abs_tol"): "float",
    ("integrator", "max_step"): "time",
    ("integrator", "cadence"): "time",
    ("integrator", "cavity_mode"): "choice:dynamic,adiabatic,frozen",
    ("integrator", "radiation_pressure"): "bool",
    ("integrator", "scattering"): "bool",
    ("integrator", "quadrature_degree"): "int",
    ("ensemble", "trajectories"): "int",
    ("ensemble", "vx_min"): "velocity",
    ("ensemble", "vx_max"): "velocity",
    ("ensemble", "vx_points"): "int",
    ("ensemble", "vz_spread"): "float",
    ("ensemble", "rotation_frequency"): "rate",
    ("ensemble", "max_crossings"): "float",
    ("ensemble", "confirm_crossings"): "float",
    ("trajectory", "vx"): "velocity",
    ("trajectory", "vz"): "velocity",
    ("trajectory", "z_phase"): "float",
    ("trajectory", "orientation_seed"): "int",
    ("run", "seed"): "int",
    ("run", "threads"): "int",
}

_DEFAULTS = {
    ("particle", "density"): 2329.0,
    ("particle", "permittivity"): 12.1,
    ("cavity", "rate_convention"): RATE_DIVIDED_BY_2PI,
    ("integrator", "rel_tol"): 1e-7,
    ("integrator", "abs_tol"): 1e-9,
    ("integrator", "max_step"): 2e-6,
    ("integrator", "cadence"): 2e-6,
    ("integrator", "cavity_mode"): "dynamic",
    ("integrator", "radiation_pressure"): True,
    ("integrator", "scattering"): True,
    ("integrator", "quadrature_degree"): 30,
    ("ensemble", "trajectories"): 2000,
    ("ensemble", "vx_min"): 0.1,
    ("ensemble", "vx_max"): 3.0,
    ("ensemble", "vx_points"): 11,
    ("ensemble", "vz_spread"): 0.05,
    ("ensemble", "rotation_frequency"): 1e6,
    ("ensemble", "max_crossings"): 20.0,
    ("ensemble", "confirm_crossings"): 10.0,
    ("trajectory", "vx"): 0.5,
    ("trajectory", "vz"): -0.3,
    ("trajectory", "z_phase"): -1.0,   # < 0 means: draw from orientation_seed
    ("trajectory", "orientation_seed"): 1,
    ("run", "seed"): 20260811,
    ("run", "threads"): 0,             # 0 = all cores
}


@dataclass
class RunConfig:
    """Validated configuration plus provenance metadata."""

    sim: SimParams
    integrator: IntegratorConfig
    ensemble: EnsembleConfig
    vx_grid: list
    trajectory: dict
    seed: int
    threads: int
    defaulted: list
    sha256: str
    path: str
    raw_echo: dict

    def metadata(self) -> dict:
        return {
            "config_path": self.path,
            "config_sha256": self.sha256,
            "seed": self.seed,
            "defaulted_keys": self.defaulted,
            "config": self.raw_echo,
            "derived": self.sim.metadata(),
        }


def parse_config(path: str) -> RunConfig:
    """Load, validate and resolve a run configuration file."""
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    return parse_config_text(text, path)


def parse_config_text(text: str, path: str = "<config>") -> RunConfig:
    raw = _parse_raw(text, path)

    known_sections = {s for s, _ in _SCHEMA}
    for section, entries in raw.sections.items():
        if section not in known_sections:
            hint = difflib.get_close_matches(section, sorted(known_sections), n=1)
            extra = f"; did you mean [{hint[0]}]?" if hint else ""
            first = min(entries.values(), key=lambda e: e.line, default=None)
            raise ConfigError(f"unknown section [{section}]{extra}",
                              first.line if first else None)
        valid = sorted(k for s, k in _SCHEMA if s == section)
        for key, entry in entries.items():
            if (section, key) not in _SCHEMA:
                hint = difflib.get_close_matches(key, valid, n=1)
                extra = f"; did you mean {hint[0]!r}?" if hint else ""
                raise ConfigError(f"unknown key {key!r} in [{section}]{extra}",
                                  entry.line, entry.column)

    defaulted = []

    def get(section, key, kind, required=False, kappa=None, convention=None):
        entry = raw.sections.get(section, {}).get(key)
        if entry is None:
            if required:
                raise ConfigError(f"missing required key {key!r} in [{section}]")
            defaulted.append(f"{section}.{key}")
            return _DEFAULTS.get((section, key))
        what = f"{section}.{key}"
        if kind == "float":
            return _parse_float(entry, what)
        if kind == "int":
            return _parse_int(entry, what)
        if kind == "bool":
            return _parse_bool(entry, what)
        if kind.startswith("choice:"):
            return _parse_choice(entry, what, kind.split(":", 1)[1].split(","))
        if kind == "length":
            return _parse_quantity(entry, LENGTH_UNITS, what)
        if kind == "time":
            return _parse_quantity(entry, TIME_UNITS, what)
        if kind == "power":
            return _parse_quantity(entry, POWER_UNITS, what)
        if kind == "velocity":
            return _parse_quantity(entry, VELOCITY_UNITS, what)
        if kind == "density":
            return _parse_quantity(entry, DENSITY_UNITS, what)
        if kind == "volume":
            return _parse_quantity(entry, VOLUME_UNITS, what)
        if kind == "rate":
            value = _parse_quantity(entry, RATE_UNITS, what)
            if convention == RATE_DIVIDED_BY_2PI:
                value *= 2.0 * math.pi
            return value
        if kind == "rate_or_kappa":
            parts = entry.value.split()
            if len(parts) == 2 and parts[1] == "kappa":
                return float(parts[0]) * kappa
            value = _parse_quantity(entry, RATE_UNITS, what,
                                    extra_units={"kappa": 0.0})
            if convention == RATE_DIVIDED_BY_2PI:
                value *= 2.0 * math.pi
            return value
        raise AssertionError(kind)

    kind = get("particle", "kind", "choice:rod,disk,sphere", required=True)
    needs_length = kind in ("rod", "disk")
    length_entry = raw.sections.get("particle", {}).get("length")
    if needs_length and length_entry is None:
        raise ConfigError("missing required key 'length' in [particle]")
    particle = ParticleSpec(
        kind=kind,
        length=get("particle", "length", "length") if needs_length else 1.0,
        radius=get("particle", "radius", "length", required=True),
        density=get("particle", "density", "density"),
        permittivity=get("particle", "permittivity", "float"),
    )

    convention = get("cavity", "rate_convention", "choice:angular,divided_by_2pi")
    factor = 1.0 if convention == RATE_ANGULAR else 2.0 * math.pi
    linewidth = get("cavity", "linewidth", "rate", required=True,
                    convention=convention)
    detuning = get("cavity", "detuning", "rate_or_kappa", required=True,
                   kappa=linewidth, convention=convention)
    mode_volume = 0.0
    coupling_ratio = 0.0
    has_vc = "mode_volume" in raw.sections.get("cavity", {})
    has_ratio = "coupling_ratio" in raw.sections.get("cavity", {})
    if has_vc and has_ratio:
        raise ConfigError("set either cavity.mode_volume or "
                          "cavity.coupling_ratio, not both")
    if has_vc:
        mode_volume = get("cavity", "mode_volume", "volume")
    elif has_ratio:
        coupling_ratio = get("cavity", "coupling_ratio", "float")
    else:
        raise ConfigError("one of cavity.mode_volume or cavity.coupling_ratio "
                          "is required")
    cavity = CavityConfig(
        wavelength=get("cavity", "wavelength", "length", required=True),
        linewidth=linewidth,
        detuning=detuning,
        power=get("cavity", "power", "power", required=True),
        waist=get("cavity", "waist", "length", required=True),
        mode_volume=mode_volume,
        coupling_ratio=coupling_ratio,
        rate_convention=convention,
    )

    integ = IntegratorConfig(
        rel_tol=get("integrator", "rel_tol", "float"),
        abs_tol=get("integrator", "abs_tol", "float"),
        max_step=get("integrator", "max_step", "time"),
        cadence=get("integrator", "cadence", "time"),
        cavity_mode=get("integrator", "cavity_mode",
                        "choice:dynamic,adiabatic,frozen"),
        radiation_pressure=get("integrator", "radiation_pressure", "bool"),
        scattering=get("integrator", "scattering", "bool"),
        quadrature_degree=get("integrator", "quadrature_degree", "int"),
    )

    # rotation frequency is mechanical (cycles); no angular-rate convention
    rot_entry = raw.sections.get("ensemble", {}).get("rotation_frequency")
    if rot_entry is not None:
        rotation = _parse_quantity(rot_entry, RATE_UNITS, "ensemble.rotation_frequency")
    else:
        defaulted.append("ensemble.rotation_frequency")
        rotation = _DEFAULTS[("ensemble", "rotation_frequency")]
    ens = EnsembleConfig(
        trajectories=get("ensemble", "trajectories", "int"),
        v_z_spread=get("ensemble", "vz_spread", "float"),
        rotation_frequency=rotation,
        max_crossings=get("ensemble", "max_crossings", "float"),
        confirm_crossings=get("ensemble", "confirm_crossings", "float"),
    )
    vx_min = get("ensemble", "vx_min", "velocity")
    vx_max = get("ensemble", "vx_max", "velocity")
    vx_points = get("ensemble", "vx_points", "int")
    if vx_points < 1 or vx_max < vx_min:
        raise ConfigError("invalid ensemble velocity grid")
    if vx_points == 1:
        grid = [vx_min]
    else:
        step = (vx_max - vx_min) / (vx_points - 1)
        grid = [vx_min + i * step for i in range(vx_points)]

    trajectory = {
        "vx": get("trajectory", "vx", "velocity"),
        "vz": get("trajectory", "vz", "velocity"),
        "z_phase": get("trajectory", "z_phase", "float"),
        "orientation_seed": get("trajectory", "orientation_seed", "int"),
    }

    echo = {s: {k: e.value for k, e in entries.items()}
            for s, entries in raw.sections.items()}

    return RunConfig(
        sim=SimParams(particle, cavity),
        integrator=integ,
        ensemble=ens,
        vx_grid=grid,
        trajectory=trajectory,
        seed=get("run", "seed", "int"),
        threads=get("run", "threads", "int"),
        defaulted=sorted(defaulted),
        sha256=raw.sha256,
        path=path,
        raw_echo=echo,
    )
