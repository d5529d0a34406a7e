"""Coupled particle-cavity propagation and trajectory classification.

``derivative`` is the reference right-hand side built from the ``optics``
quadrature functions; ``integrate`` drives the compiled kernel in ``fast``,
whose reduction tables are validated against the reference path when built.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import fast, optics
from .constants import HBAR
from .params import SPHERE, SimParams
from .rotor import RotorState
from .optics import build_quadrature

CAVITY_MODES = ("dynamic", "adiabatic", "frozen")


class NumericalError(RuntimeError):
    """Propagation failure with a diagnostic state dump."""

    def __init__(self, message, state=None):
        super().__init__(message if state is None
                         else f"{message}; state: {state}")
        self.state = state


@dataclass
class SystemState:
    """Phase-space point of the coupled system."""

    r: np.ndarray
    p: np.ndarray
    rotor: RotorState
    b: complex
    t: float = 0.0

    def __post_init__(self):
        self.r = np.asarray(self.r, dtype=float)
        self.p = np.asarray(self.p, dtype=float)

    def validate(self):
        vals = np.concatenate([self.r, self.p, self.rotor.m, self.rotor.L,
                               [self.b.real, self.b.imag, self.t]])
        if not np.all(np.isfinite(vals)):
            raise NumericalError("non-finite component in state", self)


@dataclass(frozen=True)
class IntegratorConfig:
    rel_tol: float = 1e-7
    abs_tol: float = 1e-9
    max_step: float = 2e-6
    cadence: float = 2e-6
    cavity_mode: str = "dynamic"
    radiation_pressure: bool = True
    scattering: bool = True
    quadrature_degree: int = 30

    def __post_init__(self):
        for name, tol in (("rel_tol", self.rel_tol), ("abs_tol", self.abs_tol)):
            if not 1e-12 <= tol <= 1e-4:
                raise ValueError(f"{name}={tol} outside [1e-12, 1e-4]")
        if self.cavity_mode not in CAVITY_MODES:
            raise ValueError(f"unknown cavity mode {self.cavity_mode!r}")
        if self.max_step <= 0 or self.cadence <= 0:
            raise ValueError("max_step and cadence must be positive")


@dataclass(frozen=True)
class CaptureCriteria:
    """Operational capture/transit thresholds for one launch."""

    energy_threshold: float   # captured while E stays below this (negative)
    confirm_time: float       # continuous time below threshold required
    exit_plane: float         # |x| beyond which a positive-energy exit counts
    bound_radius: float       # |x| bound while confirming capture
    max_time: float


def capture_criteria(sp: SimParams, v_x: float, b_ss_sq: float,
                     depth_fraction: float = 1e-3, exit_waists: float = 3.0,
                     confirm_crossings: float = 10.0,
                     max_crossings: float = 20.0) -> CaptureCriteria:
    """Thresholds in units of the steady-state well depth and waist-crossing
    time 6 w0 / v_x of the launch."""
    crossing = 6.0 * sp.waist / abs(v_x)
    return CaptureCriteria(
        energy_threshold=-depth_fraction * HBAR * abs(sp.u0) * b_ss_sq,
        confirm_time=confirm_crossings * crossing,
        exit_plane=exit_waists * sp.waist,
        bound_radius=sp.waist,
        max_time=max_crossings * crossing,
    )


@dataclass
class StateDerivative:
    dr: np.ndarray
    dp: np.ndarray
    dm: np.ndarray
    dL: np.ndarray
    db: complex
    v: float
    gamma_sc: float


def empty_cavity_amplitude(sp: SimParams) -> complex:
    """Steady state of the undriven-particle cavity: eta / (kappa - i Delta)."""
    return sp.eta / (sp.kappa - 1j * sp.detuning)


def derivative(state: SystemState, sp: SimParams,
               cfg: IntegratorConfig | None = None,
               quad=None) -> StateDerivative:
    """Reference equations of motion (quadrature route, no tables)."""
    cfg = cfg or IntegratorConfig()
    state.validate()
    r, p = state.r, state.p
    m, L = state.rotor.m, state.rotor.L
    if quad is None:
        quad = build_quadrature(cfg.quadrature_degree)

    v, dv_dr, dv_dm = optics.potential_gradients(r, m, sp)
    scattering = cfg.scattering and cfg.cavity_mode != "frozen"
    gamma_sc = optics.scattering_rate(r, m, sp, quad) if scattering else 0.0

    detune = sp.detuning - sp.u0 * v
    kappa_eff = sp.kappa + 0.5 * gamma_sc
    if cfg.cavity_mode == "adiabatic":
        b = sp.eta / (kappa_eff + 1j * detune)
        db = 0.0 + 0.0j
    elif cfg.cavity_mode == "frozen":
        b = state.b
        db = 0.0 + 0.0j
    else:
        b = state.b
        db = (1j * detune - kappa_eff) * b + sp.eta
    b_sq = abs(b) ** 2

    scale = HBAR * sp.u0 * b_sq
    force = -scale * dv_dr
    torque = -scale * np.cross(m, dv_dm)
    if cfg.radiation_pressure and sp.kind != SPHERE and cfg.cavity_mode != "frozen":
        rp = optics.radiation_pressure(r, m, b_sq, sp, quad)
        force = force + rp.force
        torque = torque + rp.torque_m

    if sp.kind == SPHERE:
        dm = np.zeros(3)
        torque = np.zeros(3)
    else:
        dm = np.cross(L / sp.inertia, m)
    out = StateDerivative(dr=p / sp.mass, dp=force, dm=dm, dL=torque,
                          db=db, v=v, gamma_sc=gamma_sc)
    vals = np.concatenate([out.dr, out.dp, out.dm, out.dL,
                           [out.db.real, out.db.imag]])
    if not np.all(np.isfinite(vals)):
        raise NumericalError("non-finite derivative", state)
    return out


def total_energy(state: SystemState, sp: SimParams) -> float:
    """H_p + V; negative off-beam-referenced energy means bound.

    The conserved spin about the symmetry axis is decoupled and excluded
    (it is zero in all standard launches).
    """
    kin = float(state.p @ state.p) / (2.0 * sp.mass)
    if sp.kind != SPHERE:
        kin += float(state.rotor.L @ state.rotor.L) / (2.0 * sp.inertia)
    return kin + optics.potential(state.r, state.rotor.m, abs(state.b) ** 2, sp)


# ---------------------------------------------------------------------------
# Compiled model: parameter pack plus reduction tables.

_MODEL_CACHE: dict = {}
_TABLE_CACHE: dict = {}


class FastModel:
    """Parameter pack and reduction tables consumed by the compiled kernel."""

    def __init__(self, sp: SimParams, cfg: IntegratorConfig, validate=True):
        self.sp = sp
        self.cfg = cfg
        kind = {"rod": 0, "disk": 1, "sphere": 2}[sp.kind]
        cav = {"dynamic": 0, "adiabatic": 1, "frozen": 2}[cfg.cavity_mode]
        inertia = sp.inertia if sp.kind != SPHERE else 1.0
        scattering = cfg.scattering and cfg.cavity_mode != "frozen"
        rad = cfg.radiation_pressure and cfg.cavity_mode != "frozen"
        pars = np.zeros(fast.NPARS)
        pars[fast.P_MASS] = sp.mass
        pars[fast.P_INERTIA] = inertia
        pars[fast.P_U0] = sp.u0
        pars[fast.P_GAMMA0] = sp.gamma0
        pars[fast.P_KAPPA] = sp.kappa
        pars[fast.P_DELTA] = sp.detuning
        pars[fast.P_ETA] = sp.eta
        pars[fast.P_K] = sp.k
        pars[fast.P_W0] = sp.waist
        pars[fast.P_AU] = sp.chi_ratio_perp
        pars[fast.P_BM] = sp.chi_ratio_delta
        pars[fast.P_SCALE] = sp.shape_scale
        pars[fast.P_HBAR] = HBAR
        pars[fast.P_RADPRESS] = 1.0 if rad else 0.0
        pars[fast.P_CAVMODE] = float(cav)
        pars[fast.P_SCATTER] = 1.0 if scattering else 0.0
        pars[fast.P_KIND] = float(kind)
        self.pars = pars

        if (scattering or rad) and kind < 2:
            # Reduction tables depend only on shape and susceptibility ratios,
            # not on cavity power or linewidth; share them across runs.
            tab_key = (kind, sp.chi_ratio_perp, sp.chi_ratio_delta,
                       sp.shape_scale, cfg.quadrature_degree)
            tables = _TABLE_CACHE.get(tab_key)
            if tables is None:
                quad = build_quadrature(cfg.quadrature_degree)
                tables = fast._build_tables(
                    quad.nodes, quad.weights, sp.chi_ratio_perp,
                    sp.chi_ratio_delta, sp.shape_scale, kind,
                    fast.TABLE_NT, fast.TABLE_NP)
                self.tables = tables
                if validate:
                    self._validate_tables(quad)
                _TABLE_CACHE[tab_key] = tables
            self.tables = tables
        else:
            self.tables = np.zeros((fast.N_TABLES, 4, 4))

    def _validate_tables(self, quad, n_points: int = 16, tol: float = 1e-5):
        """Spot-check the interpolated fast path against the direct quadrature."""
        sp = self.sp
        rng = np.random.default_rng(1234)
        du = np.empty(14)
        tl = np.empty(fast.N_TABLES)
        for _ in range(n_points):
            m = rng.normal(size=3)
            m /= np.linalg.norm(m)
            r = np.array([rng.uniform(-sp.waist, sp.waist),
                          rng.uniform(-sp.waist, sp.waist),
                          rng.uniform(-0.5, 0.5) * sp.cavity.wavelength])
            y = np.zeros(14)
            y[0:3] = r
            y[6:9] = m
            y[12] = 1.0
            v, gsc, _, _ = fast._rhs(y, self.pars, self.tables, tl, du)
            ref = optics.scattering_rate(r, m, sp, quad)
            if self.pars[fast.P_SCATTER] > 0.5:
                if abs(gsc - ref) > tol * max(ref, sp.gamma0 * 1e-6):
                    raise NumericalError(
                        f"fast-path scattering rate off by "
                        f"{abs(gsc - ref) / max(ref, 1e-300):.2e} at m={m}")
            if self.pars[fast.P_RADPRESS] > 0.5:
                rp = optics.radiation_pressure(r, m, 1.0, sp, quad)
                gf = optics.potential_force_torque(r, m, 1.0, sp)
                fscale = max(np.max(np.abs(rp.force)) + np.max(np.abs(gf.force)),
                             HBAR * abs(sp.u0) * sp.k * 1e-12)
                kf = du[3:6] - gf.force
                if np.max(np.abs(kf - rp.force)) > 10 * tol * fscale:
                    raise NumericalError("fast-path recoil force validation failed")

    @classmethod
    def get(cls, sp: SimParams, cfg: IntegratorConfig) -> "FastModel":
        key = (sp.particle, sp.cavity, cfg.cavity_mode, cfg.radiation_pressure,
               cfg.scattering, cfg.quadrature_degree)
        model = _MODEL_CACHE.get(key)
        if model is None:
            model = cls(sp, cfg)
            _MODEL_CACHE[key] = model
        return model


def pack_state(state: SystemState) -> np.ndarray:
    y = np.empty(14)
    y[0:3] = state.r
    y[3:6] = state.p
    y[6:9] = state.rotor.m
    y[9:12] = state.rotor.L
    y[12] = state.b.real
    y[13] = state.b.imag
    return y


def unpack_state(y: np.ndarray, t: float, spin: float = 0.0) -> SystemState:
    return SystemState(r=y[0:3].copy(), p=y[3:6].copy(),
                       rotor=RotorState(m=y[6:9].copy(), L=y[9:12].copy(),
                                        spin=spin),
                       b=complex(y[12], y[13]), t=t)


@dataclass
class Trajectory:
    """Dense trajectory record at uniform cadence plus derived series."""

    t: np.ndarray
    r: np.ndarray
    p: np.ndarray
    m: np.ndarray
    L: np.ndarray
    b: np.ndarray
    energy: np.ndarray
    gamma_sc: np.ndarray
    status: str
    final_state: SystemState
    meta: dict = field(default_factory=dict)

    @property
    def b_sq(self) -> np.ndarray:
        return np.abs(self.b) ** 2

    def samples(self) -> list[SystemState]:
        return [SystemState(r=self.r[i], p=self.p[i],
                            rotor=RotorState(m=self.m[i], L=self.L[i]),
                            b=complex(self.b[i]), t=float(self.t[i]))
                for i in range(len(self.t))]


_STATUS_NAMES = {
    fast.ST_UNDECIDED: "undecided",
    fast.ST_CAPTURED: "captured",
    fast.ST_TRANSMITTED: "transmitted",
}


def _error_scales(state: SystemState, sp: SimParams) -> np.ndarray:
    """Characteristic magnitudes for the absolute-error floor of each component."""
    v_scale = max(float(np.linalg.norm(state.p)) / sp.mass, 1e-2)
    b_scale = max(abs(empty_cavity_amplitude(sp)), abs(state.b), 1.0)
    depth_b_sq = (sp.eta / sp.kappa) ** 2
    omega_char = math.sqrt(2.0 * HBAR * abs(sp.u0) * depth_b_sq * sp.k**2 / sp.mass)
    inertia = sp.inertia if sp.kind != SPHERE else 1.0
    l_scale = max(float(np.linalg.norm(state.rotor.L)), inertia * omega_char,
                  inertia * 1e3)
    scales = np.empty(14)
    scales[0:3] = 1.0 / sp.k
    scales[3:6] = sp.mass * v_scale
    scales[6:9] = 1.0
    scales[9:12] = l_scale
    scales[12:14] = b_scale
    return scales


def integrate(initial: SystemState, t_end: float, sp: SimParams,
              cfg: IntegratorConfig | None = None,
              criteria: CaptureCriteria | None = None,
              record: bool = True) -> Trajectory:
    """Propagate to ``t_end`` (or an event) with dense output at the cadence.

    Raises :class:`NumericalError` on NaN, step underflow or energy blow-up.
    """
    cfg = cfg or IntegratorConfig()
    initial.validate()
    if t_end <= initial.t:
        raise ValueError("t_end must exceed the initial time")
    model = FastModel.get(sp, cfg)
    y0 = pack_state(initial)
    atolv = cfg.abs_tol * _error_scales(initial, sp)

    kin0 = total_energy(initial, sp) - optics.potential(
        initial.r, initial.rotor.m, abs(initial.b) ** 2, sp)
    depth = HBAR * abs(sp.u0) * (sp.eta / sp.kappa) ** 2
    limits = np.empty(5)
    if criteria is None:
        limits[fast.L_ECAPTURE] = -np.inf
        limits[fast.L_TCONFIRM] = np.inf
        limits[fast.L_XEXIT] = np.inf
        limits[fast.L_XBOUND] = np.inf
    else:
        limits[fast.L_ECAPTURE] = criteria.energy_threshold
        limits[fast.L_TCONFIRM] = criteria.confirm_time
        limits[fast.L_XEXIT] = criteria.exit_plane
        limits[fast.L_XBOUND] = criteria.bound_radius
    limits[fast.L_EBLOW] = 10.0 * (kin0 + depth)

    span = t_end - initial.t
    cadence = cfg.cadence if record else -1.0
    n_rows = int(math.floor(span / cfg.cadence)) + 1 if record else 1
    out = np.empty((n_rows, 17))
    h0 = min(cfg.max_step, span / 100.0, cfg.cadence)

    status, nfill, t_fin, y_fin, nsteps, naccept = fast._integrate(
        y0, initial.t, t_end, h0, cfg.rel_tol, atolv, cfg.max_step, cadence,
        model.pars, model.tables, limits, out)

    if status == fast.ST_NAN:
        raise NumericalError("NaN encountered during integration",
                             unpack_state(y_fin, t_fin))
    if status == fast.ST_UNDERFLOW:
        raise NumericalError("step size underflow", unpack_state(y_fin, t_fin))
    if status == fast.ST_BLOWUP:
        raise NumericalError("energy blow-up (>10x initial kinetic scale)",
                             unpack_state(y_fin, t_fin))

    rows = out[:nfill] if record else out[:0]
    traj = Trajectory(
        t=rows[:, 0].copy(),
        r=rows[:, 1:4].copy(),
        p=rows[:, 4:7].copy(),
        m=rows[:, 7:10].copy(),
        L=rows[:, 10:13].copy(),
        b=(rows[:, 13] + 1j * rows[:, 14]).copy(),
        energy=rows[:, 15].copy(),
        gamma_sc=rows[:, 16].copy(),
        status=_STATUS_NAMES.get(status, "undecided"),
        final_state=unpack_state(y_fin, t_fin, spin=initial.rotor.spin),
        meta={"steps": int(nsteps), "accepted": int(naccept),
              "cavity_mode": cfg.cavity_mode,
              "radiation_pressure": cfg.radiation_pressure,
              "t_end": t_end},
    )
    return traj


def classify(traj: Trajectory, sp: SimParams,
             criteria: CaptureCriteria) -> str:
    """captured / transmitted / undecided from a recorded trajectory.

    Captured requires the energy to sit below the (negative) threshold with
    |x| inside one waist for the whole trailing confirmation window;
    a positive-energy outward exit beyond the exit plane is transmitted;
    anything else stays undecided.
    """
    if traj.status in ("captured", "transmitted"):
        return traj.status
    if len(traj.t) == 0:
        return "undecided"
    t_last = traj.t[-1]
    window = traj.t >= t_last - criteria.confirm_time
    if (t_last - traj.t[0] >= criteria.confirm_time
            and np.all(traj.energy[window] < criteria.energy_threshold)
            and np.all(np.abs(traj.r[window, 0]) < criteria.bound_radius)):
        return "captured"
    if (abs(traj.r[-1, 0]) > criteria.exit_plane and traj.energy[-1] > 0.0
            and traj.r[-1, 0] * traj.p[-1, 0] > 0.0):
        return "transmitted"
    return "undecided"
