"""Monte Carlo capture-probability experiments.

Per-trajectory randomness comes from counter-based Philox streams keyed by
(master seed, grid index, trajectory index), so results are bit-identical
for any worker count and any execution order. All initial conditions are
drawn up front in the submitting thread; workers only integrate.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import cooling, dynamics
from .dynamics import (IntegratorConfig, SystemState, capture_criteria,
                       empty_cavity_amplitude, integrate)
from .params import SPHERE, SimParams
from .rotor import RotorState

WILSON_Z = 1.959963984540054  # two-sided 95%


def wilson_interval(successes: int, total: int, z: float = WILSON_Z):
    """Wilson score interval for a binomial proportion."""
    if total <= 0:
        raise ValueError("total must be positive")
    p = successes / total
    z2 = z * z
    denom = 1.0 + z2 / total
    center = (p + z2 / (2.0 * total)) / denom
    half = z * math.sqrt(p * (1.0 - p) / total + z2 / (4.0 * total * total)) / denom
    lo = min(max(0.0, center - half), p)
    hi = max(min(1.0, center + half), p)
    return p, lo, hi


@dataclass(frozen=True)
class LaunchDistribution:
    """Initial-condition distribution for capture runs.

    Forward velocity v_x with a uniform transverse spread
    |v_z| <= spread * v_x; launch at x = -offset_waists * w0, y = v_y = 0;
    the standing-wave phase z0 is uniform over one wavelength; orientation
    uniform on the sphere with |L| = I * 2 pi * rotation_frequency in a
    uniformly random direction perpendicular to the axis.
    """

    v_x: float
    v_z_spread: float = 0.05
    rotation_frequency: float = 1e6
    offset_waists: float = 3.0

    def __post_init__(self):
        if self.v_x <= 0:
            raise ValueError("forward velocity must be positive")
        if not 0.0 <= self.v_z_spread < 1.0:
            raise ValueError("v_z spread must be a fraction in [0, 1)")


def sample_initial(dist: LaunchDistribution, sp: SimParams,
                   rng: np.random.Generator) -> SystemState:
    """Draw one launch state; a deterministic function of the rng stream."""
    lam = sp.cavity.wavelength
    z0 = rng.uniform(0.0, lam)
    v_z = rng.uniform(-dist.v_z_spread, dist.v_z_spread) * dist.v_x
    if sp.kind == SPHERE:
        rotor = RotorState(m=np.array([0.0, 0.0, 1.0]), L=np.zeros(3))
    else:
        m = rng.normal(size=3)
        m /= np.linalg.norm(m)
        # micro-canonical shell: fixed |L|, direction uniform in the plane
        # perpendicular to m
        psi = rng.uniform(0.0, 2.0 * math.pi)
        from .rotor import tangent_basis
        e1, e2 = tangent_basis(m)
        l_mag = sp.inertia * 2.0 * math.pi * dist.rotation_frequency
        rotor = RotorState(m=m, L=l_mag * (math.cos(psi) * e1 + math.sin(psi) * e2))
    r0 = np.array([-dist.offset_waists * sp.waist, 0.0, z0])
    p0 = sp.mass * np.array([dist.v_x, 0.0, v_z])
    return SystemState(r=r0, p=p0, rotor=rotor, b=empty_cavity_amplitude(sp))


def trajectory_rng(master_seed: int, point_index: int,
                   traj_index: int) -> np.random.Generator:
    """Counter-based stream for one trajectory; order-independent.

    The Philox key packs (point, trajectory) indices into the second word,
    so every trajectory gets an independent stream regardless of execution
    order or worker count.
    """
    if not 0 <= point_index < 2**32 or not 0 <= traj_index < 2**32:
        raise ValueError("ensemble indices must fit in 32 bits")
    key = np.array([master_seed & 0xFFFFFFFFFFFFFFFF,
                    (point_index << 32) | traj_index], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


@dataclass
class EnsembleResult:
    """Capture statistics at one forward velocity."""

    v_x: float
    n_total: int
    n_captured: int
    n_transmitted: int
    n_undecided: int
    p_capture: float
    ci_low: float
    ci_high: float
    master_seed: int
    point_index: int
    trajectory_seeds: list = field(default_factory=list)
    undecided_flagged: bool = False

    def counts_ok(self) -> bool:
        return self.n_captured + self.n_transmitted + self.n_undecided == self.n_total


@dataclass(frozen=True)
class EnsembleConfig:
    trajectories: int = 2000
    v_z_spread: float = 0.05
    rotation_frequency: float = 1e6
    max_crossings: float = 20.0
    confirm_crossings: float = 10.0
    depth_fraction: float = 1e-3
    exit_waists: float = 3.0
    undecided_flag_fraction: float = 0.05

    def __post_init__(self):
        if self.trajectories < 100:
            raise ValueError("fewer than 100 trajectories per point is not meaningful")


def _run_one(args):
    sp, cfg, crit, state, max_time = args
    traj = integrate(state, max_time, sp, cfg, criteria=crit, record=False)
    return traj.status


def capture_curve(sp: SimParams, v_grid, master_seed: int,
                  ens: EnsembleConfig | None = None,
                  cfg: IntegratorConfig | None = None,
                  threads: int = 1,
                  b_ss_sq: float | None = None) -> list[EnsembleResult]:
    """Capture probability with Wilson intervals over a forward-velocity grid.

    Identical (configuration, master seed) reproduce identical counts for
    any ``threads``; results are reduced in trajectory-index order.
    """
    ens = ens or EnsembleConfig()
    cfg = cfg or IntegratorConfig()
    if b_ss_sq is None:
        b0, _ = cooling.steady_state_b0(sp)
        b_ss_sq = abs(b0) ** 2
    dynamics.FastModel.get(sp, cfg)  # build tables once before fan-out

    results = []
    for i, v_x in enumerate(v_grid):
        dist = LaunchDistribution(v_x=float(v_x), v_z_spread=ens.v_z_spread,
                                  rotation_frequency=ens.rotation_frequency)
        crit = capture_criteria(sp, v_x, b_ss_sq,
                                depth_fraction=ens.depth_fraction,
                                exit_waists=ens.exit_waists,
                                confirm_crossings=ens.confirm_crossings,
                                max_crossings=ens.max_crossings)
        seeds = [(master_seed, i, j) for j in range(ens.trajectories)]
        states = [sample_initial(dist, sp, trajectory_rng(*key)) for key in seeds]
        jobs = [(sp, cfg, crit, st, st.t + crit.max_time) for st in states]
        if threads > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                statuses = list(pool.map(_run_one, jobs, chunksize=8))
        else:
            statuses = [_run_one(j) for j in jobs]
        n_cap = statuses.count("captured")
        n_trans = statuses.count("transmitted")
        n_und = statuses.count("undecided")
        p, lo, hi = wilson_interval(n_cap, ens.trajectories)
        flagged = n_und > ens.undecided_flag_fraction * ens.trajectories
        if flagged:
            warnings.warn(
                f"{n_und}/{ens.trajectories} undecided trajectories at "
                f"v_x = {v_x}; consider extending max_crossings", stacklevel=2)
        results.append(EnsembleResult(
            v_x=float(v_x), n_total=ens.trajectories, n_captured=n_cap,
            n_transmitted=n_trans, n_undecided=n_und, p_capture=p,
            ci_low=lo, ci_high=hi, master_seed=master_seed, point_index=i,
            trajectory_seeds=seeds, undecided_flagged=flagged))
    return results
