import math

import numpy as np
import pytest

from cavrotor import cooling, fast, optics
from cavrotor.constants import HBAR
from cavrotor.dynamics import (CaptureCriteria, FastModel, IntegratorConfig,
                               NumericalError, SystemState, capture_criteria,
                               classify, derivative, empty_cavity_amplitude,
                               integrate, pack_state, total_energy)
from cavrotor.params import CavityConfig, ParticleSpec, SimParams
from cavrotor.rotor import RotorState

EX = np.array([1.0, 0.0, 0.0])


def _state(sp, r, v, m=None, omega_rot=0.0, b=None):
    if m is None:
        m = EX.copy()
    if omega_rot and sp.kind != "sphere":
        from cavrotor.rotor import tangent_basis
        e1, _ = tangent_basis(m)
        L = sp.inertia * omega_rot * e1
    else:
        L = np.zeros(3)
    return SystemState(r=np.asarray(r, float), p=sp.mass * np.asarray(v, float),
                       rotor=RotorState(m=np.asarray(m, float), L=L),
                       b=b if b is not None else empty_cavity_amplitude(sp))


def test_derivative_empty_cavity_fixed_point(capture_sp):
    sp = capture_sp
    st = _state(sp, [-40 * sp.waist, 0, 0], [0.5, 0, 0])
    d = derivative(st, sp)
    assert abs(d.db) < 1e-9 * sp.eta
    assert np.max(np.abs(d.dp)) < 1e-20


def test_derivative_frozen_conservative(capture_sp):
    sp = capture_sp
    cfg = IntegratorConfig(cavity_mode="frozen", radiation_pressure=False,
                           scattering=False)
    st = _state(sp, [0, 0, 50e-9], [0.01, 0, 0.02], b=1e5 + 0j)
    d = derivative(st, sp, cfg)
    # dE/dt = p/M . dp + L/I . dL + dV; conservative: total is zero
    _, dv_dr, dv_dm = optics.potential_gradients(st.r, st.rotor.m, sp)
    b_sq = abs(st.b) ** 2
    dvdt = HBAR * sp.u0 * b_sq * (float(dv_dr @ d.dr)
                                  + float(dv_dm @ d.dm))
    dkin = (float(st.p @ d.dp) / sp.mass
            + float(st.rotor.L @ d.dL) / sp.inertia)
    scale = abs(HBAR * sp.u0 * b_sq) * sp.k * 0.01
    assert abs(dkin + dvdt) < 1e-10 * scale


def test_kernel_matches_reference_derivative(capture_sp, disk_sp, quad30):
    rng = np.random.default_rng(42)
    cfg = IntegratorConfig()
    for sp in (capture_sp, disk_sp):
        model = FastModel.get(sp, cfg)
        for _ in range(4):
            m = rng.normal(size=3)
            m /= np.linalg.norm(m)
            L = np.cross(m, rng.normal(size=3))
            L *= sp.inertia * 2e6 * math.tau / np.linalg.norm(L)
            st = SystemState(
                r=np.array([rng.uniform(-2, 2) * sp.waist,
                            rng.uniform(-1, 1) * sp.waist,
                            rng.uniform(-0.5, 0.5) * sp.cavity.wavelength]),
                p=sp.mass * np.array([0.5, 0.0, -0.1]),
                rotor=RotorState(m=m, L=L),
                b=empty_cavity_amplitude(sp) * 1.3)
            ref = derivative(st, sp, cfg, quad30)
            y = pack_state(st)
            du = np.empty(14)
            tl = np.empty(fast.N_TABLES)
            v, gsc, _, _ = fast._rhs(y, model.pars, model.tables, tl, du)
            refv = np.concatenate([ref.dr, ref.dp, ref.dm, ref.dL,
                                   [ref.db.real, ref.db.imag]])
            scale = np.max(np.abs(refv))
            assert np.max(np.abs(du - refv)) < 1e-5 * scale
            assert gsc == pytest.approx(ref.gamma_sc, rel=1e-5)
            assert v == pytest.approx(ref.v, rel=1e-9)


def test_free_flight_without_pump(capture_sp):
    cav = CavityConfig(wavelength=1.56e-6, linewidth=capture_sp.kappa,
                       detuning=capture_sp.detuning, power=0.0, waist=10e-6,
                       mode_volume=capture_sp.derived.mode_volume)
    sp = SimParams(ParticleSpec("rod", 800e-9, 25e-9), cav)
    st = _state(sp, [-1e-5, 0, 0.3e-6], [0.5, 0, -0.1], b=0j)
    t_end = 4e-5
    traj = integrate(st, t_end, sp, IntegratorConfig(cadence=1e-5))
    expected = st.r + st.p / sp.mass * (traj.final_state.t)
    assert np.allclose(traj.final_state.r, expected, rtol=0, atol=1e-18)
    assert np.allclose(traj.final_state.p, st.p)


def test_energy_conservation_frozen_1000_periods(cooling_sp):
    # acceptance 6d runs this on the capture config; exercise angular here
    sp = cooling_sp
    b0, _ = cooling.steady_state_b0(sp)
    wz = math.sqrt(2 * HBAR * abs(sp.u0) * abs(b0) ** 2 * sp.k ** 2 / sp.mass)
    st = _state(sp, [0, 0, 40e-9], [0.01, 0, 0.005],
                m=np.array([0.995, 0.0998, 0.0]) / np.linalg.norm([0.995, 0.0998, 0.0]),
                b=b0)
    cfg = IntegratorConfig(cavity_mode="frozen", radiation_pressure=False,
                           scattering=False, rel_tol=1e-9, abs_tol=1e-11,
                           cadence=1e-5)
    traj = integrate(st, 1000 * 2 * math.pi / wz, sp, cfg)
    drift = abs(traj.energy[-1] - traj.energy[0]) / abs(traj.energy[0])
    assert drift < 1e-6


def test_rotor_constraints_maintained(capture_sp):
    sp = capture_sp
    rng = np.random.default_rng(3)
    m = rng.normal(size=3)
    m /= np.linalg.norm(m)
    st = _state(sp, [-5e-6, 0, 0.2e-6], [0.4, 0, -0.05], m=m,
                omega_rot=2 * math.pi * 1e6)
    traj = integrate(st, 3e-4, sp, IntegratorConfig(cadence=2e-6))
    norms = np.linalg.norm(traj.m, axis=1)
    assert np.max(np.abs(norms - 1.0)) < 1e-9
    dots = np.abs(np.einsum("ij,ij->i", traj.m, traj.L))
    l_norm = np.linalg.norm(traj.L, axis=1)
    assert np.max(dots / np.maximum(l_norm, 1e-300)) < 1e-9


def test_trajectory_cadence_uniform(capture_sp):
    st = _state(capture_sp, [-5e-6, 0, 0], [1.0, 0, 0])
    traj = integrate(st, 5e-5, capture_sp, IntegratorConfig(cadence=2e-6))
    dt = np.diff(traj.t)
    assert np.all(dt > 0)
    assert np.max(np.abs(dt - 2e-6)) < 1e-12


def test_reversibility_frozen(capture_sp):
    # conservative dynamics: flip momenta at the end, integrate the same
    # span again, flip back: recover the initial state
    sp = capture_sp
    cfg = IntegratorConfig(cavity_mode="frozen", radiation_pressure=False,
                           scattering=False, rel_tol=1e-10, abs_tol=1e-12)
    st = _state(sp, [0, 0, 60e-9], [0.02, 0, 0.01], b=2e4 + 0j)
    span = 2e-5
    fwd = integrate(st, span, sp, cfg, record=False).final_state
    back_start = SystemState(r=fwd.r, p=-fwd.p,
                             rotor=RotorState(m=fwd.rotor.m, L=-fwd.rotor.L),
                             b=fwd.b, t=0.0)
    back = integrate(back_start, span, sp, cfg, record=False).final_state
    assert np.allclose(back.r, st.r, atol=1e-6 * np.max(np.abs(st.r)) + 1e-15)
    assert np.allclose(-back.p, st.p,
                       atol=1e-6 * np.max(np.abs(st.p)) + 1e-30)


def test_tolerance_halving_convergence(capture_sp):
    # regular (non-chaotic) trapped oscillation so final-state differences
    # measure integrator error rather than Lyapunov divergence
    sp = capture_sp
    b0, _ = cooling.steady_state_b0(sp)
    st = _state(sp, [0, 0, 40e-9], [0.01, 0, 0.005], b=b0)
    wz = math.sqrt(2 * HBAR * abs(sp.u0) * abs(b0) ** 2 * sp.k ** 2 / sp.mass)
    span = 100 * 2 * math.pi / wz
    def run(tols, length):
        cfg = IntegratorConfig(cavity_mode="frozen", radiation_pressure=False,
                               scattering=False, rel_tol=tols[0], abs_tol=tols[1])
        return integrate(st, length, sp, cfg, record=False).final_state.r

    scale = 40e-9
    # order check over one tolerance decade (10 oscillation periods)
    ref = run((1e-11, 1e-12), span)
    err_coarse = np.max(np.abs(run((1e-6, 1e-8), span) - ref)) / scale
    err_fine = np.max(np.abs(run((1e-7, 1e-9), span) - ref)) / scale
    assert err_fine < 0.2 * err_coarse
    # over a single period, halving the tolerance changes the final state by
    # less than the coarser tolerance
    one = 2 * math.pi / wz
    delta = np.max(np.abs(run((1e-6, 1e-8), one) - run((5e-7, 5e-9), one)))
    assert delta / scale < 1e-6


def test_adiabatic_matches_dynamic_for_slow_particle(capture_sp):
    # weak pump so the optical force barely deflects a 1 mm/s particle;
    # the dynamic cavity then tracks the adiabatic solution
    cav = CavityConfig.from_quoted(
        wavelength=1.56e-6, linewidth=0.78e6, detuning=-1.2 * 0.78e6,
        power=1e-14, waist=10e-6, rate_convention="divided_by_2pi",
        coupling_ratio=1.1)
    sp = SimParams(ParticleSpec("rod", 800e-9, 25e-9), cav)
    st = _state(sp, [-3 * sp.waist, 0, 1.56e-6 / 8], [1e-3, 0, 0])
    span = 6 * sp.waist / 1e-3
    cfg_dyn = IntegratorConfig(cavity_mode="dynamic", rel_tol=1e-9,
                               abs_tol=1e-11, max_step=1e-6, cadence=span / 50)
    cfg_ad = IntegratorConfig(cavity_mode="adiabatic", rel_tol=1e-9,
                              abs_tol=1e-11, max_step=1e-6, cadence=span / 50)
    f_dyn = integrate(st, span, sp, cfg_dyn, record=False).final_state
    f_ad = integrate(st, span, sp, cfg_ad, record=False).final_state
    travel = np.max(np.abs(f_dyn.r - st.r))
    assert np.max(np.abs(f_dyn.r - f_ad.r)) < 1e-6 * travel


def test_total_energy_examples(capture_sp):
    sp = capture_sp
    b0, _ = cooling.steady_state_b0(sp)
    at_rest = _state(sp, [0, 0, 0], [0, 0, 0], b=b0)
    e = total_energy(at_rest, sp)
    assert e == pytest.approx(HBAR * sp.u0 * abs(b0) ** 2, rel=1e-12)
    assert e < 0
    off_beam = _state(sp, [-50 * sp.waist, 0, 0], [0.3, 0, 0], b=0j)
    assert total_energy(off_beam, sp) == pytest.approx(
        0.5 * sp.mass * 0.09, rel=1e-12)


def test_classify_ballistic_transmitted(capture_sp):
    sp = capture_sp
    crit = capture_criteria(sp, 1.0, 1e10)
    st = _state(sp, [-3 * sp.waist, 0, 0.7e-6], [3.5, 0, 0.01],
                omega_rot=2 * math.pi * 1e6)
    traj = integrate(st, crit.max_time, sp, IntegratorConfig(), criteria=crit)
    assert traj.status == "transmitted"
    assert classify(traj, sp, crit) == "transmitted"


def test_classify_trapped_captured(capture_sp):
    sp = capture_sp
    b0, _ = cooling.steady_state_b0(sp)
    crit = capture_criteria(sp, 0.5, abs(b0) ** 2)
    st = _state(sp, [0, 0, 20e-9], [0.005, 0, 0.002], b=b0)
    traj = integrate(st, crit.max_time, sp, IntegratorConfig(), criteria=crit)
    assert traj.status == "captured"
    assert classify(traj, sp, crit) == "captured"


def test_classify_undecided_on_timeout(capture_sp):
    sp = capture_sp
    b0, _ = cooling.steady_state_b0(sp)
    crit = CaptureCriteria(
        energy_threshold=-1e-3 * HBAR * abs(sp.u0) * abs(b0) ** 2,
        confirm_time=1.0, exit_plane=3 * sp.waist, bound_radius=sp.waist,
        max_time=2e-5)
    st = _state(sp, [0, 0, 20e-9], [0.01, 0, 0.002], b=b0)
    traj = integrate(st, crit.max_time, sp, IntegratorConfig(), criteria=crit)
    assert traj.status == "undecided"
    assert classify(traj, sp, crit) == "undecided"


def test_overflowing_field_aborts_with_diagnostics(capture_sp):
    # |b|^2 overflows to inf -> NaN energy; kernel aborts and the wrapper
    # raises with the failing state attached
    sp = capture_sp
    bad = _state(sp, [0, 0, 0], [1e-4, 0, 0], b=1e150 + 0j)
    with pytest.raises(NumericalError) as err:
        with np.errstate(all="ignore"):
            integrate(bad, 1e-4, sp, IntegratorConfig())
    assert err.value.state is not None


def test_energy_blowup_guard_plumbing(capture_sp):
    # drive the kernel directly with an unreachable energy bound
    sp = capture_sp
    cfg = IntegratorConfig()
    model = FastModel.get(sp, cfg)
    b0, _ = cooling.steady_state_b0(sp)
    st = _state(sp, [0, 0, 20e-9], [0.01, 0, 0], b=b0)
    y0 = pack_state(st)
    atolv = cfg.abs_tol * np.ones(14)
    limits = np.array([-np.inf, np.inf, np.inf, np.inf,
                       -1.0])  # e_blow below any reachable energy
    out = np.empty((1, 17))
    status, *_ = fast._integrate(y0, 0.0, 1e-5, 1e-8, cfg.rel_tol, atolv,
                                 cfg.max_step, -1.0, model.pars, model.tables,
                                 limits, out)
    assert status == fast.ST_BLOWUP


def test_state_validation_rejects_nan(capture_sp):
    st = _state(capture_sp, [0, 0, 0], [0.1, 0, 0])
    st.p[0] = math.nan
    with pytest.raises(NumericalError):
        derivative(st, capture_sp)


def test_integrator_config_validation():
    with pytest.raises(ValueError):
        IntegratorConfig(rel_tol=1e-3)
    with pytest.raises(ValueError):
        IntegratorConfig(abs_tol=1e-14)
    with pytest.raises(ValueError):
        IntegratorConfig(cavity_mode="quasistatic")


def test_time_averaged_cooling_for_slow_trajectories(capture_sp):
    # red-detuned past the shifted resonance (Delta < U0 < 0): the retarded
    # field extracts energy on average from slowly evolving trapped states
    sp = capture_sp
    b0, _ = cooling.steady_state_b0(sp)
    cfg = IntegratorConfig(cavity_mode="dynamic", radiation_pressure=True,
                           scattering=True, cadence=1e-5)
    rng = np.random.default_rng(99)
    drops = []
    for _ in range(5):
        m = rng.normal(size=3)
        m /= np.linalg.norm(m)
        st = _state(sp, [0, 0, rng.uniform(20e-9, 60e-9)],
                    [rng.uniform(-0.02, 0.02), 0, rng.uniform(-0.02, 0.02)],
                    m=m, omega_rot=2 * math.pi * 2e4, b=b0)
        traj = integrate(st, 2e-4, sp, cfg)
        drops.append(traj.energy[-1] - traj.energy[0])
    assert np.mean(drops) < 0.0
