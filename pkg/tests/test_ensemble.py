import math

import numpy as np
import pytest

from cavrotor import cooling
from cavrotor.ensemble import (EnsembleConfig, LaunchDistribution,
                               capture_curve, sample_initial, trajectory_rng,
                               wilson_interval)

CHI2_99_DF47 = 72.4433  # 0.99 quantile of chi-square with 47 dof


def test_wilson_basic():
    p, lo, hi = wilson_interval(30, 100)
    assert lo < p < hi
    assert 0.0 <= lo and hi <= 1.0
    assert p == pytest.approx(0.30)


def test_wilson_edge_counts():
    p, lo, hi = wilson_interval(0, 50)
    assert p == 0.0 and lo == 0.0 and hi > 0.0
    p, lo, hi = wilson_interval(50, 50)
    assert p == 1.0 and hi == 1.0 and lo < 1.0


def test_wilson_width_scales_inverse_sqrt_n():
    widths = []
    for n in (100, 400, 1600):
        k = int(round(0.3 * n))
        _, lo, hi = wilson_interval(k, n)
        widths.append(hi - lo)
    assert widths[1] / widths[0] == pytest.approx(0.5, abs=0.05)
    assert widths[2] / widths[1] == pytest.approx(0.5, abs=0.05)


def test_launch_distribution_validation():
    with pytest.raises(ValueError):
        LaunchDistribution(v_x=-1.0)
    with pytest.raises(ValueError):
        LaunchDistribution(v_x=1.0, v_z_spread=1.5)


def test_sample_zero_spread(capture_sp):
    dist = LaunchDistribution(v_x=0.7, v_z_spread=0.0)
    for j in range(50):
        st = sample_initial(dist, capture_sp, trajectory_rng(1, 0, j))
        assert st.p[2] == 0.0
        assert st.p[1] == 0.0
        assert st.r[1] == 0.0
        assert st.r[0] == pytest.approx(-3 * capture_sp.waist)
        assert 0.0 <= st.r[2] < capture_sp.cavity.wavelength


def test_sample_rotation_shell(capture_sp):
    dist = LaunchDistribution(v_x=0.5)
    expected = capture_sp.inertia * 2.0 * math.pi * 1e6
    for j in range(100):
        st = sample_initial(dist, capture_sp, trajectory_rng(7, 2, j))
        l_mag = np.linalg.norm(st.rotor.L)
        assert l_mag == pytest.approx(expected, rel=1e-12)
        assert abs(st.rotor.m @ st.rotor.L) < 1e-12 * l_mag
        assert abs(np.linalg.norm(st.rotor.m) - 1.0) < 1e-12


def test_sample_initial_cavity_amplitude(capture_sp):
    sp = capture_sp
    st = sample_initial(LaunchDistribution(v_x=0.5), sp, trajectory_rng(1, 0, 0))
    expected = sp.eta / (sp.kappa - 1j * sp.detuning)
    assert st.b == pytest.approx(expected, rel=1e-12)


def test_sample_orientation_uniform(capture_sp):
    # chi-square over 48 equal-area bins: 8 azimuthal x 6 slices in m_z
    dist = LaunchDistribution(v_x=0.5)
    n = 10_000
    counts = np.zeros((8, 6))
    for j in range(n):
        st = sample_initial(dist, capture_sp, trajectory_rng(123, 0, j))
        m = st.rotor.m
        phi = math.atan2(m[1], m[0]) % (2 * math.pi)
        iphi = min(int(phi / (2 * math.pi) * 8), 7)
        iz = min(int((m[2] + 1.0) / 2.0 * 6), 5)
        counts[iphi, iz] += 1
    expected = n / 48.0
    chi2 = float(((counts - expected) ** 2 / expected).sum())
    assert chi2 < CHI2_99_DF47


def test_sample_deterministic_per_key(capture_sp):
    dist = LaunchDistribution(v_x=0.5)
    a = sample_initial(dist, capture_sp, trajectory_rng(9, 1, 5))
    b = sample_initial(dist, capture_sp, trajectory_rng(9, 1, 5))
    c = sample_initial(dist, capture_sp, trajectory_rng(9, 1, 6))
    assert np.array_equal(a.r, b.r) and np.array_equal(a.p, b.p)
    assert np.array_equal(a.rotor.m, b.rotor.m)
    assert not np.array_equal(a.rotor.m, c.rotor.m)


@pytest.fixture(scope="module")
def small_curve_setup(capture_sp):
    b0, _ = cooling.steady_state_b0(capture_sp)
    ens = EnsembleConfig(trajectories=100, max_crossings=6.0,
                         confirm_crossings=3.0)
    return capture_sp, ens, abs(b0) ** 2


def _counts(results):
    return [(r.n_captured, r.n_transmitted, r.n_undecided) for r in results]


def test_capture_curve_reproducible_across_workers(small_curve_setup):
    sp, ens, b_sq = small_curve_setup
    grid = [1.8, 3.0]  # fast transits keep this test cheap
    r1 = capture_curve(sp, grid, 42, ens, threads=1, b_ss_sq=b_sq)
    r2 = capture_curve(sp, grid, 42, ens, threads=4, b_ss_sq=b_sq)
    assert _counts(r1) == _counts(r2)
    for r in r1:
        assert r.counts_ok()
        assert 0.0 <= r.ci_low <= r.p_capture <= r.ci_high <= 1.0
        assert len(r.trajectory_seeds) == r.n_total


def test_capture_curve_seed_sensitivity(small_curve_setup):
    sp, ens, b_sq = small_curve_setup
    grid = [2.5]
    r1 = capture_curve(sp, grid, 42, ens, threads=2, b_ss_sq=b_sq)
    r2 = capture_curve(sp, grid, 43, ens, threads=2, b_ss_sq=b_sq)
    # different master seed draws different initial conditions
    s1 = trajectory_rng(42, 0, 0).uniform()
    s2 = trajectory_rng(43, 0, 0).uniform()
    assert s1 != s2
    assert r1[0].master_seed != r2[0].master_seed


def test_ensemble_config_validation():
    with pytest.raises(ValueError):
        EnsembleConfig(trajectories=50)
