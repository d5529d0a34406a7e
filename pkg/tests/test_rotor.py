import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cavrotor.rotor import (RotorState, bessel_j0, bessel_j1, euler_from_m,
                            euler_rates_from_state, m_from_euler, shape,
                            shape_grad_m, tangent_basis)
from oracles import j1_series, rotation_matrix

# values frozen from the independent series oracle before the implementation
J1_TABLE = {
    0.5: 0.2422684576748739,
    1.0: 0.44005058574493355,
    2.0: 0.5767248077568736,
    2.4: 0.5201852681819311,
    5.0: -0.32757913759146595,
    7.5: 0.13524842757970437,
}


def test_j1_zero_and_odd():
    assert bessel_j1(0.0) == 0.0
    for x in (0.3, 1.7, 9.0, 45.0):
        assert bessel_j1(-x) == -bessel_j1(x)


def test_j1_small_argument():
    x = 1e-6
    assert abs(bessel_j1(x) - x / 2.0) < 1e-12


def test_j1_against_series_oracle():
    for x, val in J1_TABLE.items():
        assert bessel_j1(x) == pytest.approx(val, abs=1e-12)


def test_j1_matches_series_oracle():
    # the float64 series oracle itself loses digits past x ~ 10 (cancellation)
    for x in np.linspace(0.0, 10.0, 173):
        assert abs(bessel_j1(float(x)) - j1_series(float(x))) < 1e-12


def test_j1_large_argument_vs_mpmath():
    mp = pytest.importorskip("mpmath")
    for x in list(np.linspace(10.0, 80.0, 71)) + [500.0, 3333.3, 1e4]:
        ref = float(mp.besselj(1, mp.mpf(float(x))))
        assert abs(bessel_j1(float(x)) - ref) < 1e-10


def test_j0_vs_mpmath():
    mp = pytest.importorskip("mpmath")
    for x in list(np.linspace(0.0, 40.0, 37)) + [200.0, 9000.0]:
        ref = float(mp.besselj(0, mp.mpf(float(x))))
        assert abs(bessel_j0(float(x)) - ref) < 1e-10


def test_bessel_domain_rejected():
    with pytest.raises(ValueError):
        bessel_j1(1.5e4)
    with pytest.raises(ValueError):
        bessel_j1(np.array([1.0, -2e4]))


# ---------------------------------------------------------------------------
# orientation chart

def test_m_from_euler_cardinal():
    assert np.allclose(m_from_euler(0.77, 0.0), [0, 0, 1], atol=1e-12)
    assert np.allclose(m_from_euler(0.0, math.pi / 2), [1, 0, 0], atol=1e-12)
    assert np.allclose(m_from_euler(math.pi / 2, math.pi / 2), [0, 1, 0],
                       atol=1e-12)


@given(st.floats(0, 2 * math.pi - 1e-9), st.floats(1e-3, math.pi - 1e-3))
def test_euler_round_trip(alpha, beta):
    m = m_from_euler(alpha, beta)
    assert abs(np.linalg.norm(m) - 1.0) < 1e-12
    a2, b2 = euler_from_m(m)
    assert np.allclose(m_from_euler(a2, b2), m, atol=1e-9)


def test_euler_rates_zero_momentum():
    st_ = RotorState(m=m_from_euler(0.3, 1.0), L=np.zeros(3))
    rates = euler_rates_from_state(st_, 1e-31)
    assert rates.ok
    assert rates.alpha_rate == 0.0 and rates.beta_rate == 0.0
    assert rates.p_alpha == 0.0 and rates.p_beta == 0.0


def test_euler_rates_xy_plane_spin():
    # m = e_x rotating in the x-y plane at rate w: alpha_dot = w, beta_dot = 0
    inertia = 2e-31
    w = 3e5
    m = np.array([1.0, 0.0, 0.0])
    omega = np.array([0.0, 0.0, w])
    st_ = RotorState(m=m, L=inertia * omega)
    rates = euler_rates_from_state(st_, inertia)
    assert rates.alpha_rate == pytest.approx(w, rel=1e-12)
    assert rates.beta_rate == pytest.approx(0.0, abs=1e-6)


@given(st.integers(0, 10_000))
def test_euler_energy_identity(seed):
    rng = np.random.default_rng(seed)
    m = rng.normal(size=3)
    m /= np.linalg.norm(m)
    if abs(math.hypot(m[0], m[1])) < 1e-3:
        return
    inertia = 1.9511e-31
    L = np.cross(m, rng.normal(size=3)) * 1e-25
    st_ = RotorState(m=m, L=L)
    rates = euler_rates_from_state(st_, inertia)
    e_euler = (rates.p_beta ** 2 / (2 * inertia)
               + rates.p_alpha ** 2 / (2 * inertia * (m[0]**2 + m[1]**2)))
    e_vec = float(L @ L) / (2 * inertia)
    assert e_euler == pytest.approx(e_vec, rel=1e-10, abs=1e-40)


def test_euler_rates_near_pole_flagged():
    st_ = RotorState(m=np.array([1e-8, 0.0, 1.0]), L=np.array([0.0, 1e-25, 0.0]))
    rates = euler_rates_from_state(st_.project(), 1e-31)
    assert not rates.ok


# ---------------------------------------------------------------------------
# shape functions

def test_shape_rod_perpendicular():
    assert shape("rod", 3.2, [1, 0, 0], [0, 0, 1]) == pytest.approx(1.0, abs=1e-15)


def test_shape_rod_zero_at_pi():
    scale = 3.2
    u = math.pi / scale  # m.n such that scale * m.n = pi
    m = np.array([u, 0.0, math.sqrt(1 - u * u)])
    assert abs(shape("rod", scale, m, [1.0, 0.0, 0.0])) < 1e-15


def test_shape_disk_bessel_value():
    # k a |m x n| = 1.2 -> J1(2.4)/1.2, frozen from the series oracle
    expected = j1_series(2.4) / 1.2
    assert expected == pytest.approx(0.4334877234849426, abs=1e-12)
    m = np.array([0.0, 0.0, 1.0])
    n = np.array([1.0, 0.0, 0.0])
    assert shape("disk", 1.2, m, n) == pytest.approx(expected, abs=1e-12)


def test_shape_bounds():
    rng = np.random.default_rng(3)
    for _ in range(200):
        m = rng.normal(size=3)
        m /= np.linalg.norm(m)
        n = rng.normal(size=3)
        for kind, scale in (("rod", 3.22), ("disk", 0.64), ("sphere", 0.0)):
            assert abs(shape(kind, scale, m, n)) <= 1.0 + 1e-12


@settings(max_examples=60)
@given(st.integers(0, 10_000))
def test_shape_rotation_invariance(seed):
    rng = np.random.default_rng(seed)
    m = rng.normal(size=3)
    m /= np.linalg.norm(m)
    n = rng.normal(size=3)
    rot = rotation_matrix(rng.normal(size=3), rng.uniform(0, 2 * math.pi))
    for kind, scale in (("rod", 3.22), ("disk", 0.64)):
        assert shape(kind, scale, rot @ m, rot @ n) == pytest.approx(
            shape(kind, scale, m, n), rel=1e-10, abs=1e-12)


@settings(max_examples=60)
@given(st.integers(0, 10_000))
def test_shape_depends_only_on_invariant(seed):
    # rod: only m.n matters; disk: only |m x n|
    rng = np.random.default_rng(seed)
    u = rng.uniform(-0.99, 0.99)
    def pair_with_dot(u):
        m = rng.normal(size=3)
        m /= np.linalg.norm(m)
        e1, _ = tangent_basis(m)
        n = u * m + math.sqrt(1 - u * u) * e1
        return m, n
    m1, n1 = pair_with_dot(u)
    m2, n2 = pair_with_dot(u)
    assert shape("rod", 3.22, m1, n1) == pytest.approx(
        shape("rod", 3.22, m2, n2), rel=1e-12)
    assert shape("disk", 0.64, m1, n1) == pytest.approx(
        shape("disk", 0.64, m2, n2), rel=1e-12)


def test_shape_small_argument_series():
    # S_r(x) = 1 - x^2/6 + O(x^4); disk: 1 - y^2/2 + O(y^4)
    for x in (0.003, 0.03, 0.09):
        m = np.array([math.sqrt(1 - (x / 3.22) ** 2), 0, x / 3.22])
        got = shape("rod", 3.22, m, [0.0, 0.0, 1.0])
        series = 1 - x**2 / 6 + x**4 / 120
        assert got == pytest.approx(series, abs=1e-8)
        mz = math.sqrt(1.0 - (x / 0.64) ** 2) if x / 0.64 < 1 else 0.0
        m_d = np.array([x / 0.64, 0.0, mz])
        got_d = shape("disk", 0.64, m_d, [0.0, 0.0, 1.0])
        series_d = 1 - x**2 / 2 + x**4 / 12
        assert got_d == pytest.approx(series_d, abs=1e-8)


def test_shape_gradient_finite_difference():
    rng = np.random.default_rng(11)
    for kind, scale in (("rod", 3.22), ("disk", 0.64)):
        for _ in range(10):
            m = rng.normal(size=3)
            m /= np.linalg.norm(m)
            n = rng.normal(size=3)
            grad = shape_grad_m(kind, scale, m, n)
            for axis in range(3):
                h = 1e-7
                mp_ = m.copy(); mp_[axis] += h
                mm_ = m.copy(); mm_[axis] -= h
                fd = (shape(kind, scale, mp_, n) - shape(kind, scale, mm_, n)) / (2 * h)
                assert grad[axis] == pytest.approx(fd, rel=5e-6, abs=1e-8)


def test_rotor_state_projection():
    st_ = RotorState(m=np.array([1.0, 0.2, -0.1]),
                     L=np.array([1e-25, 2e-25, 3e-25])).project()
    assert abs(np.linalg.norm(st_.m) - 1.0) < 1e-14
    assert abs(st_.m @ st_.L) < 1e-10 * np.linalg.norm(st_.L)
