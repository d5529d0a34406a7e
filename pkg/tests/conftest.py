import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

from cavrotor.params import CavityConfig, ParticleSpec, SimParams, equivalent_sphere

WAIST = 10e-6


def _cavity(rate_convention: str, waist: float = WAIST, power: float = 10e-3):
    return CavityConfig.from_quoted(
        wavelength=1.56e-6, linewidth=0.78e6, detuning=-1.2 * 0.78e6,
        power=power, waist=waist, rate_convention=rate_convention,
        coupling_ratio=1.1)


@pytest.fixture(scope="session")
def capture_sp():
    """Reference rod, capture convention (kappa = 2 pi 0.78e6 rad/s)."""
    return SimParams(ParticleSpec("rod", 800e-9, 25e-9), _cavity("divided_by_2pi"))


@pytest.fixture(scope="session")
def cooling_sp():
    """Reference rod, angular convention (kappa = 0.78e6 rad/s)."""
    return SimParams(ParticleSpec("rod", 800e-9, 25e-9), _cavity("angular"))


@pytest.fixture(scope="session")
def sphere_sp():
    radius = equivalent_sphere(800e-9, 25e-9)
    return SimParams(ParticleSpec("sphere", 1.0, radius), _cavity("divided_by_2pi"))


@pytest.fixture(scope="session")
def disk_sp():
    return SimParams(ParticleSpec("disk", 100e-9, 300e-9), _cavity("divided_by_2pi"))


@pytest.fixture(scope="session")
def quad30():
    from cavrotor.optics import build_quadrature
    return build_quadrature(30)


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long-running acceptance checks")
