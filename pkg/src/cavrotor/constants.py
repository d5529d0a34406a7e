"""Physical constants (SI, CODATA 2018)."""

HBAR = 1.054571817e-34   # J s
C_LIGHT = 299792458.0    # m/s
K_BOLTZMANN = 1.380649e-23  # J/K
EPSILON_0 = 8.8541878128e-12  # F/m
