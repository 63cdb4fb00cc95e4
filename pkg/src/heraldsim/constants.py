"""Physical constants (SI). Fixed values so published numbers reproduce."""

SPEED_OF_LIGHT = 2.99792458e8  # m/s
VACUUM_PERMITTIVITY = 8.8541878128e-12  # F/m
