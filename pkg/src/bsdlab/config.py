"""Numerical thresholds shared by every module."""

# rank and zero decisions
TOL = 1e-9

# a singular value within this distance of 1 counts as a unit value
BOUNDARY_BAND = 1e-6

# largest Pluecker space we are willing to materialize
PLUCKER_CAP = 20000

# acceptance threshold for fitted models (trivial embeddings, reassembly)
FIT_TOL = 1e-7

# genericity protocol for moduli maps
GENERIC_POINTS = 5
GENERIC_RETRIES = 20
