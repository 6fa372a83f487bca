"""Numerical toolkit for proper holomorphic maps between classical bounded
symmetric domains: subspace arithmetic, domains and their compact duals,
moduli of characteristic subspaces, moving frames, minimal rational
tangents, induced moduli maps and the rigidity pipeline."""

from .config import TOL
from .domains import DomainSpec, parse_spec
from .errors import BSDError, InputError, PropertyViolation, StageError

__version__ = "0.1.0"

__all__ = ["TOL", "DomainSpec", "parse_spec", "BSDError", "InputError", "PropertyViolation", "StageError"]
