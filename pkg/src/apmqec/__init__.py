"""Affine-permutation CSS codes for reconfigurable atom arrays.

Construction, search, move compilation, timing, noise simulation and
hierarchical decoding of APM codes.
"""

from .apm import Apm, compose, commutes, inverse, order, orbit_decompose
from .codes import CodeSpec, CssCode, build_check_matrices, load_fixture
from .errors import (AlistParseError, CapacityError, CollisionError, ConstructionError,
                     DomainError, InfeasibleSyndrome, NotInSubgroup, StructureError)
from .gf2 import SparseGf2Matrix, gf2_rank

__version__ = "0.1.0"
