"""Exact noncommutative algebra of conformal observables for relativistic
spin-1/2 particles, the classical hexaspherical geometry it generalizes,
and a momentum-grid numerical oracle validating the commutator tables."""

from .coeff import Coefficient, mpq
from .ncalg import (
    NCPoly,
    RewriteSystem,
    ConstructionError,
    EngineError,
    make_poly,
    multiply,
    sym_product,
    sym_divide_by_M,
    normalize,
    commutator,
    equal,
)
from .tables import basis_A, basis_B, translate_A_to_B

__version__ = "0.1.0"

__all__ = [
    "Coefficient", "mpq", "NCPoly", "RewriteSystem",
    "ConstructionError", "EngineError",
    "make_poly", "multiply", "sym_product", "sym_divide_by_M",
    "normalize", "commutator", "equal",
    "basis_A", "basis_B", "translate_A_to_B",
    "__version__",
]
