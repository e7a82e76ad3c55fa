"""Hermitian curvature flow reduced to an ODE on Lie algebras.

The flow of an induced metric on a complex homogeneous manifold reduces to
the Riccati-type system ``dh/dt = h#`` on Hermitian forms over the Lie
algebra.  This package builds the algebras, the ``#`` operation, the
integrator and band oracles, growth diagnostics, and a pointwise geometric
cross-check on explicit vector-field models.
"""

from hcflow.errors import (
    EvaluationError,
    HCFError,
    InsufficientDataError,
    IntegrationError,
    NotAHomomorphismError,
    ValidationError,
)
from hcflow.lie import (
    AlgebraClass,
    Homomorphism,
    LieAlgebra,
    bracket,
    classify_algebra,
    construct_algebra,
    killing_metric,
    summand_projection,
    validate_homomorphism,
)
from hcflow.forms import (
    HermitianForm,
    PositivityReport,
    complexify,
    positivity,
    pushforward,
    sharp,
    sharp_square,
    sup_norm,
    trilinear,
)

__version__ = "0.1.0"

__all__ = [
    "AlgebraClass",
    "EvaluationError",
    "HCFError",
    "HermitianForm",
    "Homomorphism",
    "InsufficientDataError",
    "IntegrationError",
    "LieAlgebra",
    "NotAHomomorphismError",
    "PositivityReport",
    "ValidationError",
    "bracket",
    "classify_algebra",
    "complexify",
    "construct_algebra",
    "killing_metric",
    "positivity",
    "pushforward",
    "sharp",
    "sharp_square",
    "summand_projection",
    "sup_norm",
    "trilinear",
    "validate_homomorphism",
]
