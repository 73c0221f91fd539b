"""Orthogonal polynomials and potential theory on generalized Julia sets."""

__version__ = "0.1.0"

from .exceptions import (  # noqa: E402
    AnchorError,
    DomainError,
    GenJuliaError,
    InternalConsistencyError,
    MaterializationCapError,
    PreconditionError,
    RegularityError,
    RootFindingError,
    SequenceExhaustedError,
)
from .poly_core import Polynomial, compose, derivative, evaluate, power_sums  # noqa: E402
from .sequence import (  # noqa: E402
    CompositionTower,
    RegularSequenceSpec,
    capacity,
    escape_radius,
    green,
    tower_eval,
    validate_regularity,
)
from .measure import preimage_measure  # noqa: E402
from .orthopoly import explicit_P1, explicit_P_block, jacobi_from_moments, moments, resolvent  # noqa: E402
from .real_julia import admissibility, basic_intervals  # noqa: E402
from .k1_gamma import GammaSequence, capacity_closed_form, pw_sum  # noqa: E402

__all__ = [
    "AnchorError", "DomainError", "GenJuliaError", "InternalConsistencyError",
    "MaterializationCapError", "PreconditionError", "RegularityError", "RootFindingError",
    "SequenceExhaustedError", "Polynomial", "compose", "derivative", "evaluate", "power_sums",
    "CompositionTower", "RegularSequenceSpec", "capacity", "escape_radius", "green",
    "tower_eval", "validate_regularity", "preimage_measure", "explicit_P1", "explicit_P_block",
    "jacobi_from_moments", "moments", "resolvent", "admissibility", "basic_intervals",
    "GammaSequence", "capacity_closed_form", "pw_sum",
]
