"""Effective de la Vallee Poussin bounds on the first Chebyshev function."""

from .bounds import (
    BoundFamily,
    DerivedBound,
    ExpThreshold,
    catalog,
    derive_prefactor,
    lookup,
    peak_location,
    solve_decay,
)
from .errors import (
    CacheError,
    DomainError,
    InconclusiveError,
    NotExtendable,
    RangeError,
    ResourceError,
)
from .theta import ThetaTable, ThetaValue, build_theta_table, extended_theta, theta_at
from .verifier import (
    CheckOutcome,
    EnvelopeFn,
    Status,
    check_range,
    envelope_monotone_from,
    find_x_star,
    min_prefactor,
    verify_parent,
)

__version__ = "0.1.0"
