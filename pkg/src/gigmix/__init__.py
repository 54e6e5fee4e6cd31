"""Maximum-entropy Pythagorean-mean densities and Bayesian mixtures of them."""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    DegenerateRangeError,
    DomainError,
    EmptyDatasetError,
    GigmixError,
    InitializationError,
    InsufficientDataError,
    NonNormalizableError,
    NoSolutionError,
    RangeError,
    ValidationError,
)
from .pythagorean import FamilyMember, GammaParams, GigParams, InverseGammaParams, Kind  # noqa: E402
from .mixture import MixtureModel, canonicalize, mixture_log_pdf  # noqa: E402

__all__ = [
    "DegenerateRangeError",
    "DomainError",
    "EmptyDatasetError",
    "FamilyMember",
    "GammaParams",
    "GigParams",
    "GigmixError",
    "InitializationError",
    "InsufficientDataError",
    "InverseGammaParams",
    "Kind",
    "MixtureModel",
    "NoSolutionError",
    "NonNormalizableError",
    "RangeError",
    "ValidationError",
    "canonicalize",
    "mixture_log_pdf",
]
