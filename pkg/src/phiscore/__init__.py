"""Structural heterogeneity scoring of supplier payment distributions."""

__version__ = "0.1.0"

from .kernels import BACKEND  # noqa: E402
from .phi import PhiComponents, compute_phi, log_contributions  # noqa: E402

__all__ = ["BACKEND", "PhiComponents", "__version__", "compute_phi", "log_contributions"]
