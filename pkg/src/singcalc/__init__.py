"""Singularity analysis as a calculus on singular expansions.

Singular expansions at a dominant singularity support arithmetic,
differentiation, integration and Hadamard products; coefficient transfer
turns them into asymptotic expansions of Taylor coefficients.  The models
module applies the calculus to the expected costs of tree recurrences.
"""

from .expansion import SingularExpansion, SingularTerm, ErrorBudget, Rho
from .hadamard import power_hadamard, zigzag
from .models import (
    analyze,
    bst_analyze,
    catalan_analyze,
    unionfind_analyze,
    moment_pump,
    polya_analyze,
    stirling_analyze,
)
from .tolls import TollSpec
from .transfer import CoeffAsymptotics, transfer

__all__ = [
    "SingularExpansion", "SingularTerm", "ErrorBudget", "Rho", "CoeffAsymptotics", "TollSpec",
    "transfer", "power_hadamard", "zigzag", "analyze", "bst_analyze", "catalan_analyze",
    "unionfind_analyze", "moment_pump", "polya_analyze", "stirling_analyze",
]
__version__ = "0.1.0"
