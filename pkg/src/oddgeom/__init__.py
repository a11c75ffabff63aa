"""Exterior calculus, cosymplectic/contact and coPoisson/Jacobi structures on odd-dimensional charts."""

__version__ = "0.1.0"

from .expr import Chart, DomainError, ParseError, Point, Sampler, ScalarField, parse_expr
from .exterior import KForm, KVector, TangentValuedOneForm, schouten, wedge
from .structures import (ACPJTriple, ClassificationReport, ContravariantPair, CovariantPair,
                         NonRegularError, PairInvariantError, classify_contravariant,
                         classify_covariant, dual_of_contravariant, dual_of_covariant)
from .algebra import BracketContext, jacobi_bracket, jacobiator, poisson_bracket, hamiltonian_lift
from .darboux import DarbouxSpec
from .spacetime import EinsteinInput, GalileiInput, verify_theorems

__all__ = [
    "ACPJTriple", "BracketContext", "Chart", "ClassificationReport", "ContravariantPair",
    "CovariantPair", "DarbouxSpec", "DomainError", "EinsteinInput", "GalileiInput", "KForm",
    "KVector", "NonRegularError", "PairInvariantError", "ParseError", "Point", "Sampler",
    "ScalarField", "TangentValuedOneForm", "classify_contravariant", "classify_covariant",
    "dual_of_contravariant", "dual_of_covariant", "hamiltonian_lift", "jacobi_bracket",
    "jacobiator", "parse_expr", "poisson_bracket", "schouten", "verify_theorems", "wedge",
    "__version__",
]
