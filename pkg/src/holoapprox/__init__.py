"""
Holonomic approximation near a cube by explicit convex integration.

Given a section ``sigma = (f, phi)`` of the 1-jet bundle of maps
``R^m x R x R^k -> R^n`` and ``eps > 0``, find ``delta`` with
``|delta| < eps`` and a map ``f1`` whose 1-jet is eps-close to ``sigma`` near
the graph ``{(x, delta(x), 0)}``.  Corrugations along the coordinate
directions produce ``(delta, h)`` in closed form and an explicit ansatz
extends ``h`` to ``f1``.

Typical use::

    from holoapprox import JetSection, solve, extend, certify_solution

    sigma = JetSection.from_strings(["x1"], [["0", "0"]], m=1, k=0, n=1)
    pair = solve(sigma, 1.0)
    f1 = extend(sigma, pair)
    cert = certify_solution(sigma, 1.0, pair, f1)
"""

from .corrugation import (
    CorrugationError,
    FrequencySearchError,
    Loop,
    LoopSynthesisError,
    SolveOptions,
    corrugate,
    corrugation_residual,
    loop_family,
    mountain_loop,
    solve,
    synthesize_loop,
)
from .expr import ExprError, ExprSyntaxError, EvalDomainError, UnboundVariableError, UnknownIdentifierError, parse, pretty
from .extension import Extension, extend, extension_field, jet_distance_on_fiber
from .jetmodel import (
    DeformedCube,
    Dims,
    FormalSolutionState,
    Grid,
    HolonomicPair,
    JetSection,
    canonical_formal_solution,
    tangent_space,
)
from .numcore import Dual, TrigPoly, jacobian, rank_one_inverse_quadratic
from .relation import (
    EmptySliceError,
    HyperbolaParams,
    SliceSpec,
    ampleness_certificate,
    hyperbola_params,
    restricted_norm,
    rha_member,
    slice_from_state,
    slice_member,
)
from .verify import Certificate, TubeOptions, certify_solution, oracle_suite

__version__ = "0.1.0"

__all__ = [
    "Certificate",
    "CorrugationError",
    "DeformedCube",
    "Dims",
    "Dual",
    "EmptySliceError",
    "EvalDomainError",
    "ExprError",
    "ExprSyntaxError",
    "Extension",
    "FormalSolutionState",
    "FrequencySearchError",
    "Grid",
    "HolonomicPair",
    "HyperbolaParams",
    "JetSection",
    "Loop",
    "LoopSynthesisError",
    "SliceSpec",
    "SolveOptions",
    "TrigPoly",
    "TubeOptions",
    "UnboundVariableError",
    "UnknownIdentifierError",
    "ampleness_certificate",
    "canonical_formal_solution",
    "certify_solution",
    "corrugate",
    "corrugation_residual",
    "extend",
    "extension_field",
    "hyperbola_params",
    "jacobian",
    "jet_distance_on_fiber",
    "loop_family",
    "mountain_loop",
    "oracle_suite",
    "parse",
    "pretty",
    "rank_one_inverse_quadratic",
    "restricted_norm",
    "rha_member",
    "slice_from_state",
    "slice_member",
    "solve",
    "synthesize_loop",
    "tangent_space",
]
