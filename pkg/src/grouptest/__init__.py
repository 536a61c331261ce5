"""Nonadaptive group testing: Bernoulli designs, decoders, LP relaxation, rate bounds."""
from .design import (ItemSet, ParameterError, TestDesign, bernoulli_design, compute_outcomes,
                     p_from_k, sample_defective_set)
from .decode import (DecodeResult, comp_decode, dd_decode, is_satisfying, possible_defectives,
                     scomp_decode, smallest_satisfying_oracle)
from .lp import build_relaxation, lp_decode, round_solution, simplex_solve

__all__ = [
    "ItemSet", "ParameterError", "TestDesign", "bernoulli_design", "compute_outcomes", "p_from_k",
    "sample_defective_set", "DecodeResult", "comp_decode", "dd_decode", "is_satisfying",
    "possible_defectives", "scomp_decode", "smallest_satisfying_oracle", "build_relaxation",
    "lp_decode", "round_solution", "simplex_solve",
]
