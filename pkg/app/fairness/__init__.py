"""
Fairness correction core

Discrete profile model, the closed-form two-population correction, the
reductions to bonus-malus problems, the linear programs for flat corrections,
the simplex engine that solves them and the brute-force oracles that check them.
"""

from .lp_builder import (
    build_forward_lp,
    build_inverse_lp,
    canonicalize_bonus_malus,
    decode_solution,
    group_mass,
)
from .profile_space import (
    Partition,
    PopulationModel,
    ProfileSpace,
    ScoreTable,
    TargetVector,
    audit,
    population_average,
    sup_norm_distance,
    validate_instance,
)
from .reduction import assemble_forward, assemble_inverse, residual_targets
from .simplex import LpSolution, LpStatus, solve
from .two_pop import solve_two_pop

__all__ = [
    "Partition",
    "PopulationModel",
    "ProfileSpace",
    "ScoreTable",
    "TargetVector",
    "LpSolution",
    "LpStatus",
    "validate_instance",
    "population_average",
    "audit",
    "sup_norm_distance",
    "solve_two_pop",
    "residual_targets",
    "assemble_forward",
    "assemble_inverse",
    "group_mass",
    "build_forward_lp",
    "build_inverse_lp",
    "decode_solution",
    "canonicalize_bonus_malus",
    "solve",
]
