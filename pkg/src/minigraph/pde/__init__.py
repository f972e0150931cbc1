"""Discrete minimal graph equation: operators, Newton solver, capped sweeps and reflections."""

from .capped import CappedResult, solve_capped_family
from .fieldio import fields_equal, format_field, parse_field, read_field, write_field
from .interp import interpolate
from .reflect import doubled_domain, odd_solve, reflect_extend, restrict
from .scherk import adjacent_sign_pairs, scherk_second_type, seed_problem
from .solver import HeightField, pointwise_residual, solve_dirichlet, solve_with_boundary
from .stencil import FluxOperator, GridOperator, residual_euclidean, residual_hyperbolic

__all__ = [
    "CappedResult", "FluxOperator", "GridOperator", "HeightField", "adjacent_sign_pairs", "doubled_domain",
    "fields_equal", "format_field", "interpolate", "odd_solve", "parse_field", "pointwise_residual",
    "read_field", "reflect_extend", "residual_euclidean", "residual_hyperbolic", "restrict",
    "scherk_second_type", "seed_problem", "solve_capped_family", "solve_dirichlet", "solve_with_boundary",
    "write_field",
]
