"""Finite-difference Toda system for diagonal harmonic metrics on planar grids."""

from .system import residual_fields, sup_residual
from .solver import GridSolution, NewtonStagnation, exact_extremal_solution, residual, solve_dirichlet

__all__ = [
    "GridSolution",
    "NewtonStagnation",
    "exact_extremal_solution",
    "residual",
    "residual_fields",
    "solve_dirichlet",
    "sup_residual",
]
