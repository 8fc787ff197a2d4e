"""Shared numerical substrate: grids, quadrature, differentiation, ODEs, lifting, roots."""

from .grid import Boundary, GridFunction, quad_periodic
from .integrate import IntegratorConfig, Method, Trajectory, integrate_linear_system, linear_coefficients, rk4_field
from .lift import lift_argument
from .nonlinearity import Nonlinearity
from .roots import multistart_roots
from .spectral import spectral_derivative

__all__ = [
    "Boundary",
    "GridFunction",
    "IntegratorConfig",
    "Method",
    "Nonlinearity",
    "Trajectory",
    "integrate_linear_system",
    "lift_argument",
    "linear_coefficients",
    "multistart_roots",
    "quad_periodic",
    "rk4_field",
    "spectral_derivative",
]
