"""Critical sets of nonlinear maps and ordinary differential operators."""

__version__ = "0.1.0"
