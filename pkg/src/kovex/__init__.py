"""Exact Kovalevskaya-exponent analysis for quasi-homogeneous polynomial vector fields."""

__version__ = "0.1.0"
