"""Poisson hyperplane tessellations of hyperbolic space in the Klein model."""
__version__ = "0.1.0"
