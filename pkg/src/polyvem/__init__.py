"""Divergence-free virtual element solver for steady Navier-Stokes on polygons."""

__version__ = "0.1.0"
