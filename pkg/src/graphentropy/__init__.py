"""Numerical lower bounds for the volume entropy of nonpositively curved
graph manifolds built from hyperbolic-surface x line blocks glued along
flat walls."""

__version__ = "0.1.0"
