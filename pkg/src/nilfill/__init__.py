"""Exact computations for nilpotent Lie groups: algebras, cohomology, BCH,
compact presentations, certified fillings and certified lower bounds."""

__version__ = "0.1.0"
