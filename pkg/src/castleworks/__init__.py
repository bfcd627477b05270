"""Finite-scale castles, Følner sets and comparison for group subshifts."""

__version__ = "0.1.0"
