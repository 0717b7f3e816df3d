"""Derivative principles for invariant random matrix ensembles."""
from __future__ import annotations

__version__ = "0.1.0"
