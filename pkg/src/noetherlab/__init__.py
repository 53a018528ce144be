"""Generalized Noether currents for higher-derivative and non-local field theories."""

__version__ = "0.1.0"
