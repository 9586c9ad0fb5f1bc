"""Displacement lower bounds for two-generator free Kleinian groups, mechanized."""

__version__ = "0.1.0"
