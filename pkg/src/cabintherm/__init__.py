"""Steady-state thermal simulation and energy-comfort optimization of
electric city bus HVAC systems."""

__version__ = "0.1.0"
