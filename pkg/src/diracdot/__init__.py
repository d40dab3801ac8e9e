"""Bound states, capture depths, phase shifts and resonances of 2-D Dirac
particles in a circular electrostatic well."""

__version__ = "0.1.0"
