"""Numerical laboratory for Gibbs measures of the renormalized zonal
Dirac-Hartree equation on d-spheres."""

__version__ = "0.1.0"
