"""Spectral data, action-angle variables and Birkhoff coordinates of the
periodic Zakharov-Shabat operator for focusing-NLS-type potentials."""

__version__ = "0.1.0"
