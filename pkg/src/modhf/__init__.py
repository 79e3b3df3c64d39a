"""Spectral Hartree-Fock dynamics and modulation-space diagnostics."""

__version__ = "0.1.0"
