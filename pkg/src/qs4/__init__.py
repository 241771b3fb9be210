"""Spectral toolkit for the two-dimensional fourth-order free Schrodinger
flow: propagators, space-time norms, extremizer iteration, asymptotic scans,
bilinear decay experiments, weighted multilinear checks, and profile
decomposition utilities, with a reproducible batch CLI."""

__version__ = "0.1.0"
