"""Numerical toolkit for the biholomorphic invariant F = K * lambda(I) of domains in C^n."""
__version__ = "0.1.0"
