"""Polynomial-surrogate design optimization compiled to QUBO form."""
__version__ = "0.1.0"
