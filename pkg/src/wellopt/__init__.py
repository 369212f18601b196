"""Derivative-free well-control optimization: GPS, PSO, CMA-ES and multiscale refinement."""

__version__ = "0.1.0"
