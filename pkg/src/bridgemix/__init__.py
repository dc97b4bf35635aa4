"""Posterior simulation for Bayesian bridge regression."""

__version__ = "0.1.0"
