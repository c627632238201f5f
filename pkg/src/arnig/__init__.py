"""Autoregressive models with normal inverse Gaussian innovations."""
