"""Directed scattering autoencoders for directed-graph embedding."""

__version__ = "0.1.0"
