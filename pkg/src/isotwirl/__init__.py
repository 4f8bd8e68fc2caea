"""Isospectral twirling: spectral form factors, Weingarten twirls and chaos probes."""
__version__ = "0.1.0"
