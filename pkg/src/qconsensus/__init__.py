"""Distributed average consensus with progressively refined quantization."""
__version__ = "0.1.0"
