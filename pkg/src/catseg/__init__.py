"""Coherence-aware text segmentation with a two-level Transformer."""
from .kernels import BACKEND

__version__ = "0.1.0"
__all__ = ["BACKEND", "__version__"]
