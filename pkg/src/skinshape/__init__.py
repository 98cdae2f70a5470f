"""Skin-region shape analysis and fused MLP / neuro-fuzzy image classification."""

__version__ = "0.1.0"
