"""Alignment-free sentence-stress detection for a frozen encoder-decoder ASR model."""

__version__ = "0.1.0"
