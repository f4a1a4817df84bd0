"""Average-case verification of inverse-QFT channels and randomized phase estimation."""

__version__ = "0.1.0"
