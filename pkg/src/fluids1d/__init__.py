"""One-dimensional reduced models for scale-invariant 2D Euler and SQG dynamics."""

__version__ = "0.1.0"
