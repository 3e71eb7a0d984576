"""Question-conditioned multimodal fusion with verifiable gradients and geometry."""

__version__ = "0.1.0"
