"""Local encoder-classifier inference adapter for the shared prediction schema."""

from .adapter import AdapterConfig, InferenceResult, infer

__version__ = "0.1.0"

__all__ = ["AdapterConfig", "InferenceResult", "infer", "__version__"]
