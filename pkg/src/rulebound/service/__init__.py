"""HTTP service wrapping the training and evaluation harness."""

from .app import app

__all__ = ["app"]
