"""HTTP service wrapping the analysis pipeline."""

from . import handlers, schemas

__all__ = ["handlers", "schemas"]
