"""Top-level package for guardband."""

import importlib.metadata as importlib_metadata

__version__ = importlib_metadata.version(__name__)
