"""Czech forced phonetic alignment toolkit."""

__version__ = "0.1.0"

from .errors import PrakError

__all__ = ["PrakError", "__version__"]
