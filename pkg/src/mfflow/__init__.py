"""Mean-field flow hierarchies for four-dimensional scalar field theory."""

from .errors import NumericError, UsageError
from .jets import Jet

__version__ = "0.1.0"

__all__ = ["Jet", "NumericError", "UsageError", "__version__"]
