"""Quantitative Helly-type selection of halfspaces and strips with certified volume ratios."""
from .errors import HellyError
from .model import HalfspaceFamily, Halfspace, Polytope, generate_instance, normalize_family, parse_family

__all__ = [
    "HellyError",
    "Halfspace",
    "HalfspaceFamily",
    "Polytope",
    "generate_instance",
    "normalize_family",
    "parse_family",
]
__version__ = "0.1.0"
