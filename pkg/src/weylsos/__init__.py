"""Lower bounds for the spectra of Weyl-algebra operators by sums of hermitian squares."""

from .scalar import Scalar
from .weyl import LADDER1, PM1, Presentation, WeylElement, parse_element

__version__ = "0.1.0"

__all__ = ["LADDER1", "PM1", "Presentation", "Scalar", "WeylElement", "parse_element"]
