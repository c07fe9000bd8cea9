"""Publication-style figures from simulation CSV files.

The package reads only the CSV surface of the simulation CLI and
never recomputes statistics; every number in a figure comes from an
input file.  Rendering is deterministic: identical inputs give
identical SVG bytes.
"""

from .figures import DataError, FigureSpec, SchemaError, render

__version__ = "0.1.0"

__all__ = ["DataError", "FigureSpec", "SchemaError", "render", "__version__"]
