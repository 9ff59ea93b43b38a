"""Figure rendering for the personalized-tracking simulator's CSV artifacts."""

from .csvio import SchemaError, read_csv
from .figures import KINDS, FigureSpec, build_figure, render

__all__ = ["FigureSpec", "KINDS", "SchemaError", "build_figure", "read_csv", "render"]

__version__ = "0.1.0"
