"""Publication-style figures from measure-pca CSV outputs."""

from .render import FigureSpec, HeaderMismatchError, render

__version__ = "0.1.0"

__all__ = ["FigureSpec", "HeaderMismatchError", "render"]
