"""Existence window for positive radial critical solutions on spherical caps."""
from .specfun import Dimension
from .window import CapGeometry, LambdaWindow, lambda_window

__all__ = ["Dimension", "CapGeometry", "LambdaWindow", "lambda_window"]
__version__ = "0.1.0"
