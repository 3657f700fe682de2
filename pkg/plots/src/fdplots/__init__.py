"""Batch figure rendering for the experiment CSV tables."""

from .render import (FigureSpec, KINDS, NoDataError, PlotError, SchemaError,
                     render)

__all__ = ["FigureSpec", "KINDS", "NoDataError", "PlotError", "SchemaError",
           "render"]
