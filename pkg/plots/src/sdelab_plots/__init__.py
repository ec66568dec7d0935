"""Figure renderer for the simulation laboratory's CSV/JSON artifacts.

Reads only the delimited files and summaries that the main package writes;
never recomputes a statistic.  Rendering is idempotent: the same inputs
produce byte-identical SVG output.
"""

from .render import FIGURE_KINDS, FigureSpec, SchemaError, render

__all__ = ["FigureSpec", "SchemaError", "render", "FIGURE_KINDS"]
