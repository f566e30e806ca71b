"""Paper-style figures from annealab artifact files.

The package is a thin presentation layer: it globs the CSV/JSON files an
annealab run wrote, checks their headers against the documented schemas,
and renders one of six figure kinds deterministically (same inputs give
byte-identical images).  No annealab import, no computation beyond
aggregation and smoothing.
"""

from .figspec import FigureSpec, SpecError, load_specs, schema_text
from .render import render

__all__ = ["FigureSpec", "SpecError", "load_specs", "render", "schema_text"]
