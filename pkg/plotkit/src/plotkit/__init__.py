"""Figures from billiardflow CSV/JSON artifacts.

plotkit never recomputes any mathematics: it draws exactly the values in
the CSV files, plus reference outlines (table, caustic, foci) taken from
the JSON sidecar that the CLI wrote next to each CSV.
"""

from .figures import FigureSpec, SchemaError, render

__all__ = ["FigureSpec", "SchemaError", "render"]
__version__ = "0.1.0"
