"""Batch figure generation for aitsahalia CSV artifacts.

Talks to the simulation package only through its documented CSV
schemas; nothing here imports aitsahalia or recomputes statistics.
"""

from .figures import FigureKind, FigureSpec, RenderResult, render
from .reader import (
    CONVERGENCE_COLUMNS,
    PATHS_COLUMNS,
    ConvergenceTable,
    EmptyInput,
    PathsTable,
    SchemaMismatch,
    read_convergence,
    read_paths,
)

__all__ = [
    "CONVERGENCE_COLUMNS",
    "PATHS_COLUMNS",
    "ConvergenceTable",
    "EmptyInput",
    "FigureKind",
    "FigureSpec",
    "PathsTable",
    "RenderResult",
    "SchemaMismatch",
    "read_convergence",
    "read_paths",
    "render",
]
