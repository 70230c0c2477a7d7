"""Batch post-processing for shocklab run directories.

Renders figures from the CSV/JSON artifacts a run directory documents:
the collapse history with its tail fit, fan snapshots, transversal
inverse-density profiles, sweep residual tables, the scattering-limit
convergence, and Burgers characteristics. Consumes the artifact contract
only; the solver package is never imported.
"""
from .run_dir import RunDirectory, RunDirectoryError
from .figures import FIGURES, FigureSkipped, render

__all__ = [
    "FIGURES",
    "FigureSkipped",
    "RunDirectory",
    "RunDirectoryError",
    "render",
]

__version__ = "0.1.0"
