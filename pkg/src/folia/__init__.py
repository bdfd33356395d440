"""Godbillon-Vey type invariants for framed distributions on coordinate
charts: exterior calculus through truncated Taylor jets, variational
residuals, criticality diagnostics, and the singular-profile ODE solvers.
"""

from .errors import FoliaError
from .fields import Chart, ExprFormField, FramedScene, MetricField, VectorField
from .invariants import (
    VariationSpec,
    first_variation,
    gv_number,
    gv_s_number,
    index_form,
    second_variation,
)
from .quadrature import QuadratureSpec, integrate_form
from .scenes import load_scene

__version__ = "0.1.0"

__all__ = [
    "Chart",
    "ExprFormField",
    "FoliaError",
    "FramedScene",
    "MetricField",
    "QuadratureSpec",
    "VariationSpec",
    "VectorField",
    "first_variation",
    "gv_number",
    "gv_s_number",
    "index_form",
    "integrate_form",
    "load_scene",
    "second_variation",
    "__version__",
]
