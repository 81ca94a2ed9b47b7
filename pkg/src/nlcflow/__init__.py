"""Pseudo-spectral solver and decay diagnostics for a simplified nematic liquid crystal flow."""

__version__ = "0.1.0"

from .spectral import Grid, ScalarField, VectorField3  # noqa: E402
from .model import FlowState, ModelParams  # noqa: E402

__all__ = ["Grid", "ScalarField", "VectorField3", "FlowState", "ModelParams", "__version__"]
