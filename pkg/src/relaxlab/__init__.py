"""Relaxation systems for hyperbolic balance laws.

Model descriptors and hypothesis validators (:mod:`relaxlab.framework`),
built-in models (:mod:`relaxlab.models`), a periodic finite-volume solver
(:mod:`relaxlab.solver`) and relative-entropy diagnostics
(:mod:`relaxlab.diagnostics`).
"""
from .framework import (Constants, HypothesisReport, ModelDescriptor, SampleBox,
                        dissipation, equilibrium_flux, equilibrium_source, project,
                        relative_entropy, relative_entropy_flux, source_bracket,
                        validate_hypothesis, validate_model)
from .models import build_combustion, build_elasticity, build_model, build_symmetric

__version__ = "0.1.0"

__all__ = [
    "Constants", "HypothesisReport", "ModelDescriptor", "SampleBox",
    "dissipation", "equilibrium_flux", "equilibrium_source", "project",
    "relative_entropy", "relative_entropy_flux", "source_bracket",
    "validate_hypothesis", "validate_model",
    "build_combustion", "build_elasticity", "build_model", "build_symmetric",
]
