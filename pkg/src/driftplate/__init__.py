"""Finite-element laboratory for the clamped plate problem of the drift Laplacian.

``L_nu = Delta + <nu, grad .>`` on an immersed manifold, self-adjoint for the
weighted measure ``exp(<nu, X>) dv``.  The package computes the low spectrum
of ``L_nu^2`` with clamped boundary conditions and checks it against a family
of universal eigenvalue inequalities.
"""
from .assembly import AssembledForms, DomainSpec, MeshC1, assemble, build_forms
from .catalogue import CATALOGUE, build
from .eigensolve import Spectrum, smallest_eigenpairs
from .errors import (ConfigError, DriftPlateError, EmptyInterior, IndefiniteMass, InsufficientSpectrum,
                     NoConvergence, NotATranslator, RankDeficiencyWarning, SingularMetric, VariantMismatch,
                     ZeroVector)
from .geometry import DriftSpec, ParametricImmersion, point_geometry

__version__ = "0.1.0"

__all__ = [
    "AssembledForms", "CATALOGUE", "ConfigError", "DomainSpec", "DriftPlateError", "DriftSpec",
    "EmptyInterior", "IndefiniteMass", "InsufficientSpectrum", "MeshC1", "NoConvergence",
    "NotATranslator", "ParametricImmersion", "RankDeficiencyWarning", "SingularMetric", "Spectrum",
    "VariantMismatch", "ZeroVector", "assemble", "build", "build_forms", "point_geometry",
    "smallest_eigenpairs",
]
