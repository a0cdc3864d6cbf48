"""Numerical verification of almost hypercomplex geometry with Hermitian and Norden metrics."""

__version__ = "0.1.0"

from .errors import (
    DegenerateInducedMetric,
    DomainError,
    EvaluationDomainError,
    ExprSyntaxError,
    GeometryError,
    RankDeficientImmersion,
    SignatureViolation,
    SingularMatrix,
    SingularMetric,
    UnknownIdentifier,
)
from .manifold import ChartManifold, lee_forms, point_geometry
from .hypercomplex import ClassVerdict, classify, class_residuals, conformal_transform, structure_residuals
from .submanifold import Immersion, Umbilicity, holomorphic_identity_residuals, umbilicity_classify
from .catalog import conformal_W, coordinate_immersion, flat_K, product

__all__ = [
    "ChartManifold",
    "ClassVerdict",
    "DegenerateInducedMetric",
    "DomainError",
    "EvaluationDomainError",
    "ExprSyntaxError",
    "GeometryError",
    "Immersion",
    "RankDeficientImmersion",
    "SignatureViolation",
    "SingularMatrix",
    "SingularMetric",
    "Umbilicity",
    "UnknownIdentifier",
    "class_residuals",
    "classify",
    "conformal_W",
    "conformal_transform",
    "coordinate_immersion",
    "flat_K",
    "lee_forms",
    "point_geometry",
    "product",
    "structure_residuals",
    "holomorphic_identity_residuals",
    "umbilicity_classify",
]
