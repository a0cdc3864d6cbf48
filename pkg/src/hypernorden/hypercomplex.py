"""Structure axioms, class membership and conformal generation.

A manifold is sorted into the parallel class K (all ∇J_α = 0), the
locally conformally parallel class W (F_1 of Hermitian conformal type,
F_2 and F_3 of Norden conformal type, tied together by one Lee-form
relation), or neither. Verdicts are local: they certify only the sampled
points.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable

import numpy as np

from . import exprlang, numeric
from .manifold import ChartManifold, fundamental_tensor, lee_forms, point_geometry
from .policy import DEFAULT, Thresholds, normalized_residual, normalized_size


class ClassVerdict(str, Enum):
    K = "K"
    W = "W"
    OUTSIDE = "Outside"
    INDETERMINATE = "Indeterminate"


@dataclass(frozen=True)
class StructureResiduals:
    quaternionic: float
    compat: float
    assoc_forms_ok: bool
    assoc_forms: float = 0.0

    def holds(self, thresholds: Thresholds = DEFAULT) -> bool:
        return self.quaternionic < thresholds.hold and self.compat < thresholds.hold and self.assoc_forms_ok


def quaternionic_residual(J: np.ndarray) -> float:
    """Max deviation from J_α² = -I, J_α = J_β J_γ = -J_γ J_β (cyclic)."""
    d = J.shape[-1]
    eye = np.eye(d)
    worst = 0.0
    for a, b, c in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
        for r in (J[a] @ J[a] + eye, J[a] - J[b] @ J[c], J[a] + J[c] @ J[b]):
            worst = max(worst, float(np.max(np.abs(r))))
    return worst


def compat_residual(g: np.ndarray, J: np.ndarray) -> float:
    """Hermitian condition for J_1, Norden condition for J_2 and J_3."""
    return max(
        normalized_residual(J[0].T @ g @ J[0], g),
        normalized_residual(J[1].T @ g @ J[1], -g),
        normalized_residual(J[2].T @ g @ J[2], -g),
    )


def associated_forms(g: np.ndarray, J: np.ndarray) -> np.ndarray:
    """Matrices of g_α(X, Y) = g(J_α X, Y)."""
    return np.array([Ja.T @ g for Ja in J])


def structure_residuals(M: ChartManifold, points: Iterable) -> StructureResiduals:
    quat = compat = assoc = 0.0
    ok = True
    for x in points:
        pg = point_geometry(M, x)
        quat = max(quat, quaternionic_residual(pg.J))
        compat = max(compat, compat_residual(pg.g, pg.J))
        g1, g2, g3 = associated_forms(pg.g, pg.J)
        # g_1 is a 2-form, g_2 and g_3 are neutral metrics
        r = max(
            normalized_residual(g1, -g1.T),
            normalized_residual(g2, g2.T),
            normalized_residual(g3, g3.T),
        )
        assoc = max(assoc, r)
        if r < DEFAULT.hold:
            for ga in (g2, g3):
                try:
                    sig = numeric.inertia(0.5 * (ga + ga.T))
                except Exception:
                    sig = None
                ok &= sig == (2 * M.n, 2 * M.n, 0)
        else:
            ok = False
    return StructureResiduals(quat, compat, ok, assoc)


def hermitian_rhs(g: np.ndarray, J: np.ndarray, theta: np.ndarray, n: int) -> np.ndarray:
    """Right-hand side of the conformal-Kähler identity for F_1, all (X, Y, Z)."""
    gJ = g @ J  # gJ[i, j] = g(e_i, J e_j)
    thJ = theta @ J  # thJ[k] = θ(J e_k)
    c = 1.0 / (2 * (2 * n - 1))
    return c * (
        np.einsum("ij,k->ijk", g, theta)
        - np.einsum("ik,j->ijk", g, theta)
        - np.einsum("ij,k->ijk", gJ, thJ)
        + np.einsum("ik,j->ijk", gJ, thJ)
    )


def norden_rhs(g: np.ndarray, J: np.ndarray, theta: np.ndarray, n: int) -> np.ndarray:
    """Right-hand side of the conformal-Kähler identity for Norden F_2, F_3."""
    gJ = g @ J
    thJ = theta @ J
    c = 1.0 / (4 * n)
    return c * (
        np.einsum("ij,k->ijk", g, theta)
        + np.einsum("ik,j->ijk", g, theta)
        + np.einsum("ij,k->ijk", gJ, thJ)
        + np.einsum("ik,j->ijk", gJ, thJ)
    )


@dataclass(frozen=True)
class PointClassResiduals:
    r_K: float
    r_W1: float
    r_W: tuple  # (alpha=2, alpha=3)
    r_lee: float
    r_p: float
    theta_size: float


def point_class_residuals(M: ChartManifold, x) -> PointClassResiduals:
    pg = point_geometry(M, x)
    n = M.n
    F = [fundamental_tensor(pg, a) for a in (1, 2, 3)]
    lee = lee_forms(pg)
    gscale = float(np.max(np.abs(pg.g)))
    r_K = max(normalized_size(Fa, gscale) for Fa in F)
    r_W1 = normalized_residual(F[0], hermitian_rhs(pg.g, pg.J[0], lee.theta[0], n))
    r_W = tuple(normalized_residual(F[a], norden_rhs(pg.g, pg.J[a], lee.theta[a], n)) for a in (1, 2))
    target = -(2 * n / (2 * n - 1)) * (lee.theta[0] @ pg.J[0])
    r_lee = max(normalized_residual(lee.theta[a] @ pg.J[a], target) for a in (1, 2))
    theta_size = float(np.max(np.abs(lee.theta)) / (1.0 + gscale))
    return PointClassResiduals(r_K, r_W1, r_W, r_lee, lee.p_relation_residual, theta_size)


@dataclass(frozen=True)
class ClassResiduals:
    r_K: float
    r_W1: float
    r_W: tuple
    r_lee: float
    r_p: float
    theta_size: float
    verdict: ClassVerdict
    per_point: list = field(default_factory=list, repr=False)

    @property
    def r_W_max(self) -> float:
        return max(self.r_W1, *self.r_W, self.r_lee)


def classify_residuals(r_K: float, r_w: float, thresholds: Thresholds = DEFAULT) -> ClassVerdict:
    if r_K < thresholds.hold:
        return ClassVerdict.K
    if r_w < thresholds.hold and r_K > thresholds.fail:
        return ClassVerdict.W
    if r_w > thresholds.fail and r_K > thresholds.fail:
        return ClassVerdict.OUTSIDE
    return ClassVerdict.INDETERMINATE


def class_residuals(M: ChartManifold, points: Iterable, thresholds: Thresholds = DEFAULT) -> ClassResiduals:
    rows = [point_class_residuals(M, x) for x in points]
    if not rows:
        raise ValueError("need at least one sample point")
    r_K = max(r.r_K for r in rows)
    r_W1 = max(r.r_W1 for r in rows)
    r_W = (max(r.r_W[0] for r in rows), max(r.r_W[1] for r in rows))
    r_lee = max(r.r_lee for r in rows)
    verdict = classify_residuals(r_K, max(r_W1, *r_W, r_lee), thresholds)
    return ClassResiduals(
        r_K,
        r_W1,
        r_W,
        r_lee,
        max(r.r_p for r in rows),
        max(r.theta_size for r in rows),
        verdict,
        rows,
    )


def classify(M: ChartManifold, points: Iterable, thresholds: Thresholds = DEFAULT) -> ClassVerdict:
    return class_residuals(M, points, thresholds).verdict


def conformal_transform(M: ChartManifold, u) -> ChartManifold:
    """Rescale the metric by ``exp(2u)`` and keep the three structures.

    ``u`` is expression text or a parsed expression over the chart
    coordinates.
    """
    tree = exprlang.parse(u, M.dim) if isinstance(u, str) else u
    base = M.metric_fn

    def metric_fn(x):
        factor = numeric.exp(2.0 * exprlang.evaluate(tree, x))
        g = np.asarray(base(x), dtype=object)
        out = np.empty(g.shape, dtype=object)
        for idx, entry in np.ndenumerate(g):
            out[idx] = factor * entry
        return out

    label = f"exp(2*{exprlang.to_text(tree)})*[{M.label}]"
    return ChartManifold(M.dim, metric_fn, M.J_fns, label, M.check_signature)
