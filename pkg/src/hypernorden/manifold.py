"""Pointwise pseudo-Riemannian geometry on a single coordinate chart.

Index conventions for the arrays returned here (``d`` = chart dimension):

* ``dg[k, i, j]``      = ∂_k g_ij
* ``Gamma[k, i, j]``   = Γ^k_ij
* ``J[a, i, j]``       = (J_{a+1})^i_j, the matrix acting on column vectors
* ``dJ[a, k, i, j]``   = ∂_k (J_{a+1})^i_j
* ``nabla_J[i, k, j]`` = (∇_i J)^k_j
* ``F[i, j, k]``       = F(e_i, e_j, e_k) = g((∇_{e_i} J) e_j, e_k)
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

from . import numeric
from .errors import DomainError, SignatureViolation, SingularMatrix, SingularMetric
from .policy import normalized_residual

METRIC_SYMMETRY_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class ChartManifold:
    """A 4n-dimensional chart carrying a metric and three (1,1)-structures.

    ``metric_fn`` and every entry of ``J_fns`` take a sequence of ``dim``
    scalars (floats or ``Dual1``) and return a ``dim x dim`` array-like of
    scalars.
    """

    dim: int
    metric_fn: Callable[[Sequence], object]
    J_fns: tuple
    label: str = ""
    check_signature: bool = True

    def __post_init__(self):
        if self.dim < 4 or self.dim % 4:
            raise DomainError(f"chart dimension must be a positive multiple of 4, got {self.dim}")
        if len(self.J_fns) != 3:
            raise DomainError("need exactly three structure functions")

    @property
    def n(self) -> int:
        return self.dim // 4

    def _check_point(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dim,):
            raise DomainError(f"point must have {self.dim} coordinates, got shape {x.shape}")
        return x

    def metric(self, x) -> np.ndarray:
        x = self._check_point(x)
        return np.asarray(self.metric_fn(list(x)), dtype=float).reshape(self.dim, self.dim)

    def structures(self, x) -> np.ndarray:
        x = self._check_point(x)
        return np.array([np.asarray(f(list(x)), dtype=float).reshape(self.dim, self.dim) for f in self.J_fns])

    def metric_jet(self, x) -> tuple[np.ndarray, np.ndarray]:
        """Metric values and ``dg[k, i, j] = ∂_k g_ij``."""
        x = self._check_point(x)
        g, jac = numeric.jacobian(self.metric_fn, x)
        g = g.reshape(self.dim, self.dim)
        return g, np.moveaxis(jac.reshape(self.dim, self.dim, self.dim), 2, 0)

    def structure_jet(self, x) -> tuple[np.ndarray, np.ndarray]:
        x = self._check_point(x)
        J = np.empty((3, self.dim, self.dim))
        dJ = np.empty((3, self.dim, self.dim, self.dim))
        for a, f in enumerate(self.J_fns):
            v, jac = numeric.jacobian(f, x)
            J[a] = v.reshape(self.dim, self.dim)
            dJ[a] = np.moveaxis(jac.reshape(self.dim, self.dim, self.dim), 2, 0)
        return J, dJ

    @lru_cache(maxsize=256)
    def _geometry(self, key: tuple) -> "PointGeometry":
        return _build_point_geometry(self, np.array(key))

    def __repr__(self):
        return f"ChartManifold(dim={self.dim}, label={self.label!r})"


@dataclass(frozen=True)
class PointGeometry:
    point: np.ndarray
    g: np.ndarray
    g_inv: np.ndarray
    dg: np.ndarray
    Gamma: np.ndarray
    J: np.ndarray
    dJ: np.ndarray
    n: int = field(default=0)

    @property
    def dim(self) -> int:
        return len(self.point)


def christoffel(g_inv: np.ndarray, dg: np.ndarray) -> np.ndarray:
    """Γ^k_ij = ½ g^kl (∂_i g_jl + ∂_j g_il - ∂_l g_ij)."""
    lowered = dg + np.swapaxes(dg, 0, 1) - np.moveaxis(dg, 0, 2)
    return 0.5 * np.einsum("kl,ijl->kij", g_inv, lowered)


def _build_point_geometry(M: ChartManifold, x: np.ndarray) -> PointGeometry:
    g, dg = M.metric_jet(x)
    asym = np.max(np.abs(g - g.T))
    if asym > METRIC_SYMMETRY_TOL * max(1.0, np.max(np.abs(g))):
        raise DomainError(f"metric of {M.label or 'manifold'} not symmetric at {x.tolist()} ({asym:.2e})")
    g = 0.5 * (g + g.T)
    dg = 0.5 * (dg + np.swapaxes(dg, 1, 2))
    try:
        g_inv = numeric.inv(g)
    except SingularMatrix as err:
        raise SingularMetric(f"metric singular at {x.tolist()}: {err}") from None
    if M.check_signature:
        sig = numeric.inertia(g)
        if sig != (2 * M.n, 2 * M.n, 0):
            raise SignatureViolation(f"metric inertia {sig} at {x.tolist()}, expected ({2 * M.n}, {2 * M.n}, 0)")
    J, dJ = M.structure_jet(x)
    return PointGeometry(x, g, g_inv, dg, christoffel(g_inv, dg), J, dJ, M.n)


def point_geometry(M: ChartManifold, x) -> PointGeometry:
    """Metric, inverse, Christoffel symbols and structure jets at ``x``."""
    x = M._check_point(x)
    return M._geometry(tuple(float(v) for v in x))


def nabla_J(pg: PointGeometry, alpha: int) -> np.ndarray:
    """(∇_i J_α)^k_j = ∂_i J^k_j + Γ^k_il J^l_j - Γ^l_ij J^k_l."""
    J = pg.J[alpha - 1]
    dJ = pg.dJ[alpha - 1]
    return dJ + np.einsum("kil,lj->ikj", pg.Gamma, J) - np.einsum("lij,kl->ikj", pg.Gamma, J)


def fundamental_tensor(pg: PointGeometry, alpha: int) -> np.ndarray:
    """All components F_α(e_i, e_j, e_k) in the coordinate frame."""
    return np.einsum("mk,ikj->ijm", pg.g, nabla_J(pg, alpha))


def fundamental_F(pg: PointGeometry, alpha: int, X, Y, Z) -> float:
    return float(np.einsum("ijk,i,j,k->", fundamental_tensor(pg, alpha), X, Y, Z))


@dataclass(frozen=True)
class LeeData:
    theta: np.ndarray  # (3, d), lower index
    p: np.ndarray  # (3, d), upper index
    p_relation_residual: float

    def covector(self, alpha: int) -> np.ndarray:
        return self.theta[alpha - 1]

    def vector(self, alpha: int) -> np.ndarray:
        return self.p[alpha - 1]


def lee_forms(pg: PointGeometry) -> LeeData:
    """θ_α(Z) = g^ij F_α(e_i, e_j, Z) and the metric duals p_α = g^{-1} θ_α."""
    theta = np.array([np.einsum("ij,ijk->k", pg.g_inv, fundamental_tensor(pg, a)) for a in (1, 2, 3)])
    p = theta @ pg.g_inv.T
    n = pg.n
    target = (2 * n / (2 * n - 1)) * (pg.J[0] @ p[0])
    rel = max(normalized_residual(pg.J[a] @ p[a], target) for a in (1, 2))
    return LeeData(theta, p, rel)


def _nijenhuis(J: np.ndarray, dJ: np.ndarray, X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    JX, JY = J @ X, J @ Y
    dJX = np.einsum("kij,j->ik", dJ, X)  # dJX[i, k] = ∂_k (JX)^i
    dJY = np.einsum("kij,j->ik", dJ, Y)
    bracket_JX_JY = dJY @ JX - dJX @ JY
    bracket_JX_Y = -dJX @ Y
    bracket_X_JY = dJY @ X
    return bracket_JX_JY - J @ bracket_JX_Y - J @ bracket_X_JY


def nijenhuis(M: ChartManifold, x, alpha: int, X, Y) -> np.ndarray:
    """N_α(X, Y) for constant coordinate fields X, Y.

    With [X, Y] = 0 this is [JX, JY] - J[JX, Y] - J[X, JY].
    """
    J, dJ = M.structure_jet(x)
    return _nijenhuis(J[alpha - 1], dJ[alpha - 1], np.asarray(X, dtype=float), np.asarray(Y, dtype=float))


def nijenhuis_max(M: ChartManifold, x, alpha: int) -> float:
    """Largest |N_α(e_i, e_j)| component over the coordinate frame."""
    J, dJ = M.structure_jet(x)
    E = np.eye(M.dim)
    return max(
        float(np.max(np.abs(_nijenhuis(J[alpha - 1], dJ[alpha - 1], E[i], E[j]))))
        for i in range(M.dim)
        for j in range(i + 1, M.dim)
    )
