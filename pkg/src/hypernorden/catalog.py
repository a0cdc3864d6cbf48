"""Built-in manifolds and immersions.

Chart coordinates of R^{4n} are laid out in four groups of n,
``(x^1..x^n, y^1..y^n, u^1..u^n, v^1..v^n)``, so that in the expression
language

    x^i -> x_i,  y^i -> x_{n+i},  u^i -> x_{2n+i},  v^i -> x_{3n+i}.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from . import exprlang, hypercomplex
from .errors import DomainError
from .manifold import ChartManifold, fundamental_tensor, lee_forms, point_geometry
from .policy import normalized_residual
from .submanifold import Immersion

X, Y, U, V = range(4)

# (source group, target group, sign): J ∂_source = sign * ∂_target
STRUCTURE_PATTERN = {
    1: [(X, Y, 1), (Y, X, -1), (U, V, -1), (V, U, 1)],
    2: [(X, U, 1), (Y, V, 1), (U, X, -1), (V, Y, -1)],
    3: [(X, V, -1), (Y, U, 1), (U, Y, -1), (V, X, 1)],
}
METRIC_PATTERN = (-1.0, -1.0, 1.0, 1.0)


def block_pattern(alpha: int) -> np.ndarray:
    P = np.zeros((4, 4))
    for src, dst, sign in STRUCTURE_PATTERN[alpha]:
        P[dst, src] = sign
    return P


def flat_structure(alpha: int, n: int) -> np.ndarray:
    return np.kron(block_pattern(alpha), np.eye(n))


def flat_metric(n: int) -> np.ndarray:
    return np.kron(np.diag(METRIC_PATTERN), np.eye(n))


def _constant(matrix: np.ndarray):
    matrix = matrix.copy()
    matrix.setflags(write=False)

    def fn(x):
        return matrix

    return fn


def flat_K(n: int) -> ChartManifold:
    """R^{4n} with the constant hypercomplex structure and neutral metric."""
    if n < 1:
        raise DomainError("n must be at least 1")
    return ChartManifold(
        4 * n,
        _constant(flat_metric(n)),
        tuple(_constant(flat_structure(a, n)) for a in (1, 2, 3)),
        f"flat_k(n={n})",
    )


def conformal_W(n: int, u) -> ChartManifold:
    """Conformal rescaling ``exp(2u) g`` of :func:`flat_K`."""
    return hypercomplex.conformal_transform(flat_K(n), u)


def coordinate_immersion(m: int, n: int, ambient: ChartManifold | None = None, section=0.0) -> Immersion:
    """Inclusion of the slice where the last n-m slots of every group are fixed.

    Source coordinate ``q*m + i`` (group q, slot i < m) maps to ambient
    coordinate ``q*n + i``. ``section`` is a scalar or a sequence of the
    4(n-m) fixed values, ordered group by group.
    """
    if not 1 <= m < n:
        raise DomainError(f"coordinate immersion needs 1 <= m < n, got m={m}, n={n}")
    if ambient is None:
        ambient = flat_K(n)
    if ambient.dim != 4 * n:
        raise DomainError("ambient dimension does not match n")
    fixed = _section(section, 4 * (n - m))
    comps = []
    k = 0
    for q in range(4):
        for i in range(n):
            if i < m:
                comps.append(exprlang.Var(q * m + i + 1))
            else:
                comps.append(exprlang.Num(float(fixed[k])))
                k += 1
    return Immersion(ambient, m, tuple(comps), f"coordinate_submanifold(m={m}) in {ambient.label}")


def _block_diag(a, b):
    a = np.asarray(a, dtype=object)
    b = np.asarray(b, dtype=object)
    out = np.zeros((a.shape[0] + b.shape[0],) * 2, dtype=object)
    out[: a.shape[0], : a.shape[0]] = a
    out[a.shape[0] :, a.shape[0] :] = b
    return out


def product(M: ChartManifold, M2: ChartManifold, section=0.0, section2=0.0):
    """Product manifold with block-diagonal structures and metric.

    Returns ``(Mbar, i1, i2)`` where ``i1`` embeds M at ``section2`` in the
    second factor and ``i2`` embeds M2 at ``section`` in the first.
    """
    d1, d2 = M.dim, M2.dim

    def metric_fn(x):
        return _block_diag(M.metric_fn(x[:d1]), M2.metric_fn(x[d1:]))

    def make_J(f1, f2):
        return lambda x: _block_diag(f1(x[:d1]), f2(x[d1:]))

    Mbar = ChartManifold(
        d1 + d2,
        metric_fn,
        tuple(make_J(f1, f2) for f1, f2 in zip(M.J_fns, M2.J_fns)),
        f"({M.label}) x ({M2.label})",
    )
    c1 = _section(section, d1)
    c2 = _section(section2, d2)
    i1 = Immersion(
        Mbar,
        d1 // 4,
        tuple(exprlang.Var(i + 1) for i in range(d1)) + tuple(exprlang.Num(float(c)) for c in c2),
        f"first factor of {Mbar.label}",
    )
    i2 = Immersion(
        Mbar,
        d2 // 4,
        tuple(exprlang.Num(float(c)) for c in c1) + tuple(exprlang.Var(i + 1) for i in range(d2)),
        f"second factor of {Mbar.label}",
    )
    return Mbar, i1, i2


def _section(value, dim: int) -> np.ndarray:
    if np.ndim(value) == 0:
        return np.full(dim, float(value))
    value = np.asarray(value, dtype=float)
    if value.shape != (dim,):
        raise DomainError(f"section needs {dim} values")
    return value


def verify_product_relations(Mbar: ChartManifold, M: ChartManifold, M2: ChartManifold, points: Sequence) -> dict:
    """Residuals of the fundamental-tensor and Lee-form splitting on a product.

    ``r_F`` compares F̄_α with F_α ⊕ F'_α on every coordinate triple,
    ``r_theta`` compares θ̄_α with (θ_α, θ'_α), and ``r_primed`` compares
    F̄_α with its restriction to the second factor (meaningful when the
    first factor is parallel).
    """
    d1 = M.dim
    r_F = r_theta = r_primed = 0.0
    for x in points:
        x = np.asarray(x, dtype=float)
        pg = point_geometry(Mbar, x)
        pg1 = point_geometry(M, x[:d1])
        pg2 = point_geometry(M2, x[d1:])
        lee = lee_forms(pg)
        lee1, lee2 = lee_forms(pg1), lee_forms(pg2)
        for a in (1, 2, 3):
            Fbar = fundamental_tensor(pg, a)
            expected = np.zeros_like(Fbar)
            expected[:d1, :d1, :d1] = fundamental_tensor(pg1, a)
            expected[d1:, d1:, d1:] = fundamental_tensor(pg2, a)
            r_F = max(r_F, normalized_residual(Fbar, expected))
            primed = np.zeros_like(Fbar)
            primed[d1:, d1:, d1:] = Fbar[d1:, d1:, d1:]
            r_primed = max(r_primed, normalized_residual(Fbar, primed))
        split = np.concatenate([lee1.theta, lee2.theta], axis=1)
        r_theta = max(r_theta, normalized_residual(lee.theta, split))
    return {"r_F": r_F, "r_theta": r_theta, "r_primed": r_primed}
