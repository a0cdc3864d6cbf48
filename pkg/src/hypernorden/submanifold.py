"""Holomorphic submanifolds: frames, Gauss-Weingarten data and identity checks.

Conventions: ``s`` is a point in the 4m source coordinates, ``T[a, i]`` is
the tangent frame ∂φ^a/∂s^i, ``H[a, i, j]`` the second derivatives of φ.
Tangent vectors given "in submanifold coordinates" are 4m-vectors of
coefficients on ``T``; everything returned is an ambient 4n-vector.
Normal bundles use the raw elimination complement of the tangent space,
never an orthonormalized one, and indices are raised through Gram
inverses.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property, lru_cache
from typing import Callable, Iterable, Sequence

import numpy as np

from . import exprlang, numeric
from .errors import DegenerateInducedMetric, DomainError, RankDeficientImmersion, SingularMatrix
from .hypercomplex import ClassVerdict, class_residuals
from .manifold import (
    ChartManifold,
    PointGeometry,
    lee_forms,
    nabla_J,
    point_geometry,
)
from .policy import DEFAULT, Thresholds, normalized_residual, normalized_size

NORMAL_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class Immersion:
    """φ from 4m source coordinates into an ambient chart, one expression per slot."""

    ambient: ChartManifold
    m: int
    components: tuple
    label: str = ""

    def __post_init__(self):
        if self.m < 1 or 4 * self.m >= self.ambient.dim:
            raise DomainError(f"need 1 <= 4m < {self.ambient.dim}, got m={self.m}")
        if len(self.components) != self.ambient.dim:
            raise DomainError(f"need {self.ambient.dim} components, got {len(self.components)}")
        for c in self.components:
            bad = [i for i in exprlang.free_vars(c) if i > self.dim]
            if bad:
                raise DomainError(f"component {exprlang.to_text(c)} uses variables beyond x{self.dim}")

    @classmethod
    def from_text(cls, ambient: ChartManifold, m: int, texts: Sequence[str], label: str = "") -> "Immersion":
        return cls(ambient, m, tuple(exprlang.parse(t, 4 * m) for t in texts), label)

    @property
    def dim(self) -> int:
        return 4 * self.m

    def phi(self, s) -> list:
        return [exprlang.evaluate(c, s) for c in self.components]

    def point(self, s) -> np.ndarray:
        return np.array([numeric.value_of(v) for v in self.phi(list(np.asarray(s, dtype=float)))])

    def _check(self, s) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        if s.shape != (self.dim,):
            raise DomainError(f"submanifold point needs {self.dim} coordinates")
        return s

    @lru_cache(maxsize=256)
    def _jet(self, key: tuple):
        vals, grads, hess = numeric.hessian(self.phi, np.array(key))
        return vals, grads, hess

    def jet(self, s):
        """``(φ(s), T, H)`` with T[a, i] = ∂_i φ^a and H[a, i, j] = ∂_i ∂_j φ^a."""
        s = self._check(s)
        return self._jet(tuple(float(v) for v in s))

    @lru_cache(maxsize=256)
    def _frame(self, key: tuple) -> "Frame":
        return _build_frame(self, np.array(key))

    @cached_property
    def induced(self) -> ChartManifold:
        return induced_manifold(self)

    def __repr__(self):
        return f"Immersion(m={self.m}, label={self.label!r})"


@dataclass(frozen=True, eq=False)
class Frame:
    s: np.ndarray
    phi: np.ndarray
    T: np.ndarray
    H: np.ndarray
    pg: PointGeometry
    g_ind: np.ndarray
    g_ind_inv: np.ndarray
    Nbasis: np.ndarray
    g_nor: np.ndarray
    g_nor_inv: np.ndarray

    @property
    def g(self) -> np.ndarray:
        return self.pg.g

    def tangent_coeffs(self, V) -> np.ndarray:
        """Coefficients on T of the tangential part of ambient vector(s) V."""
        return self.g_ind_inv @ (self.T.T @ self.g @ V)

    def tangential(self, V) -> np.ndarray:
        return self.T @ self.tangent_coeffs(V)

    def normal(self, V) -> np.ndarray:
        return np.asarray(V) - self.tangential(V)

    def push(self, X) -> np.ndarray:
        return self.T @ np.asarray(X, dtype=float)

    def inner(self, A, B) -> float:
        return float(np.asarray(A) @ self.g @ np.asarray(B))


def _build_frame(imm: Immersion, s: np.ndarray) -> Frame:
    phi, T, H = imm.jet(s)
    if numeric.nullspace(T).shape[1] > 0:
        raise RankDeficientImmersion(f"tangent frame has rank < {imm.dim} at s={s.tolist()}")
    pg = point_geometry(imm.ambient, phi)
    G = T.T @ pg.g @ T
    G = 0.5 * (G + G.T)
    sig = numeric.inertia(G)
    if sig != (2 * imm.m, 2 * imm.m, 0):
        raise DegenerateInducedMetric(f"induced metric inertia {sig} at s={s.tolist()}")
    try:
        G_inv = numeric.inv(G)
    except SingularMatrix as err:
        raise DegenerateInducedMetric(str(err)) from None
    N = numeric.nullspace(T.T @ pg.g)
    GN = N.T @ pg.g @ N
    GN = 0.5 * (GN + GN.T)
    try:
        GN_inv = numeric.inv(GN)
    except SingularMatrix as err:
        raise DegenerateInducedMetric(f"normal bundle degenerate: {err}") from None
    return Frame(s, phi, T, H, pg, G, G_inv, N, GN, GN_inv)


def frame_at(imm: Immersion, s) -> Frame:
    s = imm._check(s)
    return imm._frame(tuple(float(v) for v in s))


# Jets of frame quantities along the submanifold.


@dataclass(frozen=True)
class _AlongJet:
    """Ambient metric and structures pulled back along φ with their s-derivatives."""

    frame: Frame
    dg: np.ndarray  # dg[a, b, k] = ∂_k (g_ab ∘ φ)
    dJ: np.ndarray  # dJ[α, a, b, k] = ∂_k (J_α^a_b ∘ φ)
    dG: np.ndarray  # dG[i, j, k] = ∂_k g_ind_ij


def _along(imm: Immersion, s) -> _AlongJet:
    f = frame_at(imm, s)
    T, H, g = f.T, f.H, f.g
    dg = np.einsum("cab,ck->abk", f.pg.dg, T)
    dJ = np.einsum("xcab,ck->xabk", f.pg.dJ, T)
    dG = np.einsum("aik,ab,bj->ijk", H, g, T) + np.einsum("ai,abk,bj->ijk", T, dg, T)
    dG = dG + np.swapaxes(np.einsum("aik,ab,bj->ijk", H, g, T), 0, 1)
    return _AlongJet(f, dg, dJ, dG)


def _induced_jet(imm: Immersion, s):
    """Induced metric and restricted structures with first derivatives."""
    aj = _along(imm, s)
    f = aj.frame
    T, H, g = f.T, f.H, f.g
    Ginv = f.g_ind_inv
    JM = np.empty((3, imm.dim, imm.dim))
    dJM = np.empty((3, imm.dim, imm.dim, imm.dim))
    for a in range(3):
        gJ = g @ f.pg.J[a]
        dgJ = np.einsum("abk,bc->ack", aj.dg, f.pg.J[a]) + np.einsum("ab,bck->ack", g, aj.dJ[a])
        K = T.T @ gJ @ T
        dK = (
            np.einsum("aik,ac,cj->ijk", H, gJ, T)
            + np.einsum("ai,ack,cj->ijk", T, dgJ, T)
            + np.einsum("ai,ac,cjk->ijk", T, gJ, H)
        )
        JM[a] = Ginv @ K
        dJM[a] = np.einsum("il,ljk->ijk", Ginv, dK - np.einsum("ilk,lj->ijk", aj.dG, JM[a]))
    return f.g_ind, aj.dG, JM, dJM


def induced_manifold(imm: Immersion) -> ChartManifold:
    """The submanifold as a chart manifold of dimension 4m.

    Its metric is the pullback of the ambient metric and its structures are
    the ambient ones restricted to the tangent frame; both are exposed as
    functions over Dual1 scalars through the chain rule.
    """

    def jet_at(s):
        return _induced_jet(imm, [numeric.value_of(v) for v in s])

    def metric_fn(s):
        G, dG, _, _ = jet_at(s)
        return numeric.lift_jet(G, dG, s)

    def make_J(a):
        def J_fn(s):
            _, _, JM, dJM = jet_at(s)
            return numeric.lift_jet(JM[a], dJM[a], s)

        return J_fn

    return ChartManifold(imm.dim, metric_fn, tuple(make_J(a) for a in range(3)), f"induced on {imm.label}")


# Vector fields along the submanifold, as functions over Dual1 scalars.


def _dual_field(jet_fn: Callable) -> Callable:
    def field_fn(s):
        value, deriv = jet_fn([numeric.value_of(v) for v in s])
        return numeric.lift_jet(value, deriv, s)

    field_fn.jet = jet_fn
    return field_fn


def projected_normal_field(imm: Immersion, V) -> Callable:
    """s -> normal part of the constant ambient vector V at φ(s)."""
    V = np.asarray(V, dtype=float)

    def jet(s):
        aj = _along(imm, s)
        f = aj.frame
        Q = f.tangent_coeffs(V)
        rhs = np.einsum("aik,ab,b->ik", f.H, f.g, V) + np.einsum("ai,abk,b->ik", f.T, aj.dg, V)
        rhs = rhs - np.einsum("ijk,j->ik", aj.dG, Q)
        dQ = f.g_ind_inv @ rhs
        dtan = np.einsum("aik,i->ak", f.H, Q) + f.T @ dQ
        return V - f.T @ Q, -dtan

    return _dual_field(jet)


def structure_field(imm: Immersion, alpha: int, field_fn: Callable) -> Callable:
    """s -> J_α(φ(s)) applied to another field given by :func:`projected_normal_field`."""
    inner = field_fn.jet

    def jet(s):
        aj = _along(imm, s)
        J = aj.frame.pg.J[alpha - 1]
        N, dN = inner(s)
        return J @ N, np.einsum("abk,b->ak", aj.dJ[alpha - 1], N) + J @ dN

    return _dual_field(jet)


# Gauss-Weingarten data.


def gauss_split(frame: Frame):
    """Split ∇̄_{T_i} T_j into induced Christoffels and the second fundamental form.

    Returns ``(Gamma_ind, h)`` with ``Gamma_ind[k, i, j]`` the tangential
    coefficients and ``h[a, i, j]`` the normal part.
    """
    W = frame.H + np.einsum("abc,bi,cj->aij", frame.pg.Gamma, frame.T, frame.T)
    coeffs = np.einsum("kl,al,ab,bij->kij", frame.g_ind_inv, frame.T, frame.g, W)
    h = W - np.einsum("ak,kij->aij", frame.T, coeffs)
    return coeffs, h


def second_fundamental_tensor(imm: Immersion, s) -> np.ndarray:
    return gauss_split(frame_at(imm, s))[1]


def second_fundamental(imm: Immersion, s, X, Y) -> np.ndarray:
    """h(X, Y) for tangent vectors given in submanifold coordinates."""
    h = second_fundamental_tensor(imm, s)
    return np.einsum("aij,i,j->a", h, np.asarray(X, dtype=float), np.asarray(Y, dtype=float))


def _require_normal(frame: Frame, N: np.ndarray, tol: float = NORMAL_TOL):
    tan = frame.tangential(N)
    if normalized_size(tan, float(np.max(np.abs(N)))) > tol:
        raise DomainError("vector is not normal to the submanifold")


def shape_operator(imm: Immersion, s, N, X) -> np.ndarray:
    """A_N X from g(A_N X, T_j) = g(h(X, T_j), N), as an ambient vector."""
    frame = frame_at(imm, s)
    N = np.asarray(N, dtype=float)
    _require_normal(frame, N)
    h = gauss_split(frame)[1]
    hX = np.einsum("aij,i->aj", h, np.asarray(X, dtype=float))
    rhs = hX.T @ frame.g @ N
    return frame.T @ (frame.g_ind_inv @ rhs)


def normal_derivative(imm: Immersion, s, Nfield: Callable, X):
    """∇̄_X N split as ``(A_N X, D_X N)``; ``Nfield`` maps source coordinates to a normal field."""
    frame = frame_at(imm, s)
    N, dN = numeric.jacobian(Nfield, frame.s)
    _require_normal(frame, N)
    X = np.asarray(X, dtype=float)
    cov = dN @ X + np.einsum("abc,b,c->a", frame.pg.Gamma, frame.T @ X, N)
    tan = frame.tangential(cov)
    return -tan, cov - tan


def mean_curvature(imm: Immersion, s) -> np.ndarray:
    """C = (1/4m) g_ind^{jk} h(T_j, T_k)."""
    frame = frame_at(imm, s)
    h = gauss_split(frame)[1]
    return np.einsum("jk,ajk->a", frame.g_ind_inv, h) / imm.dim


def holomorphy_residual(imm: Immersion, s) -> float:
    frame = frame_at(imm, s)
    worst = 0.0
    for J in frame.pg.J:
        JT = J @ frame.T
        worst = max(worst, normalized_size(frame.normal(JT), float(np.max(np.abs(JT)))))
    return worst


@dataclass(frozen=True)
class ShapeData:
    frame: Frame
    h: np.ndarray
    C: np.ndarray
    theta_bar: np.ndarray
    p: np.ndarray
    p_top: np.ndarray
    p_bot: np.ndarray

    def A(self, N, X) -> np.ndarray:
        hX = np.einsum("aij,i->aj", self.h, np.asarray(X, dtype=float))
        return self.frame.T @ (self.frame.g_ind_inv @ (hX.T @ self.frame.g @ np.asarray(N, dtype=float)))


def shape_data(imm: Immersion, s) -> ShapeData:
    frame = frame_at(imm, s)
    h = gauss_split(frame)[1]
    C = np.einsum("jk,ajk->a", frame.g_ind_inv, h) / imm.dim
    lee = lee_forms(frame.pg)
    p_top = np.array([frame.tangential(p) for p in lee.p])
    return ShapeData(frame, h, C, lee.theta, lee.p, p_top, lee.p - p_top)


# Identity checks for holomorphic submanifolds of W-manifolds.

IDENTITY_NAMES = (
    "h_from_lee",
    "nabla_J1_induced",
    "nabla_J23_induced",
    "shape_J1",
    "shape_J23",
    "normal_connection_J",
)


@dataclass(frozen=True)
class IdentityResiduals:
    residuals: dict
    ambient_verdict: ClassVerdict
    holomorphy: float
    ambient_is_W: bool = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "ambient_is_W", self.ambient_verdict in (ClassVerdict.W, ClassVerdict.K))

    def max(self) -> float:
        return max(self.residuals.values())


def holomorphic_identity_residuals(imm: Immersion, s, thresholds: Thresholds = DEFAULT) -> IdentityResiduals:
    """Residuals of the six holomorphic-submanifold identities at one point.

    Left-hand sides come from the geometric engine (Gauss split, the induced
    manifold's own connection, the shape operator and normal connection of
    projected normal fields); right-hand sides are assembled from the
    ambient Lee forms and the tangential/normal parts of their dual vectors.
    """
    sd = shape_data(imm, s)
    f = sd.frame
    n = imm.ambient.n
    c1 = 1.0 / (2 * (2 * n - 1))
    cn = 1.0 / (4 * n)
    T, g, J = f.T, f.g, f.pg.J
    th = sd.theta_bar
    G = f.g_ind
    d = imm.dim
    res = {}

    # h(X, Y) in terms of the normal part of the Lee vectors
    lhs = sd.h
    rhs1 = c1 * np.einsum("ij,a->aij", G, J[0] @ sd.p_bot[0])
    r = normalized_residual(lhs, rhs1)
    for a in (1, 2):
        r = max(r, normalized_residual(lhs, cn * np.einsum("ij,a->aij", G, J[a] @ sd.p_bot[a])))
    res["h_from_lee"] = r

    # (∇_X J_α) Y on the induced manifold
    pgM = point_geometry(imm.induced, f.s)
    for a, name in ((0, "nabla_J1_induced"), (1, "nabla_J23_induced"), (2, "nabla_J23_induced")):
        NJ = nabla_J(pgM, a + 1)  # NJ[i, k, j]
        lhs = np.einsum("ak,ikj->aij", T, NJ)
        JT = J[a] @ T
        gXJY = T.T @ g @ JT  # [i, j] = g(T_i, J T_j)
        thY = th[a] @ T  # θ̄(T_j)
        thJY = th[a] @ JT  # θ̄(J T_j)
        sign = -1.0 if a == 0 else 1.0
        coef = c1 if a == 0 else cn
        rhs = coef * (
            np.einsum("ij,a->aij", G, sd.p_top[a])
            + sign * np.einsum("j,ai->aij", thY, T)
            + np.einsum("ij,a->aij", gXJY, J[a] @ sd.p_top[a])
            + sign * np.einsum("j,ai->aij", thJY, JT)
        )
        res[name] = max(res.get(name, 0.0), normalized_residual(lhs, rhs))

    # shape operator against J-rotated normals
    Nb = f.Nbasis
    for a, name in ((0, "shape_J1"), (1, "shape_J23"), (2, "shape_J23")):
        sign = 1.0 if a == 0 else -1.0
        coef = c1 if a == 0 else cn
        lhs_all, rhs_all = [], []
        for jn in range(Nb.shape[1]):
            N = Nb[:, jn]
            JN = J[a] @ N
            for i in range(d):
                X = T[:, i]
                lhs_all.append(sd.A(JN, np.eye(d)[i]))
                rhs_all.append(
                    J[a] @ sd.A(N, np.eye(d)[i]) + sign * coef * (th[a] @ N * X + th[a] @ JN * (J[a] @ X))
                )
        res[name] = max(res.get(name, 0.0), normalized_residual(lhs_all, rhs_all))

    # normal connection commutes with J_α
    lhs_all, rhs_all = [], []
    for jn in range(Nb.shape[1]):
        Nf = projected_normal_field(imm, Nb[:, jn])
        for a in range(3):
            JNf = structure_field(imm, a + 1, Nf)
            for i in range(d):
                X = np.eye(d)[i]
                _, DJN = normal_derivative(imm, f.s, JNf, X)
                _, DN = normal_derivative(imm, f.s, Nf, X)
                lhs_all.append(DJN)
                rhs_all.append(J[a] @ DN)
    res["normal_connection_J"] = normalized_residual(lhs_all, rhs_all)

    verdict = class_residuals(imm.ambient, [f.phi], thresholds).verdict
    return IdentityResiduals({k: res[k] for k in IDENTITY_NAMES}, verdict, holomorphy_residual(imm, s))


@dataclass(frozen=True)
class LeeRestriction:
    residual: float
    theta_bar_on_TM: float
    theta_on_M: float
    induced_verdict: ClassVerdict
    per_point: list = field(default_factory=list, repr=False)


def lee_restriction_check(imm: Immersion, points: Iterable, thresholds: Thresholds = DEFAULT) -> LeeRestriction:
    """Compare the induced Lee forms with the restricted ambient ones.

    θ_1 = (2m-1)/(2n-1) θ̄_1 and θ_α = (m/n) θ̄_α (α = 2, 3) on TM.
    """
    m, n = imm.m, imm.ambient.n
    factors = ((2 * m - 1) / (2 * n - 1), m / n, m / n)
    points = [np.asarray(s, dtype=float) for s in points]
    rows = []
    for s in points:
        f = frame_at(imm, s)
        lee_bar = lee_forms(f.pg)
        restricted = lee_bar.theta @ f.T  # [α, k] = θ̄_α(T_k)
        pgM = point_geometry(imm.induced, s)
        lee_M = lee_forms(pgM)
        r = max(normalized_residual(lee_M.theta[a], factors[a] * restricted[a]) for a in range(3))
        scale = 1.0 + float(np.max(np.abs(f.g)))
        rows.append((r, float(np.max(np.abs(restricted))) / scale, float(np.max(np.abs(lee_M.theta))) / scale))
    verdict = class_residuals(imm.induced, points, thresholds).verdict
    return LeeRestriction(
        max(r[0] for r in rows),
        max(r[1] for r in rows),
        max(r[2] for r in rows),
        verdict,
        rows,
    )


class Umbilicity(str, Enum):
    TOTALLY_GEODESIC = "TotallyGeodesic"
    TOTALLY_UMBILICAL = "TotallyUmbilical"
    NEITHER = "Neither"
    INDETERMINATE = "Indeterminate"


@dataclass(frozen=True)
class UmbilicityReport:
    verdict: Umbilicity
    h_size: float
    h_max_abs: float
    umbilic_residual: float
    C_size: float
    theta_on_normal: tuple  # per α, max over points
    theta_on_tangent: tuple
    expected: Umbilicity | None
    consistent: bool
    per_point: list = field(default_factory=list, repr=False)


def umbilicity_classify(imm: Immersion, points: Iterable, thresholds: Thresholds = DEFAULT) -> UmbilicityReport:
    """Totally geodesic / umbilical verdict with the Lee-form cross-check.

    The cross-check predicts umbilical when all ambient Lee forms are
    nonzero on the normal bundle and geodesic when all vanish there.
    """
    h_size = h_abs = umb = C_size = 0.0
    perp = np.zeros(3)
    tang = np.zeros(3)
    rows = []
    for s in points:
        sd = shape_data(imm, s)
        f = sd.frame
        gscale = float(np.max(np.abs(f.g)))
        h_size = max(h_size, normalized_size(sd.h, gscale))
        h_abs = max(h_abs, float(np.max(np.abs(sd.h))))
        umb = max(umb, normalized_residual(sd.h, np.einsum("ij,a->aij", f.g_ind, sd.C)))
        C_size = max(C_size, float(np.max(np.abs(sd.C))))
        perp = np.maximum(perp, np.max(np.abs(sd.theta_bar @ f.Nbasis), axis=1) / (1.0 + gscale))
        tang = np.maximum(tang, np.max(np.abs(sd.theta_bar @ f.T), axis=1) / (1.0 + gscale))
        rows.append(
            (
                normalized_size(sd.h, gscale),
                normalized_residual(sd.h, np.einsum("ij,a->aij", f.g_ind, sd.C)),
                float(np.max(np.abs(sd.C))),
            )
        )
    if h_size < thresholds.hold:
        verdict = Umbilicity.TOTALLY_GEODESIC
    elif umb < thresholds.hold and C_size > thresholds.fail:
        verdict = Umbilicity.TOTALLY_UMBILICAL
    elif umb > thresholds.fail:
        verdict = Umbilicity.NEITHER
    else:
        verdict = Umbilicity.INDETERMINATE
    if all(thresholds.is_nonzero(v) for v in perp):
        expected = Umbilicity.TOTALLY_UMBILICAL
    elif all(thresholds.is_zero(v) for v in perp):
        expected = Umbilicity.TOTALLY_GEODESIC
    else:
        expected = None
    consistent = expected is None or expected == verdict
    return UmbilicityReport(
        verdict,
        h_size,
        h_abs,
        umb,
        C_size,
        tuple(float(v) for v in perp),
        tuple(float(v) for v in tang),
        expected,
        consistent,
        rows,
    )
