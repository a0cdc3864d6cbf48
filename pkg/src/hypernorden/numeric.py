"""Dual-number forward-mode differentiation and small dense linear algebra.

Everything here works on tiny dimensions (at most 16 coordinates), so the
dual numbers carry dense gradient vectors and Hessians, and the linear
algebra is plain Gaussian elimination and cyclic Jacobi rotations.
"""

from __future__ import annotations

import math
from typing import Callable, Sequence

import numpy as np

from .errors import DomainError, EvaluationDomainError, SingularMatrix

PIVOT_TOL = 1e-12
SYMMETRY_TOL = 1e-10


def _check(value: float, what: str) -> float:
    if not math.isfinite(value):
        raise EvaluationDomainError(f"non-finite value from {what}")
    return value


class Dual1:
    """First-order dual number ``value + grad·ε`` over ``len(grad)`` seeds."""

    __slots__ = ("value", "grad")
    __array_priority__ = 1000

    def __init__(self, value: float, grad: np.ndarray):
        self.value = float(value)
        self.grad = grad

    @classmethod
    def variable(cls, value: float, index: int, size: int) -> "Dual1":
        g = np.zeros(size)
        g[index] = 1.0
        return cls(value, g)

    def _lift(self, other) -> "Dual1":
        if isinstance(other, Dual1):
            return other
        if isinstance(other, Dual2):
            raise TypeError("cannot mix Dual1 and Dual2 scalars")
        return Dual1(other, np.zeros_like(self.grad))

    def __add__(self, other):
        if isinstance(other, (int, float)):
            return Dual1(self.value + other, self.grad)
        o = self._lift(other)
        return Dual1(self.value + o.value, self.grad + o.grad)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, (int, float)):
            return Dual1(self.value - other, self.grad)
        o = self._lift(other)
        return Dual1(self.value - o.value, self.grad - o.grad)

    def __rsub__(self, other):
        return Dual1(other - self.value, -self.grad)

    def __neg__(self):
        return Dual1(-self.value, -self.grad)

    def __pos__(self):
        return self

    def __mul__(self, other):
        if isinstance(other, (int, float)):
            return Dual1(self.value * other, self.grad * other)
        o = self._lift(other)
        return Dual1(self.value * o.value, self.value * o.grad + o.value * self.grad)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, (int, float)):
            if other == 0:
                raise EvaluationDomainError("division by zero")
            return Dual1(self.value / other, self.grad / other)
        return self * self._lift(other).reciprocal()

    def __rtruediv__(self, other):
        return self.reciprocal() * other

    def __pow__(self, k):
        if not isinstance(k, int):
            raise TypeError("dual numbers support integer exponents only")
        if k == 0:
            return Dual1(1.0, np.zeros_like(self.grad))
        if k < 0:
            return self.reciprocal() ** (-k)
        return self._apply(self.value**k, k * self.value ** (k - 1))

    def reciprocal(self) -> "Dual1":
        if self.value == 0.0:
            raise EvaluationDomainError("division by zero")
        r = 1.0 / self.value
        return self._apply(r, -r * r)

    def _apply(self, f: float, df: float) -> "Dual1":
        return Dual1(_check(f, "dual op"), df * self.grad)

    def exp(self):
        e = math.exp(self.value)
        return self._apply(e, e)

    def log(self):
        if self.value <= 0.0:
            raise EvaluationDomainError("log of non-positive value")
        return self._apply(math.log(self.value), 1.0 / self.value)

    def sqrt(self):
        if self.value <= 0.0:
            raise EvaluationDomainError("sqrt not differentiable at non-positive value")
        s = math.sqrt(self.value)
        return self._apply(s, 0.5 / s)

    def sin(self):
        return self._apply(math.sin(self.value), math.cos(self.value))

    def cos(self):
        return self._apply(math.cos(self.value), -math.sin(self.value))

    def sinh(self):
        return self._apply(math.sinh(self.value), math.cosh(self.value))

    def cosh(self):
        return self._apply(math.cosh(self.value), math.sinh(self.value))

    def __repr__(self):
        return f"Dual1({self.value!r}, {self.grad!r})"


class Dual2:
    """Second-order dual number carrying value, gradient and Hessian.

    Every update adds symmetric terms only, so ``hess`` stays exactly
    symmetric in floating point.
    """

    __slots__ = ("value", "grad", "hess")
    __array_priority__ = 1000

    def __init__(self, value: float, grad: np.ndarray, hess: np.ndarray):
        self.value = float(value)
        self.grad = grad
        self.hess = hess

    @classmethod
    def variable(cls, value: float, index: int, size: int) -> "Dual2":
        g = np.zeros(size)
        g[index] = 1.0
        return cls(value, g, np.zeros((size, size)))

    def _lift(self, other) -> "Dual2":
        if isinstance(other, Dual2):
            return other
        if isinstance(other, Dual1):
            raise TypeError("cannot mix Dual1 and Dual2 scalars")
        n = len(self.grad)
        return Dual2(other, np.zeros(n), np.zeros((n, n)))

    def __add__(self, other):
        if isinstance(other, (int, float)):
            return Dual2(self.value + other, self.grad, self.hess)
        o = self._lift(other)
        return Dual2(self.value + o.value, self.grad + o.grad, self.hess + o.hess)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, (int, float)):
            return Dual2(self.value - other, self.grad, self.hess)
        o = self._lift(other)
        return Dual2(self.value - o.value, self.grad - o.grad, self.hess - o.hess)

    def __rsub__(self, other):
        return Dual2(other - self.value, -self.grad, -self.hess)

    def __neg__(self):
        return Dual2(-self.value, -self.grad, -self.hess)

    def __pos__(self):
        return self

    def __mul__(self, other):
        if isinstance(other, (int, float)):
            return Dual2(self.value * other, self.grad * other, self.hess * other)
        o = self._lift(other)
        cross = np.outer(self.grad, o.grad)
        return Dual2(
            self.value * o.value,
            self.value * o.grad + o.value * self.grad,
            self.value * o.hess + o.value * self.hess + (cross + cross.T),
        )

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, (int, float)):
            if other == 0:
                raise EvaluationDomainError("division by zero")
            return Dual2(self.value / other, self.grad / other, self.hess / other)
        return self * self._lift(other).reciprocal()

    def __rtruediv__(self, other):
        return self.reciprocal() * other

    def __pow__(self, k):
        if not isinstance(k, int):
            raise TypeError("dual numbers support integer exponents only")
        n = len(self.grad)
        if k == 0:
            return Dual2(1.0, np.zeros(n), np.zeros((n, n)))
        if k < 0:
            return self.reciprocal() ** (-k)
        v = self.value
        d2 = k * (k - 1) * v ** (k - 2) if k >= 2 else 0.0
        return self._apply(v**k, k * v ** (k - 1), d2)

    def reciprocal(self) -> "Dual2":
        if self.value == 0.0:
            raise EvaluationDomainError("division by zero")
        r = 1.0 / self.value
        return self._apply(r, -r * r, 2.0 * r * r * r)

    def _apply(self, f: float, df: float, d2f: float) -> "Dual2":
        return Dual2(
            _check(f, "dual op"),
            df * self.grad,
            df * self.hess + d2f * np.outer(self.grad, self.grad),
        )

    def exp(self):
        e = math.exp(self.value)
        return self._apply(e, e, e)

    def log(self):
        if self.value <= 0.0:
            raise EvaluationDomainError("log of non-positive value")
        r = 1.0 / self.value
        return self._apply(math.log(self.value), r, -r * r)

    def sqrt(self):
        if self.value <= 0.0:
            raise EvaluationDomainError("sqrt not differentiable at non-positive value")
        s = math.sqrt(self.value)
        return self._apply(s, 0.5 / s, -0.25 / (s * self.value))

    def sin(self):
        s, c = math.sin(self.value), math.cos(self.value)
        return self._apply(s, c, -s)

    def cos(self):
        s, c = math.sin(self.value), math.cos(self.value)
        return self._apply(c, -s, -c)

    def sinh(self):
        s, c = math.sinh(self.value), math.cosh(self.value)
        return self._apply(s, c, s)

    def cosh(self):
        s, c = math.sinh(self.value), math.cosh(self.value)
        return self._apply(c, s, c)

    def __repr__(self):
        return f"Dual2({self.value!r}, {self.grad!r}, {self.hess!r})"


# Scalar functions generic over float / Dual1 / Dual2.


def _real(name: str, fn: Callable[[float], float], ok: Callable[[float], bool]):
    def apply(x):
        try:
            if isinstance(x, (Dual1, Dual2)):
                return getattr(x, name)()
            x = float(x)
            if not ok(x):
                raise EvaluationDomainError(f"{name} of {x!r} is outside its domain")
            return _check(fn(x), name)
        except OverflowError:
            raise EvaluationDomainError(f"{name} overflow") from None

    apply.__name__ = name
    return apply


def _any(x):
    return True


exp = _real("exp", math.exp, _any)
log = _real("log", math.log, lambda x: x > 0.0)
sqrt = _real("sqrt", math.sqrt, lambda x: x >= 0.0)
sin = _real("sin", math.sin, _any)
cos = _real("cos", math.cos, _any)
sinh = _real("sinh", math.sinh, _any)
cosh = _real("cosh", math.cosh, _any)

FUNCTIONS = {"exp": exp, "log": log, "sin": sin, "cos": cos, "sinh": sinh, "cosh": cosh, "sqrt": sqrt}


def value_of(s) -> float:
    return s.value if isinstance(s, (Dual1, Dual2)) else float(s)


def grad_of(s, size: int) -> np.ndarray:
    if isinstance(s, (Dual1, Dual2)):
        return s.grad
    return np.zeros(size)


def jacobian(f: Callable, x: Sequence[float]) -> tuple[np.ndarray, np.ndarray]:
    """Value and exact Jacobian of ``f`` at ``x``.

    ``f`` takes a list of scalars and returns a scalar or a (possibly
    nested) sequence of scalars; the Jacobian gets a trailing axis of
    length ``len(x)``.
    """
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise EvaluationDomainError("non-finite evaluation point")
    d = len(x)
    seeds = [Dual1.variable(xi, i, d) for i, xi in enumerate(x)]
    out = np.asarray(f(seeds), dtype=object)
    vals = np.empty(out.shape)
    jac = np.empty(out.shape + (d,))
    for idx, s in np.ndenumerate(out):
        vals[idx] = value_of(s)
        jac[idx] = grad_of(s, d)
    return vals, jac


def hessian(f: Callable, x: Sequence[float]):
    """Value, gradient and Hessian of a scalar (or array) valued ``f``."""
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise EvaluationDomainError("non-finite evaluation point")
    d = len(x)
    seeds = [Dual2.variable(xi, i, d) for i, xi in enumerate(x)]
    out = np.asarray(f(seeds), dtype=object)
    vals = np.empty(out.shape)
    grads = np.zeros(out.shape + (d,))
    hess = np.zeros(out.shape + (d, d))
    for idx, s in np.ndenumerate(out):
        if isinstance(s, Dual2):
            vals[idx], grads[idx], hess[idx] = s.value, s.grad, s.hess
        else:
            vals[idx] = float(s)
    if out.shape == ():
        return float(vals), grads, hess
    return vals, grads, hess


def lift_jet(values: np.ndarray, derivs: np.ndarray, inputs: Sequence):
    """Compose a precomputed jet with the caller's scalars by the chain rule.

    ``values`` has shape S and ``derivs`` shape S + (d,), the derivative of
    the values with respect to the d inputs. When the inputs are ``Dual1``
    the result is an object array of ``Dual1`` whose gradients are
    ``derivs @ (input grads)``; for plain floats it is just ``values``.
    """
    if not any(isinstance(s, Dual1) for s in inputs):
        if any(isinstance(s, Dual2) for s in inputs):
            raise TypeError("jet lifting supports first-order duals only")
        return values
    size = next(len(s.grad) for s in inputs if isinstance(s, Dual1))
    seed = np.array([grad_of(s, size) for s in inputs])
    grads = derivs @ seed
    out = np.empty(values.shape, dtype=object)
    for idx in np.ndindex(values.shape):
        out[idx] = Dual1(values[idx], grads[idx])
    return out


# Linear algebra.


def solve(A, b) -> np.ndarray:
    """Solve ``A x = b`` by Gaussian elimination with row pivoting.

    ``b`` may be a vector or a matrix of right-hand sides.
    """
    A = np.array(A, dtype=float)
    b = np.array(b, dtype=float)
    n = A.shape[0]
    if A.ndim != 2 or A.shape[1] != n:
        raise DomainError(f"solve needs a square matrix, got shape {A.shape}")
    if b.shape[0] != n:
        raise DomainError("right-hand side has the wrong length")
    scale = np.max(np.abs(A)) if A.size else 0.0
    if scale == 0.0:
        raise SingularMatrix("zero matrix")
    vec = b.ndim == 1
    B = b.reshape(n, -1).copy()
    for k in range(n):
        p = k + int(np.argmax(np.abs(A[k:, k])))
        if abs(A[p, k]) < PIVOT_TOL * scale:
            raise SingularMatrix(f"pivot {abs(A[p, k]):.3e} below threshold at column {k}")
        if p != k:
            A[[k, p]] = A[[p, k]]
            B[[k, p]] = B[[p, k]]
        f = A[k + 1 :, k] / A[k, k]
        A[k + 1 :, k:] -= np.outer(f, A[k, k:])
        B[k + 1 :] -= np.outer(f, B[k])
    X = np.empty_like(B)
    for k in range(n - 1, -1, -1):
        X[k] = (B[k] - A[k, k + 1 :] @ X[k + 1 :]) / A[k, k]
    return X[:, 0] if vec else X


def inv(A) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    return solve(A, np.eye(A.shape[0]))


def jacobi_eigenvalues(A, tol: float = 1e-15, max_sweeps: int = 100) -> np.ndarray:
    """Eigenvalues of a symmetric matrix by cyclic Jacobi rotations."""
    A = np.array(A, dtype=float)
    n = A.shape[0]
    norm = np.linalg.norm(A)
    if norm == 0.0:
        return np.zeros(n)
    for _ in range(max_sweeps):
        off = np.sqrt(np.sum(np.triu(A, 1) ** 2))
        if off <= tol * norm:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if abs(apq) <= tol * norm * 1e-3:
                    continue
                theta = (A[q, q] - A[p, p]) / (2.0 * apq)
                if abs(theta) > 1e150:
                    t = 0.5 / theta
                else:
                    t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                col_p, col_q = A[:, p].copy(), A[:, q].copy()
                A[:, p] = c * col_p - s * col_q
                A[:, q] = s * col_p + c * col_q
                row_p, row_q = A[p, :].copy(), A[q, :].copy()
                A[p, :] = c * row_p - s * row_q
                A[q, :] = s * row_p + c * row_q
    return np.diag(A).copy()


def inertia(A) -> tuple[int, int, int]:
    """Signature counts ``(n_plus, n_minus, n_zero)`` of a symmetric matrix."""
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DomainError("inertia needs a square matrix")
    norm = np.max(np.abs(A)) if A.size else 0.0
    if np.max(np.abs(A - A.T), initial=0.0) > SYMMETRY_TOL * max(1.0, norm):
        raise DomainError("inertia needs a symmetric matrix")
    lam = jacobi_eigenvalues(0.5 * (A + A.T))
    zero = 1e-10 * np.linalg.norm(A, 2) if norm > 0 else 0.0
    return (
        int(np.sum(lam > zero)),
        int(np.sum(lam < -zero)),
        int(np.sum(np.abs(lam) <= zero)),
    )


def nullspace(A, tol: float = PIVOT_TOL) -> np.ndarray:
    """Basis of ``{v : A v = 0}`` via row reduction with column pivoting.

    Returns an ``ncols x (ncols - rank)`` matrix. The basis is the raw
    elimination complement; no orthonormalization is applied.
    """
    A = np.array(A, dtype=float)
    rows, cols = A.shape
    scale = np.max(np.abs(A)) if A.size else 0.0
    perm = list(range(cols))
    rank = 0
    for r in range(min(rows, cols)):
        sub = np.abs(A[r:, r:])
        if sub.size == 0:
            break
        i, j = np.unravel_index(int(np.argmax(sub)), sub.shape)
        if sub[i, j] <= tol * max(scale, 1e-300):
            break
        i += r
        j += r
        A[[r, i]] = A[[i, r]]
        A[:, [r, j]] = A[:, [j, r]]
        perm[r], perm[j] = perm[j], perm[r]
        A[r] /= A[r, r]
        for k in range(rows):
            if k != r:
                A[k] -= A[k, r] * A[r]
        rank += 1
    free = cols - rank
    basis = np.zeros((cols, free))
    # reduced form [I F; 0 0] in permuted columns -> null vectors [-F; I]
    basis[:rank, :] = -A[:rank, rank:]
    basis[rank:, :] = np.eye(free)
    out = np.empty_like(basis)
    out[perm, :] = basis
    return out
