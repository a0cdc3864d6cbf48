import numpy as np
import pytest

from hypernorden import catalog
from hypernorden.manifold import ChartManifold
from hypernorden.policy import halton_points

# Conformal factors used across the suites; all nonconstant and smooth on the sample box.
W_CORPUS = [
    "x1",
    "x1 + sin(x2)",
    "0.3 * x3 * x5 - x8",
    "log(2 + cos(x4 + x6))",
    "exp(-x2 * x2) / 2",
    "sinh(x7) - x1 * x2 / 4",
]


def pulled_back(M, forward, inverse):
    """M in new coordinates related by the pointwise linear maps ``forward(x)`` (dψ) and its inverse."""

    def metric_fn(x):
        P = np.asarray(forward(x), dtype=object)
        return P.T.dot(np.asarray(M.metric_fn(x), dtype=object)).dot(P)

    def make_J(f):
        def J(x):
            P = np.asarray(forward(x), dtype=object)
            Q = np.asarray(inverse(x), dtype=object)
            return Q.dot(np.asarray(f(x), dtype=object)).dot(P)

        return J

    return ChartManifold(M.dim, metric_fn, tuple(make_J(f) for f in M.J_fns), f"pullback of {M.label}")


def shear(dim, k=0, j=1, c=0.6):
    """dψ for ψ(x) = x + (c/2) x_j^2 e_k, and its inverse."""

    def forward(x):
        P = np.eye(dim, dtype=object)
        P[k, j] = c * x[j]
        return P

    def inverse(x):
        P = np.eye(dim, dtype=object)
        P[k, j] = -c * x[j]
        return P

    return forward, inverse


@pytest.fixture(scope="session")
def flat2():
    return catalog.flat_K(2)


@pytest.fixture(scope="session")
def points8():
    return halton_points(8, 8)
