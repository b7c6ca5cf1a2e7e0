"""Shared test oracles, kept independent of the library internals."""

import numpy as np
import pytest


def dense_penalty(t):
    """Assemble the roughness quadratic form explicitly from its definition.

    Q^T maps knot values to second divided differences, R is the Gram
    matrix of the piecewise linear second derivative; the penalty is
    Q R^{-1} Q^T.  Built densely with generic numpy solves only.
    """
    t = np.asarray(t, dtype=float)
    n = t.size
    h = np.diff(t)
    qt = np.zeros((n - 2, n))
    for j in range(n - 2):
        qt[j, j] = 1.0 / h[j]
        qt[j, j + 1] = -(1.0 / h[j] + 1.0 / h[j + 1])
        qt[j, j + 2] = 1.0 / h[j + 1]
    r = np.zeros((n - 2, n - 2))
    for j in range(n - 2):
        r[j, j] = (h[j] + h[j + 1]) / 3.0
        if j + 1 < n - 2:
            r[j, j + 1] = r[j + 1, j] = h[j + 1] / 6.0
    return qt.T @ np.linalg.solve(r, qt)


def dense_weighted_fit(t, y, lam):
    """Generic dense solution of the weighted normal equations."""
    k = dense_penalty(t)
    return np.linalg.solve(np.diag(lam) + k, np.asarray(lam) * np.asarray(y))


def jittered_design(n, rng):
    """Strictly increasing design points with comfortable spacing."""
    return (np.arange(n) + rng.uniform(0.15, 0.85, n)) / n


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
