"""Fixed quadrature rules shared by the radial and spherical integrators."""

from functools import lru_cache

import numpy as np

# endpoint distances below this (relative to the interval length) are dropped
_TS_CUTOFF = 1e-16


@lru_cache(maxsize=None)
def tanh_sinh_rule(step=1.0 / 10.0):
    """Double-exponential rule on [0, 1].

    Returns ``(left, right, weights)`` where ``left`` and ``right`` are the
    node distances to the left and right endpoints. Keeping both distances
    lets callers place nodes next to a singular endpoint without cancellation.
    """
    t_max = 4.0
    t = np.arange(-t_max, t_max + 0.5 * step, step)
    u = 0.5 * np.pi * np.sinh(t)
    left = 1.0 / (1.0 + np.exp(-2.0 * u))
    right = 1.0 / (1.0 + np.exp(2.0 * u))
    w = 0.5 * step * 0.5 * np.pi * np.cosh(t) / np.cosh(u) ** 2
    keep = np.minimum(left, right) > _TS_CUTOFF
    return left[keep], right[keep], w[keep]


def tanh_sinh_nodes(a, b, step=1.0 / 10.0):
    """Nodes and weights of the tanh-sinh rule mapped onto ``[a, b]``.

    ``a`` and ``b`` may be arrays of matching shape; the node axis is appended
    last. Degenerate intervals get zero weights.
    """
    left, right, w = tanh_sinh_rule(step)
    a = np.asarray(a, dtype=float)[..., None]
    b = np.asarray(b, dtype=float)[..., None]
    length = b - a
    x = np.where(left <= 0.5, a + length * left, b - length * right)
    return x, length * w


@lru_cache(maxsize=None)
def gauss_legendre(order):
    x, w = np.polynomial.legendre.leggauss(order)
    return x, w


def gauss_nodes(a, b, order=16):
    """Gauss-Legendre nodes/weights on ``[a, b]`` (broadcasting like above)."""
    x, w = gauss_legendre(order)
    a = np.asarray(a, dtype=float)[..., None]
    b = np.asarray(b, dtype=float)[..., None]
    half = 0.5 * (b - a)
    return a + half * (x + 1.0), half * w


def sphere_polar_weights(n, order=64):
    """Gauss-Legendre nodes in the polar angle with the S^{n-1} density.

    The returned weights integrate against ``sin(theta)**(n-2)`` and are
    normalised to sum to one, so ``sum(w * g(theta))`` is the average of a
    zonal function over the unit sphere in R^n.
    """
    theta, w = gauss_nodes(0.0, np.pi, order)
    w = w * np.sin(theta) ** (n - 2)
    return theta, w / w.sum()
