"""Real spherical harmonics on S^2 and the tensor Gauss grid used for star shapes."""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import gammaln, lpmv


def real_sph_harm(l, m, theta, phi, derivatives=False):
    """Orthonormal real spherical harmonic Y_{l,m}(theta, phi).

    ``m > 0`` uses cos(m phi), ``m < 0`` uses sin(|m| phi). With
    ``derivatives=True`` returns ``(Y, dY/dtheta, dY/dphi)``; the theta
    derivative divides by sin(theta) and is only meant for points off the
    poles.
    """
    if abs(m) > l:
        raise ValueError(f"|m| must not exceed l (got l={l}, m={m})")
    am = abs(m)
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    x = np.cos(theta)
    norm = np.sqrt((2 * l + 1) / (4 * np.pi) * np.exp(gammaln(l - am + 1) - gammaln(l + am + 1)))
    p = lpmv(am, l, x)
    if m == 0:
        ang, dang = np.ones_like(phi), np.zeros_like(phi)
    elif m > 0:
        norm *= np.sqrt(2.0)
        ang, dang = np.cos(m * phi), -m * np.sin(m * phi)
    else:
        norm *= np.sqrt(2.0)
        ang, dang = np.sin(am * phi), am * np.cos(am * phi)
    y = norm * p * ang
    if not derivatives:
        return y
    p_prev = lpmv(am, l - 1, x) if l > 0 else np.zeros_like(x)
    dp = (l * x * p - (l + am) * p_prev) / np.sin(theta)
    return y, norm * dp * ang, norm * p * dang


def real_sph_harm_table(max_degree, theta, phi):
    """All ``Y_{l,m}`` with ``l <= max_degree`` at once, as a dict keyed by (l, m).

    Uses the three-term recurrence for fully normalised associated Legendre
    functions (same sign convention as ``real_sph_harm``), which is much
    cheaper than one ``lpmv`` call per mode on large point sets.
    """
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    x, s = np.cos(theta), np.sin(theta)
    out = {}
    pmm = np.full_like(x, 1.0 / np.sqrt(4 * np.pi))
    for m in range(max_degree + 1):
        if m > 0:
            pmm = -np.sqrt((2 * m + 1) / (2 * m)) * s * pmm
        cols = {m: pmm}
        if m + 1 <= max_degree:
            cols[m + 1] = np.sqrt(2 * m + 3) * x * pmm
        for l in range(m + 2, max_degree + 1):
            a = np.sqrt((4 * l * l - 1) / (l * l - m * m))
            b = np.sqrt(((l - 1) ** 2 - m * m) / (4 * (l - 1) ** 2 - 1))
            cols[l] = a * (x * cols[l - 1] - b * cols[l - 2])
        if m == 0:
            for l, p in cols.items():
                out[(l, 0)] = p
        else:
            c, sn = np.sqrt(2.0) * np.cos(m * phi), np.sqrt(2.0) * np.sin(m * phi)
            for l, p in cols.items():
                out[(l, m)] = p * c
                out[(l, -m)] = p * sn
    return out


def mode_list(max_degree):
    return [(l, m) for l in range(max_degree + 1) for m in range(-l, l + 1)]


@dataclass(frozen=True, eq=False)
class SphereGrid:
    """Gauss-Legendre in cos(theta) times uniform azimuth; arrays are flattened."""

    n_polar: int
    n_azimuth: int
    theta: np.ndarray
    phi: np.ndarray
    weights: np.ndarray

    @property
    def directions(self):
        st = np.sin(self.theta)
        return np.stack([st * np.cos(self.phi), st * np.sin(self.phi), np.cos(self.theta)], axis=-1)

    @property
    def size(self):
        return self.theta.size

    def basis(self, l, m):
        return _grid_basis(self.n_polar, self.n_azimuth, l, m)

    def gram(self, max_degree):
        ys = np.array([self.basis(l, m)[0] for l, m in mode_list(max_degree)])
        return (ys * self.weights) @ ys.T


@lru_cache(maxsize=32)
def sphere_grid(n_polar=64, n_azimuth=128):
    if n_polar < 2 or n_azimuth < 3:
        raise ValueError("sphere grid needs at least 2 polar and 3 azimuthal nodes")
    x, wx = np.polynomial.legendre.leggauss(n_polar)
    theta = np.arccos(x)
    phi = 2 * np.pi * np.arange(n_azimuth) / n_azimuth
    th, ph = np.meshgrid(theta, phi, indexing="ij")
    w = np.outer(wx, np.full(n_azimuth, 2 * np.pi / n_azimuth))
    for arr in (th, ph, w):
        arr.setflags(write=False)
    return SphereGrid(n_polar, n_azimuth, th.ravel(), ph.ravel(), w.ravel())


@lru_cache(maxsize=512)
def _grid_basis(n_polar, n_azimuth, l, m):
    g = sphere_grid(n_polar, n_azimuth)
    out = real_sph_harm(l, m, g.theta, g.phi, derivatives=True)
    for arr in out:
        arr.setflags(write=False)
    return out
