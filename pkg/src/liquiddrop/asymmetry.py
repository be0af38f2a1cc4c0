"""Boundary-oscillation asymmetry beta and potential asymmetry gamma.

For a set E with |E| = |B_1| and a center y,

    beta_y^2  = 1/2 int_{dE} |nu_E(x) - (x - y)/|x - y||^2 dH^{n-1}
    gamma_y   = int_{B_1(y)} (n-1)/|x - y| dx - int_E (n-1)/|x - y| dx,

and the divergence theorem gives beta_y^2 = P(E) - P(B_1) + gamma_y at every
interior center. The first integral in gamma_y equals P(B_1) = n|B_1|.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from .errors import DomainError
from .potentials import RadialDensity, _radial_convolution, newton_potential
from .shapes import RadialSet, StarSurface, unit_ball_volume, unit_sphere_area


@dataclass(frozen=True)
class CenteredAsymmetry:
    center: tuple
    beta_squared: float
    gamma: float
    identity_residual: float
    converged: bool
    functional: str = "gamma"

    def csv_header(self):
        if len(self.center) == 3:
            cols = ["cx", "cy", "cz"]
        else:
            cols = [f"c{i + 1}" for i in range(len(self.center))]
        return cols + ["beta2", "gamma", "residual", "converged"]

    def csv_row(self):
        return [repr(float(c)) for c in self.center] + [
            repr(float(self.beta_squared)), repr(float(self.gamma)),
            repr(float(self.identity_residual)), str(bool(self.converged)).lower()]


# --------------------------------------------------------------------------
# beta


def beta_at_center(shape, y):
    """beta_y^2 for a star shape: surface quadrature of 1 - nu.(x - y)/|x - y|."""
    if not isinstance(shape, StarSurface):
        raise TypeError("beta needs a star shape (boundary normal)")
    y = np.asarray(y, dtype=float)
    if not shape.contains(y)[0]:
        raise DomainError("center must lie strictly inside the shape")
    d = shape.boundary_points() - y
    d /= np.linalg.norm(d, axis=1)[:, None]
    integrand = 1.0 - np.sum(shape.normals() * d, axis=1)
    return float(np.sum(shape.area_elements() * integrand))


# --------------------------------------------------------------------------
# int_E 1/|x - y| dx


def _radial_inverse_distance(E, rho):
    rho = np.atleast_1d(np.asarray(rho, dtype=float))
    dens = RadialDensity.of_set(E.translated(-np.asarray(E.center)), relative_to_ball=False)
    if dens.is_zero:
        return np.zeros_like(rho)
    if E.n == 3:
        return newton_potential(dens, rho)
    return _radial_convolution(dens, dens.edges, E.n, E.n - 1.0, rho)


def _ray_lengths(shape, y, directions, bisections=6, max_iter=60, xtol=1e-15):
    """Distance from an interior point y to the boundary along each direction.

    A few bisection steps shrink the bracket, then the Illinois variant of
    regula falsi converges superlinearly on every ray at once.
    """
    c = np.asarray(shape.center)
    lo = np.zeros(directions.shape[0])
    hi = np.full_like(lo, 1.05 * float(np.max(shape.radius)) + np.linalg.norm(y - c) + 1e-12)

    def excess(t):
        p = y + t[:, None] * directions - c
        norm = np.linalg.norm(p, axis=1)
        return norm - shape.radius_along(p / norm[:, None])

    for _ in range(bisections):
        mid = 0.5 * (lo + hi)
        inside = excess(mid) < 0
        lo = np.where(inside, mid, lo)
        hi = np.where(inside, hi, mid)
    f_lo, f_hi = excess(lo), excess(hi)
    side = np.zeros(lo.shape, dtype=int)
    for _ in range(max_iter):
        t = (lo * f_hi - hi * f_lo) / (f_hi - f_lo)
        t = np.where(np.isfinite(t) & (t > lo) & (t < hi), t, 0.5 * (lo + hi))
        ft = excess(t)
        inside = ft < 0
        lo, f_lo = np.where(inside, t, lo), np.where(inside, ft, f_lo)
        hi, f_hi = np.where(inside, hi, t), np.where(inside, f_hi, ft)
        # Illinois: halve the stale endpoint's value when the same side moves twice
        f_hi = np.where(inside & (side == 1), 0.5 * f_hi, f_hi)
        f_lo = np.where(~inside & (side == -1), 0.5 * f_lo, f_lo)
        side = np.where(inside, 1, -1)
        best = np.minimum(np.abs(f_lo), np.abs(f_hi))
        if np.all(((hi - lo) <= xtol * hi) | (best <= xtol * hi)):
            break
    t = np.where(np.abs(f_lo) < np.abs(f_hi), lo, hi)
    for frac in (0.125, 0.375, 0.625, 0.875, 0.97):
        if np.any(excess(frac * t) >= 0):
            raise DomainError("shape is not star-shaped about the requested center")
    return t


def _centered_inverse_distance(shape, y):
    """Radial rays from the shape center, integrated in closed form along each ray."""
    g = shape.sphere
    om = g.directions
    d = np.asarray(shape.center) - np.asarray(y)
    b = om @ d
    D = float(d @ d)
    k = np.sqrt(np.maximum(D - b * b, 1e-24))
    R = shape.radius

    def anti(t):
        q = np.sqrt(t * t + 2 * b * t + D)
        return 0.5 * (t - 3 * b) * q + 0.5 * (3 * b * b - D) * np.arcsinh((t + b) / k)

    return float(np.sum(g.weights * (anti(R) - anti(np.zeros_like(R)))))


def inverse_distance_integral(shape, y):
    """int_E |x - y|^-1 dx.

    Star shapes with y inside use rays from y (J = 1/2 int rho_y(w)^2 dw),
    which converges spectrally; y outside falls back to rays from the shape
    center with the radial integral done in closed form.
    """
    y = np.asarray(y, dtype=float)
    if isinstance(shape, RadialSet):
        rho = np.linalg.norm(y - np.asarray(shape.center))
        return float(_radial_inverse_distance(shape, rho)[0])
    if not isinstance(shape, StarSurface):
        raise TypeError(f"unsupported shape {type(shape).__name__}")
    if shape.contains(y)[0]:
        g = shape.sphere
        t = _ray_lengths(shape, y, g.directions)
        return float(0.5 * np.sum(g.weights * t * t))
    return _centered_inverse_distance(shape, y)


def _dimension(shape):
    return shape.n if isinstance(shape, RadialSet) else 3


def gamma_at_center(shape, y):
    """gamma_y(E) = n|B_1| - (n - 1) int_E |x - y|^-1 dx."""
    n = _dimension(shape)
    return unit_sphere_area(n) - (n - 1) * inverse_distance_integral(shape, y)


def divergence_identity_residual(shape, y):
    """|beta_y^2 - (P(E) - P(B_1) + gamma_y)| for a unit-volume star shape."""
    beta2 = beta_at_center(shape, y)
    rhs = shape.perimeter() - unit_sphere_area(3) + gamma_at_center(shape, y)
    return abs(beta2 - rhs)


# --------------------------------------------------------------------------
# center search


def _barycenter(shape):
    if isinstance(shape, RadialSet):
        return np.asarray(shape.center)
    return shape.barycenter()


def minimize_center(shape, functional="gamma", half_width=1.5, xatol=1e-5, maxiter=4000):
    """Minimise beta_y^2 or gamma_y over the center y.

    A coarse grid over ``barycenter +- half_width`` seeds a Nelder-Mead
    refinement. Star shapes are searched on a 32 x 64 grid copy and the
    final values are recomputed on the shape's own grid.
    """
    if functional not in ("beta", "gamma"):
        raise ValueError("functional must be 'beta' or 'gamma'")
    n = _dimension(shape)
    vol, ref = shape.volume(), unit_ball_volume(n)
    if abs(vol - ref) > 1e-8 * ref:
        raise DomainError(f"center search needs |E| = |B_1|, got volume {vol!r}")
    if functional == "beta" and not isinstance(shape, StarSurface):
        raise DomainError("beta is only defined for star shapes")
    work = shape
    if isinstance(shape, StarSurface) and shape.grid[0] > 32:
        work = shape.with_grid((32, 64))

    if functional == "beta":
        def fun(y):
            try:
                return beta_at_center(work, y)
            except DomainError:
                return math.inf
    else:
        def fun(y):
            return gamma_at_center(work, y)

    bary = _barycenter(shape)
    k = 7 if n == 3 else (5 if n <= 5 else 3)
    axis = np.linspace(-half_width, half_width, k)
    mesh = np.stack(np.meshgrid(*([axis] * n), indexing="ij"), axis=-1).reshape(-1, n) + bary
    mesh = np.vstack([bary, mesh])
    if isinstance(shape, RadialSet) and functional == "gamma":
        rho = np.linalg.norm(mesh - np.asarray(shape.center), axis=1)
        uniq, inv = np.unique(np.round(rho, 12), return_inverse=True)
        vals = (unit_sphere_area(n) - (n - 1) * _radial_inverse_distance(shape, uniq))[inv]
    else:
        vals = np.array([fun(y) for y in mesh])
    start = mesh[int(np.argmin(vals))]
    simplex = np.vstack([start] + [start + 0.25 * half_width * e for e in np.eye(n)])
    res = optimize.minimize(fun, start, method="Nelder-Mead",
                            options=dict(xatol=xatol, fatol=1e-14, maxiter=maxiter, initial_simplex=simplex))
    y = res.x
    converged = bool(res.success)
    gamma = gamma_at_center(shape, y)
    if isinstance(shape, StarSurface) and shape.contains(y)[0]:
        beta2 = beta_at_center(shape, y)
        residual = abs(beta2 - (shape.perimeter() - unit_sphere_area(3) + gamma))
    else:
        beta2, residual = math.nan, math.nan
    return CenteredAsymmetry(tuple(float(v) for v in y), beta2, gamma, residual, converged, functional)


__all__ = [
    "CenteredAsymmetry", "beta_at_center", "gamma_at_center", "inverse_distance_integral",
    "divergence_identity_residual", "minimize_center",
]
