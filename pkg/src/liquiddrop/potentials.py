"""Riesz potentials of radial data, the Newton-kernel nonlocal energy and the
half Laplacian.

Everything radial is reduced to one-dimensional integrals over the radius of
the source point, using the spherical average of the Riesz kernel

    K_alpha(r, s) = avg_{|w| = 1} |r e - s w|^(alpha - n)
                  = R^(alpha - n) 2F1(a, a - n/2 + 1; n/2; (rho/R)^2),

with ``R = max(r, s)``, ``rho = min(r, s)`` and ``a = (n - alpha) / 2``.
"""

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate
from scipy.interpolate import CubicSpline
from scipy.special import gammaln, hyp2f1

from ._quad import gauss_nodes, tanh_sinh_nodes
from .errors import ConfigError, DomainError, NumericalFailure
from .shapes import RadialSet, StarSurface, StarUnion, unit_ball_volume, unit_sphere_area

ALPHA_MARGIN = 1e-6
DEFAULT_R_MAX = 6.0
DEFAULT_GRID_POINTS = 600


# --------------------------------------------------------------------------
# constants and kernels


def _check_alpha(n, alpha):
    if not 0 < alpha <= n - ALPHA_MARGIN:
        raise DomainError(f"Riesz order must lie in (0, n) with n={n}, got {alpha}")


def sigma_constant(n, alpha):
    """Normalisation of I_alpha: 1/sigma = pi^(n/2) 2^alpha Gamma(alpha/2) / Gamma((n-alpha)/2)."""
    _check_alpha(n, alpha)
    log_inv = 0.5 * n * math.log(math.pi) + alpha * math.log(2.0) + gammaln(0.5 * alpha) - gammaln(0.5 * (n - alpha))
    return math.exp(-log_inv)


def half_laplacian_constant(n):
    """Constant of the singular-integral half Laplacian in R^n.

    Equal to the half-space Poisson kernel constant Gamma((n+1)/2) / pi^((n+1)/2);
    the tests confirm it through (-Delta)^(1/2) I_1 f = f.
    """
    return math.exp(gammaln(0.5 * (n + 1)) - 0.5 * (n + 1) * math.log(math.pi))


def shell_kernel(n, alpha, r, s):
    """Closed-form spherical average of |x - y|^(alpha - n), |x| = r, |y| = s.

    ``alpha`` may be any real number for which the average exists (negative
    values give hypersingular kernels away from r = s).
    """
    r = np.asarray(r, dtype=float)
    s = np.asarray(s, dtype=float)
    big = np.maximum(r, s)
    small = np.minimum(r, s)
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(big > 0, (small / np.where(big > 0, big, 1.0)) ** 2, 0.0)
    # hyp2f1 overflows within ~1e-14 of z = 1 in the logarithmic case
    z = np.minimum(z, 1.0 - 1e-13)
    a = 0.5 * (n - alpha)
    b = a - 0.5 * n + 1.0
    if b == 0.0:
        h = 1.0
    else:
        h = hyp2f1(a, b, 0.5 * n, z)
    with np.errstate(divide="ignore"):
        return np.where(big > 0, big ** (alpha - n) * h, np.inf)


def sphere_average_kernel(n, alpha, r, s):
    """Spherical average of |x - y|^(alpha - n) by adaptive polar quadrature.

    Independent of :func:`shell_kernel`; used as its oracle and for scalar
    queries. Raises :class:`DomainError` for the nonintegrable case r = s,
    alpha <= 1.
    """
    if r < 0 or s < 0:
        raise DomainError("radii must be nonnegative")
    if r == 0 and s == 0:
        raise DomainError("kernel undefined at r = s = 0")
    if r == s and alpha <= 1:
        raise DomainError("nonintegrable singularity at r = s for alpha <= 1")
    if r == 0 or s == 0:
        return max(r, s) ** (alpha - n)
    e = 0.5 * (alpha - n)
    wnorm = math.sqrt(math.pi) * math.exp(gammaln(0.5 * (n - 1)) - gammaln(0.5 * n))

    def integrand(th):
        d2 = (r - s) ** 2 + 4.0 * r * s * math.sin(0.5 * th) ** 2
        return d2**e * math.sin(th) ** (n - 2)

    width = max(abs(r - s) / max(r, s), 1e-12)
    pts = []
    while width < 1.0:
        pts.append(width)
        width *= 4.0
    val, _ = integrate.quad(integrand, 0.0, math.pi, points=pts, limit=400, epsabs=0.0, epsrel=1e-13)
    return val / wnorm


def newton_shell_potential(n, a, b, r):
    """Closed form of the integral of |x - y|^(2 - n) over a < |x| < b, at |y| = r."""
    r = np.asarray(r, dtype=float)
    w = unit_ball_volume(n)
    lo = np.clip(r, a, b)
    # inner part is exactly zero for r <= a; r^(2-n) would amplify pow round-off
    with np.errstate(divide="ignore", invalid="ignore"):
        inner = np.where(r > a, w * r ** (2.0 - n) * (lo**n - np.float64(a) ** n), 0.0)
    outer = 0.5 * n * w * (b * b - lo * lo)
    return inner + outer


def ball_newton_potential(n, r):
    """Newton potential of the unit ball, integral of |x - y|^(2-n) over B_1 at |y| = r."""
    return newton_shell_potential(n, 0.0, 1.0, r)


# --------------------------------------------------------------------------
# piecewise-constant radial densities


@dataclass(frozen=True, eq=False)
class RadialDensity:
    """Radial function equal to ``values[k]`` on ``edges[k] < |x| < edges[k+1]``, zero beyond."""

    n: int
    edges: np.ndarray
    values: np.ndarray

    @classmethod
    def of_set(cls, E, relative_to_ball=True):
        """``chi_{B_1} - chi_E`` (default) or ``chi_E`` for a centered radial set."""
        if not isinstance(E, RadialSet):
            raise TypeError("expected a RadialSet")
        if not E.is_centered:
            raise DomainError("radial potentials need a set centered at the origin")
        pts = {0.0, *E.radii.tolist()}
        if relative_to_ball:
            pts.add(1.0)
        edges = np.array(sorted(pts))
        if edges.size == 1:
            return cls(E.n, np.array([0.0, 1.0]), np.zeros(1))
        mid = 0.5 * (edges[1:] + edges[:-1])
        vals = E.indicator(mid).astype(float)
        if relative_to_ball:
            vals = (mid < 1.0) - vals
        return cls(E.n, edges, vals)

    @property
    def support(self):
        return float(self.edges[-1])

    @property
    def is_zero(self):
        return not np.any(self.values)

    @property
    def jumps(self):
        v = np.concatenate([[np.nan], self.values, [0.0]])
        return self.edges[v[1:] != v[:-1]][self.edges[v[1:] != v[:-1]] > 0]

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        idx = np.clip(np.searchsorted(self.edges, s, side="right") - 1, 0, self.values.size - 1)
        return np.where((s >= 0) & (s < self.edges[-1]), self.values[idx], 0.0)

    def mass(self):
        w = unit_ball_volume(self.n)
        return float(np.sum(self.values * w * np.diff(self.edges**self.n)))


def newton_potential(density, r):
    """Integral of density(x) |x - y|^(2 - n) dx at |y| = r (closed form)."""
    r = np.asarray(r, dtype=float)
    out = np.zeros_like(r)
    for a, b, v in zip(density.edges[:-1], density.edges[1:], density.values):
        if v:
            out = out + v * newton_shell_potential(density.n, a, b, r)
    return out


def newton_pairing(d1, d2):
    """Exact double integral of d1(x) d2(y) |x - y|^(2 - n) for radial densities.

    On each piece the integrand is a polynomial of degree <= n + 1 in the
    radius, so an 8-point Gauss rule per piece is exact up to round-off.
    """
    if d1.n != d2.n:
        raise ValueError("dimension mismatch")
    n = d1.n
    area = unit_sphere_area(n)
    cuts = np.union1d(d1.edges, d2.edges)
    total = 0.0
    for a, b, v in zip(d1.edges[:-1], d1.edges[1:], d1.values):
        if not v:
            continue
        inner = cuts[(cuts > a) & (cuts < b)]
        pts = np.concatenate([[a], inner, [b]])
        s, w = gauss_nodes(pts[:-1], pts[1:], order=8)
        total += v * float(np.sum(w * area * s ** (n - 1) * newton_potential(d2, s)))
    return total


# --------------------------------------------------------------------------
# general radial convolution


def _radial_convolution(fn, edges, n, alpha, r, tail_power=None, step=1.0 / 8.0):
    """Integral of fn(|y|) |x - y|^(alpha - n) dy at |x| = r, vectorised over r.

    ``fn`` is supported on [0, edges[-1]] unless ``tail_power`` is given, in
    which case ``fn`` is defined on [0, inf) and decays like s^(-tail_power)
    (must exceed ``alpha``). Pieces are split at every edge and at ``r``.
    """
    r = np.atleast_1d(np.asarray(r, dtype=float))
    edges = np.asarray(edges, dtype=float)
    area = unit_sphere_area(n)
    top = edges[-1]
    if tail_power is None:
        split = np.clip(r, 0.0, top)
    else:
        split = r
    pts = np.sort(np.concatenate([np.broadcast_to(edges, (r.size, edges.size)), split[:, None]], axis=1), axis=1)
    s, w = tanh_sinh_nodes(pts[:, :-1], pts[:, 1:], step)
    rr = r[:, None, None]
    with np.errstate(invalid="ignore"):
        terms = w * fn(s) * shell_kernel(n, alpha, rr, s) * area * s ** (n - 1)
    total = np.sum(np.where(w > 0, terms, 0.0), axis=(1, 2))
    if tail_power is not None:
        if tail_power <= alpha:
            raise DomainError("tail decays too slowly for this Riesz order")
        start = np.maximum(top, r)[:, None]
        u, wu = tanh_sinh_nodes(np.zeros(r.size), np.ones(r.size), step)
        s_t = start / u
        jac = start / u**2
        total = total + np.sum(wu * jac * fn(s_t) * shell_kernel(n, alpha, r[:, None], s_t)
                               * area * s_t ** (n - 1), axis=1)
    return total


def riesz_of_radial(fn, edges, n, alpha, r, tail_power=None):
    """(I_alpha g)(r) for a radial function ``g = fn`` that is smooth between ``edges``.

    Without ``tail_power`` the function must vanish beyond ``edges[-1]``.
    """
    _check_alpha(n, alpha)
    r = np.asarray(r, dtype=float)
    out = _radial_convolution(fn, edges, n, alpha, r.ravel(), tail_power)
    return sigma_constant(n, alpha) * out.reshape(r.shape)


def riesz_values(E, alpha, r, relative_to_ball=True):
    """Pointwise (I_alpha f)(r) for f = chi_{B_1} - chi_E (or chi_E)."""
    n = E.n
    _check_alpha(n, alpha)
    dens = RadialDensity.of_set(E, relative_to_ball)
    r = np.asarray(r, dtype=float)
    if dens.is_zero:
        return np.zeros_like(r)
    sig = sigma_constant(n, alpha)
    if alpha == 2:
        return sig * newton_potential(dens, r)
    out = sig * _radial_convolution(dens, dens.edges, n, alpha, r.ravel())
    return out.reshape(r.shape)


def newton_v(E, r):
    """v(y) = integral of (chi_{B_1} - chi_E)(x) |x - y|^(2 - n) dx at |y| = r."""
    return newton_potential(RadialDensity.of_set(E), r)


def ball_average(fn, edges, n, radius=1.0):
    """Average of the radial function ``fn`` over the ball B_radius in R^n."""
    edges = np.asarray(edges, dtype=float)
    inner = edges[(edges > 0) & (edges < radius)]
    pts = np.concatenate([[0.0], inner, [radius]])
    s, w = tanh_sinh_nodes(pts[:-1], pts[1:], 1.0 / 6.0)
    vals = fn(s.ravel()).reshape(s.shape)
    return float(n * np.sum(w * s ** (n - 1) * vals) / radius**n)


def riesz_ball_average(E, alpha, radius=1.0):
    """Average of I_alpha f_E over B_radius."""
    dens = RadialDensity.of_set(E)
    return ball_average(lambda s: riesz_values(E, alpha, s), dens.edges, E.n, radius)


# --------------------------------------------------------------------------
# sampled radial profiles


def radial_grid(breaks=(), r_max=DEFAULT_R_MAX, n_points=DEFAULT_GRID_POINTS):
    """Grid on [0, r_max] containing every break radius as a node.

    Each piece between consecutive breaks is uniform, with a node count
    proportional to its length, so doubling ``n_points`` halves every spacing.
    """
    knots = np.unique(np.concatenate([[0.0, r_max], [b for b in breaks if 0 < b < r_max]]))
    lengths = np.diff(knots)
    counts = np.maximum(4, np.ceil(n_points * lengths / r_max).astype(int))
    pieces = [np.linspace(a, b, c + 1)[:-1] for a, b, c in zip(knots[:-1], knots[1:], counts)]
    return np.concatenate(pieces + [[r_max]])


@dataclass(frozen=True, eq=False)
class RadialProfile:
    """Samples of a radial function on ``radii``.

    ``breaks`` are radii where the function may fail to be smooth; they must
    be grid nodes and the interpolant is a separate cubic spline on each
    smooth piece. Beyond ``r_max`` the function continues as
    ``values[-1] * (r_max / r)^tail_power`` (``inf`` means identically zero).
    """

    n: int
    alpha: float
    radii: np.ndarray
    values: np.ndarray
    breaks: tuple = ()
    tail_power: float = math.inf
    _splines: list = field(default_factory=list, repr=False)

    def __post_init__(self):
        radii = np.asarray(self.radii, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if radii.ndim != 1 or radii.shape != values.shape or radii.size < 4:
            raise DomainError("radii and values must be matching 1-D arrays with >= 4 samples")
        if radii[0] < 0 or np.any(np.diff(radii) <= 0):
            raise DomainError("radii must be nonnegative and strictly increasing")
        if radii[-1] < 3.0:
            raise DomainError("profiles must extend to r_max >= 3")
        if not np.all(np.isfinite(values)):
            raise DomainError("profile values must be finite")
        object.__setattr__(self, "radii", radii)
        object.__setattr__(self, "values", values)
        brk = tuple(sorted(float(b) for b in self.breaks if radii[0] < b < radii[-1]))
        object.__setattr__(self, "breaks", brk)
        cuts = [0] + [int(np.argmin(np.abs(radii - b))) for b in brk] + [radii.size - 1]
        for i0, i1 in zip(cuts[:-1], cuts[1:]):
            if i1 - i0 < 3:
                raise DomainError("too few samples between break radii")
            x, y = radii[i0:i1 + 1], values[i0:i1 + 1]
            bc = ((1, 0.0), "not-a-knot") if i0 == 0 and x[0] == 0.0 else "not-a-knot"
            self._splines.append(CubicSpline(x, y, bc_type=bc))

    @property
    def r_max(self):
        return float(self.radii[-1])

    @property
    def edges(self):
        return np.array([float(self.radii[0]), *self.breaks, self.r_max])

    def _eval(self, r, nu=0):
        r = np.asarray(r, dtype=float)
        out = np.zeros_like(r)
        edges = self.edges
        inside = r <= self.r_max
        idx = np.clip(np.searchsorted(edges, r, side="right") - 1, 0, len(self._splines) - 1)
        for k, sp in enumerate(self._splines):
            m = inside & (idx == k)
            if np.any(m):
                out[m] = sp(r[m], nu)
        far = ~inside
        if np.any(far) and math.isfinite(self.tail_power):
            p, R, v = self.tail_power, self.r_max, self.values[-1]
            rf = r[far]
            coeff = [1.0, -p, p * (p + 1)][nu] if nu <= 2 else 0.0
            out[far] = coeff * v * (R / rf) ** p / rf**nu
        return out

    def __call__(self, r):
        return self._eval(r)

    def derivative(self, r, order=1):
        return self._eval(r, order)

    def laplacian(self, r):
        """Radial Laplacian f'' + (n-1) f'/r (n f''(0) at the origin)."""
        r = np.asarray(r, dtype=float)
        d1, d2 = self._eval(r, 1), self._eval(r, 2)
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(r > 0, d2 + (self.n - 1) * d1 / np.where(r > 0, r, 1.0), self.n * d2)

    def is_decaying(self):
        """|f(r_max)| <= |f(r_max / 2)| (with round-off slack)."""
        far = abs(self.values[-1])
        mid = abs(float(self(0.5 * self.r_max)))
        return far <= mid + 1e-12 * max(1.0, np.max(np.abs(self.values)))

    def to_csv(self, fh=None):
        buf = io.StringIO() if fh is None else fh
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["r", "value"])
        for r, v in zip(self.radii, self.values):
            w.writerow([repr(float(r)), repr(float(v))])
        return buf.getvalue() if fh is None else None


def riesz_potential_radial(E, alpha, grid=None, relative_to_ball=True):
    """Profile of I_alpha f on a radial grid, f = chi_{B_1} - chi_E (or chi_E).

    The tail beyond the grid uses the exact decay order: r^(alpha - n - 2) for
    the mass-free f_E, r^(alpha - n) for chi_E; the Newton potential (alpha = 2)
    of f_E vanishes identically outside its support.
    """
    n = E.n
    _check_alpha(n, alpha)
    dens = RadialDensity.of_set(E, relative_to_ball)
    if grid is None:
        grid = radial_grid(dens.jumps)
    grid = np.asarray(grid, dtype=float)
    vals = riesz_values(E, alpha, grid, relative_to_ball)
    if relative_to_ball:
        tail = math.inf if alpha == 2 else n + 2 - alpha
    else:
        tail = n - alpha
    return RadialProfile(n, alpha, grid, vals, tuple(dens.jumps), tail)


def phi_profiles(E, alpha, grid=None):
    """Spherical averages phi_alpha(r) and ball averages Phi_alpha(r) of I_alpha f_E.

    For radial data the spherical average is the profile itself; Phi is the
    cumulative trapezoid of n r^-n int_0^r s^(n-1) phi(s) ds.
    """
    phi = riesz_potential_radial(E, alpha, grid)
    n, r, v = E.n, phi.radii, phi.values
    cum = integrate.cumulative_trapezoid(r ** (n - 1) * v, r, initial=0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        big = np.where(r > 0, n * cum / np.where(r > 0, r, 1.0) ** n, v[0])
    Phi = RadialProfile(n, alpha, r, big, phi.breaks, phi.tail_power)
    return phi, Phi


def riesz_of_profile(profile, alpha, r, step=0.25):
    """I_alpha applied to a sampled radial profile (semigroup composition).

    Every grid cell is its own quadrature piece so the cubic interpolant is
    integrated essentially exactly; the discretisation error is then the
    interpolation error of the profile.
    """
    n = profile.n
    _check_alpha(n, alpha)
    tail = None if not math.isfinite(profile.tail_power) else profile.tail_power
    out = _radial_convolution(profile, profile.radii, n, alpha, np.atleast_1d(r), tail, step)
    return sigma_constant(n, alpha) * out


# --------------------------------------------------------------------------
# nonlocal energy


@dataclass(frozen=True)
class NonlocalEstimate:
    value: float
    stderr: float
    method: str
    samples: int = 0


def _sample_star(shape, rng, m):
    g = rng.standard_normal((m, 3))
    g /= np.linalg.norm(g, axis=1)[:, None]
    u = (rng.permutation(m) + rng.random(m)) / m
    rad = shape.radius_along(g)
    pts = np.asarray(shape.center) + (rad * np.cbrt(u))[:, None] * g
    return pts, 4.0 * np.pi * rad**3 / 3.0


def _mc_cross(a, b, rng, samples, chunk):
    total = 0.0
    total_sq = 0.0
    done = 0
    while done < samples:
        m = min(chunk, samples - done)
        x, wx = _sample_star(a, rng, m)
        y, wy = _sample_star(b, rng, m)
        vals = wx * wy / np.linalg.norm(x - y, axis=1)
        total += math.fsum(vals)
        total_sq += math.fsum(vals * vals)
        done += m
    mean = total / samples
    var = max(total_sq / samples - mean * mean, 0.0)
    return mean, math.sqrt(var / samples)


def _surface_nl(components, chunk=1024):
    pts = np.concatenate([c.boundary_points() for c in components])
    nrm = np.concatenate([c.normals() for c in components])
    dA = np.concatenate([c.area_elements() for c in components])
    total = 0.0
    for i in range(0, pts.shape[0], chunk):
        p, v, w = pts[i:i + chunk], nrm[i:i + chunk], dA[i:i + chunk]
        dist = np.sqrt(np.maximum(
            np.sum(p * p, axis=1)[:, None] + np.sum(pts * pts, axis=1)[None, :] - 2.0 * p @ pts.T, 0.0))
        total += float(np.sum((w[:, None] * dA[None, :]) * dist * (v @ nrm.T)))
    return -0.5 * total


def nonlocal_energy(shape, method=None, samples=10**7, seed=0, chunk=10**6):
    """NL(E): double integral of |x - y|^(2 - n) over E x E.

    * RadialSet: exact piecewise-polynomial quadrature (method ``"radial"``).
    * StarSurface / StarUnion (n = 3): ``"mc"`` (default) is a seeded Monte
      Carlo over pairs with stratified radial coordinates; ``"surface"`` uses
      the identity NL = -1/2 int int |x - y| nu(x).nu(y) dA dA on the boundary
      grid, which is deterministic and smooth in the shape parameters. Its
      error estimate is the change against the half-resolution grid.
    """
    if isinstance(shape, RadialSet):
        if not shape.is_centered:
            shape = shape.translated(-np.asarray(shape.center))
        d = RadialDensity.of_set(shape, relative_to_ball=False)
        val = newton_pairing(d, d)
        return NonlocalEstimate(float(val), 1e-14 * abs(float(val)), "radial")
    comps = shape.components if isinstance(shape, StarUnion) else (shape,)
    if not all(isinstance(c, StarSurface) for c in comps):
        raise TypeError(f"unsupported shape {type(shape).__name__}")
    method = method or "mc"
    if method == "surface":
        val = _surface_nl(comps)
        coarse = [c.with_grid((max(4, c.grid[0] // 2), max(6, c.grid[1] // 2))) for c in comps]
        return NonlocalEstimate(val, abs(val - _surface_nl(coarse)), "surface")
    if method != "mc":
        raise ConfigError(f"unknown nonlocal method {method!r}")
    if samples < 10**4:
        raise ConfigError("Monte Carlo sample budget must be at least 1e4")
    rng = np.random.default_rng(seed)
    pairs = [(i, j) for i in range(len(comps)) for j in range(i, len(comps))]
    per = max(samples // len(pairs), 1)
    value, var = 0.0, 0.0
    for i, j in pairs:
        mean, se = _mc_cross(comps[i], comps[j], rng, per, chunk)
        mult = 1.0 if i == j else 2.0
        value += mult * mean
        var += (mult * se) ** 2
    return NonlocalEstimate(value, math.sqrt(var), "mc", per * len(pairs))


# --------------------------------------------------------------------------
# half Laplacian: singular integral and harmonic extension


def _sphere_weight_norm(n):
    return math.sqrt(math.pi) * math.exp(gammaln(0.5 * (n - 1)) - gammaln(0.5 * n))


def spherical_mean(fn, edges, n, y_radius, rho, step=1.0 / 6.0):
    """Mean of the radial function ``fn`` over the sphere |x - y| = rho, |y| = y_radius.

    Integrates in the radius s = |x| of the sphere point so the pieces can be
    split at the break radii of ``fn``.
    """
    rho = np.atleast_1d(np.asarray(rho, dtype=float))
    if y_radius == 0:
        return fn(rho)
    r = float(y_radius)
    lo = np.abs(r - rho)
    hi = r + rho
    edges = np.asarray(edges, dtype=float)
    cut = np.clip(edges[None, :], lo[:, None], hi[:, None])
    pts = np.sort(np.concatenate([lo[:, None], cut, hi[:, None]], axis=1), axis=1)
    s, w = tanh_sinh_nodes(pts[:, :-1], pts[:, 1:], step)
    rr = rho[:, None, None]
    cos_t = np.clip((s * s - r * r - rr * rr) / (2.0 * r * rr), -1.0, 1.0)
    sin_t = np.sqrt(np.maximum(1.0 - cos_t * cos_t, 0.0))
    dens = sin_t ** (n - 3) * s / (r * rr)
    vals = fn(s.ravel()).reshape(s.shape)
    return np.sum(w * dens * vals, axis=(1, 2)) / _sphere_weight_norm(n)


def _rho_panels(edges, y_radius, lo, scale, r_far):
    marks = [lo, r_far]
    for e in edges:
        for m in (abs(y_radius - e), y_radius + e):
            if lo < m < r_far:
                marks.append(m)
    k = scale
    while k < r_far:
        if k > lo:
            marks.append(k)
        k *= 2.0
    return np.unique(marks)


def _profile_edges(profile):
    return np.array([0.0, *profile.breaks, profile.r_max])


def half_laplacian_radial(profile, r, delta=1e-3):
    """(-Delta)^(1/2) f at |x| = r via the principal-value singular integral.

    The integral over |x - xi| < delta is replaced by its Taylor value
    -|B_1| delta Delta f(x) / 2; outside, the integrand is reduced to the
    spherical means of f about x.
    """
    if not profile.is_decaying():
        raise DomainError("profile does not decay; the half Laplacian integral diverges")
    n = profile.n
    edges = _profile_edges(profile)
    f0 = float(profile(np.array([r]))[0])
    r_far = 4.0 * (r + profile.r_max)
    panels = _rho_panels(edges, r, delta, max(delta, 1e-2), r_far)
    rho, w = gauss_nodes(panels[:-1], panels[1:], order=16)
    rho, w = rho.ravel(), w.ravel()
    body = np.sum(w * (f0 - spherical_mean(profile, edges, n, r, rho)) / rho**2)
    u, wu = tanh_sinh_nodes(0.0, 1.0)
    rho_t = r_far / u
    # with rho = r_far / u the measure drho / rho^2 becomes du / r_far
    tail = np.sum(wu * (f0 - spherical_mean(profile, edges, n, r, rho_t))) / r_far
    core = -0.5 * unit_ball_volume(n) * delta * float(profile.laplacian(np.array([r]))[0])
    return half_laplacian_constant(n) * (unit_sphere_area(n) * (body + tail) + core)


def _extension_quotient(profile, y_radius, z):
    """(f(y) - u(y, z)) / z for the Poisson extension u of the profile."""
    n = profile.n
    edges = _profile_edges(profile)
    f0 = float(profile(np.array([y_radius]))[0])
    r_far = 4.0 * (y_radius + profile.r_max) + 50.0 * z
    panels = _rho_panels(edges, y_radius, 0.0, z / 16.0, r_far)
    rho, w = gauss_nodes(panels[:-1], panels[1:], order=16)
    rho, w = rho.ravel(), w.ravel()
    kern = rho ** (n - 1) * (rho * rho + z * z) ** (-0.5 * (n + 1))
    body = np.sum(w * kern * (f0 - spherical_mean(profile, edges, n, y_radius, rho)))
    u, wu = tanh_sinh_nodes(0.0, 1.0)
    rho_t = r_far / u
    kern_t = rho_t ** (n - 1) * (rho_t * rho_t + z * z) ** (-0.5 * (n + 1)) * r_far / u**2
    tail = np.sum(wu * kern_t * (f0 - spherical_mean(profile, edges, n, y_radius, rho_t)))
    return half_laplacian_constant(n) * unit_sphere_area(n) * (body + tail)


def harmonic_extension(profile, y_radius, z):
    """Poisson extension u(y, z) of the profile into the upper half space, |y| = y_radius."""
    if z <= 0:
        return float(profile(np.array([y_radius]))[0])
    return float(profile(np.array([y_radius]))[0]) - z * _extension_quotient(profile, y_radius, z)


def harmonic_extension_slope(profile, y, z=0.0025, tol=1e-3):
    """-u_z(y, 0) for the harmonic extension of the profile.

    Uses the one-sided quotient -(u(y, z) - u(y, 0)) / z at steps z and z/2
    with Richardson extrapolation. The same extrapolation from (2z, z) must
    agree within ``tol`` (relative to max(1, |value|)), otherwise
    :class:`NumericalFailure` is raised.
    """
    if not profile.is_decaying():
        raise DomainError("profile does not decay")
    y_radius = float(np.linalg.norm(np.atleast_1d(y)))
    d2z, dz, dh = (_extension_quotient(profile, y_radius, h) for h in (2 * z, z, 0.5 * z))
    fine = 2.0 * dh - dz
    coarse = 2.0 * dz - d2z
    if abs(fine - coarse) > tol * max(1.0, abs(fine)):
        raise NumericalFailure(f"extension extrapolation disagrees: {fine} vs {coarse}")
    return fine


def extension_sphere_mean(profile, radius, order=24):
    """Mean of the even reflection of the harmonic extension over the sphere
    of the given radius in R^(n+1), centered at the origin.
    """
    n = profile.n
    psi, w = gauss_nodes(0.0, 0.5 * np.pi, order)
    w = w * np.sin(psi) ** (n - 1)
    vals = np.array([harmonic_extension(profile, radius * math.sin(p), radius * math.cos(p)) for p in psi])
    return float(np.sum(w * vals) / np.sum(w))
