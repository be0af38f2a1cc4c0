"""Shape representations, their measures, and the concrete test families.

Two representations are supported:

* :class:`RadialSet` -- a union of concentric shells in R^n, 3 <= n <= 10.
* :class:`StarSurface` -- a star-shaped body in R^3 whose radius function is
  ``r0 * (1 + sum c_lm Y_lm)`` sampled on a tensor Gauss grid.

:class:`StarUnion` holds disjoint star bodies (two far-apart balls, say).
"""

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.special import gammaln

from .errors import DomainError, ShapeFormatError
from .sph import real_sph_harm_table, sphere_grid

DEFAULT_GRID = (64, 128)


def unit_ball_volume(n):
    return math.exp(0.5 * n * math.log(math.pi) - gammaln(0.5 * n + 1.0))


def unit_sphere_area(n):
    return n * unit_ball_volume(n)


@dataclass(frozen=True)
class Dimension:
    n: int

    def __post_init__(self):
        if not isinstance(self.n, (int, np.integer)) or not 3 <= self.n <= 10:
            raise DomainError(f"dimension must be an integer in [3, 10], got {self.n!r}")

    @property
    def unit_ball_volume(self):
        return unit_ball_volume(self.n)

    @property
    def unit_sphere_area(self):
        return unit_sphere_area(self.n)


# --------------------------------------------------------------------------
# radial sets


@dataclass(frozen=True)
class RadialSet:
    """Union of shells ``a_i < |x - center| < b_i`` in R^n."""

    n: int
    intervals: tuple = ()
    center: tuple = None

    def __post_init__(self):
        Dimension(self.n)
        ivs = tuple((float(a), float(b)) for a, b in self.intervals)
        prev = -math.inf
        for a, b in ivs:
            if not (math.isfinite(a) and math.isfinite(b)):
                raise DomainError("interval radii must be finite")
            if a < 0 or not a < b or not a > prev:
                raise DomainError(f"intervals must satisfy 0 <= a1 < b1 < a2 < ...; got {ivs}")
            prev = b
        object.__setattr__(self, "intervals", ivs)
        c = (0.0,) * self.n if self.center is None else tuple(float(v) for v in self.center)
        if len(c) != self.n:
            raise DomainError(f"center must have {self.n} coordinates")
        object.__setattr__(self, "center", c)

    @classmethod
    def ball(cls, n, radius=1.0, center=None):
        return cls(n, ((0.0, radius),), center)

    @property
    def is_centered(self):
        return not any(self.center)

    @property
    def is_empty(self):
        return not self.intervals

    @property
    def outer_radius(self):
        return self.intervals[-1][1] if self.intervals else 0.0

    @property
    def radii(self):
        """All interval endpoints, sorted (a leading 0 is kept)."""
        return np.array([v for iv in self.intervals for v in iv])

    def indicator(self, r):
        r = np.asarray(r, dtype=float)
        out = np.zeros_like(r)
        for a, b in self.intervals:
            out += (r > a) & (r < b)
        return out

    def volume(self):
        w = unit_ball_volume(self.n)
        return w * sum(b**self.n - a**self.n for a, b in self.intervals)

    def perimeter(self):
        area = unit_sphere_area(self.n)
        k = self.n - 1
        return area * sum((a**k if a > 0 else 0.0) + b**k for a, b in self.intervals)

    def scaled(self, s):
        """Homothety by ``s`` about the set's own center."""
        if not s > 0:
            raise DomainError("scale factor must be positive")
        return RadialSet(self.n, tuple((s * a, s * b) for a, b in self.intervals), self.center)

    def translated(self, v):
        v = np.broadcast_to(np.asarray(v, dtype=float), (self.n,))
        return RadialSet(self.n, self.intervals, tuple(np.add(self.center, v)))

    def to_json(self):
        d = {"kind": "radial", "n": self.n, "intervals": [list(iv) for iv in self.intervals]}
        if not self.is_centered:
            d["center"] = list(self.center)
        return d


def annulus_family(eps, n):
    """The unit-volume annulus B_R \\ B_eps with R = (1 + eps^n)^(1/n)."""
    Dimension(n)
    if not 0 < eps < 1:
        raise DomainError(f"eps must lie in (0, 1), got {eps}")
    return RadialSet(n, ((eps, (1.0 + eps**n) ** (1.0 / n)),))


def random_radial_set(n, rng, n_intervals=None):
    """Unit-volume union of 2-4 shells with endpoints drawn from ``rng``."""
    if n_intervals is None:
        n_intervals = int(rng.integers(2, 5))
    while True:
        ends = np.sort(rng.uniform(0.0, 1.0, 2 * n_intervals))
        if rng.random() < 0.5:
            ends[0] = 0.0
        if np.min(np.diff(ends)) > 1e-3:
            break
    E = RadialSet(n, tuple(zip(ends[::2], ends[1::2])))
    return rescale_to_unit_volume(E)


# --------------------------------------------------------------------------
# star-shaped surfaces in R^3


def _normalise_coeffs(coeffs):
    if isinstance(coeffs, dict):
        items = coeffs.items()
    else:
        items = coeffs
    out = {}
    for key, c in items:
        l, m = (int(v) for v in key)
        out[(l, m)] = out.get((l, m), 0.0) + float(c)
    return tuple(sorted((k, v) for k, v in out.items() if v != 0.0))


@dataclass(frozen=True, eq=False)
class StarSurface:
    """Star body ``{center + t r(w) w : 0 <= t < 1}`` with
    ``r(w) = r0 * (1 + sum_{l,m} c_lm Y_lm(w))``.
    """

    max_degree: int
    coeffs: tuple = ()
    r0: float = 1.0
    center: tuple = (0.0, 0.0, 0.0)
    grid: tuple = DEFAULT_GRID
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        coeffs = _normalise_coeffs(self.coeffs)
        for (l, m), _ in coeffs:
            if not 0 <= l <= self.max_degree or abs(m) > l:
                raise DomainError(f"mode ({l},{m}) outside degree {self.max_degree}")
        if not self.r0 > 0:
            raise DomainError("r0 must be positive")
        object.__setattr__(self, "coeffs", coeffs)
        object.__setattr__(self, "center", tuple(float(v) for v in self.center))
        object.__setattr__(self, "grid", tuple(int(v) for v in self.grid))
        if len(self.center) != 3:
            raise DomainError("star shapes live in R^3")
        g = self.sphere
        rel = np.ones(g.size)
        d_theta = np.zeros(g.size)
        d_phi = np.zeros(g.size)
        for (l, m), c in coeffs:
            y, yt, yp = g.basis(l, m)
            rel += c * y
            d_theta += c * yt
            d_phi += c * yp
        if np.any(rel <= 0):
            raise DomainError("radius function is nonpositive at a grid node")
        self._cache["r"] = self.r0 * rel
        self._cache["r_theta"] = self.r0 * d_theta
        self._cache["r_phi"] = self.r0 * d_phi

    # construction helpers -------------------------------------------------

    @classmethod
    def ball(cls, radius=1.0, center=(0.0, 0.0, 0.0), grid=DEFAULT_GRID):
        return cls(0, (), radius, center, grid)

    def replace(self, **kw):
        args = dict(max_degree=self.max_degree, coeffs=self.coeffs, r0=self.r0,
                    center=self.center, grid=self.grid)
        args.update(kw)
        return StarSurface(**args)

    def scaled(self, s):
        """Homothety by ``s`` about ``center``."""
        if not s > 0:
            raise DomainError("scale factor must be positive")
        return self.replace(r0=self.r0 * s)

    def translated(self, v):
        return self.replace(center=tuple(np.add(self.center, v)))

    def with_grid(self, grid):
        return self.replace(grid=tuple(grid))

    @property
    def coeff_dict(self):
        return dict(self.coeffs)

    # sampled geometry -----------------------------------------------------

    @property
    def sphere(self):
        return sphere_grid(*self.grid)

    @property
    def radius(self):
        return self._cache["r"]

    def radius_at(self, theta, phi):
        theta, phi = np.broadcast_arrays(np.asarray(theta, dtype=float), np.asarray(phi, dtype=float))
        rel = np.ones(theta.shape)
        if self.coeffs:
            table = real_sph_harm_table(self.max_degree, theta, phi)
            for mode, c in self.coeffs:
                rel = rel + c * table[mode]
        return self.r0 * rel

    def radius_along(self, directions):
        """Radius function at arbitrary unit vectors (last axis of length 3)."""
        d = np.asarray(directions, dtype=float)
        theta = np.arccos(np.clip(d[..., 2], -1.0, 1.0))
        phi = np.arctan2(d[..., 1], d[..., 0])
        return self.radius_at(theta, phi)

    def _grad_sq(self):
        st = np.sin(self.sphere.theta)
        return self._cache["r_theta"] ** 2 + (self._cache["r_phi"] / st) ** 2

    def boundary_points(self):
        return np.asarray(self.center) + self.radius[:, None] * self.sphere.directions

    def normals(self):
        g = self.sphere
        th, ph = g.theta, g.phi
        e_theta = np.stack([np.cos(th) * np.cos(ph), np.cos(th) * np.sin(ph), -np.sin(th)], axis=-1)
        e_phi = np.stack([-np.sin(ph), np.cos(ph), np.zeros_like(ph)], axis=-1)
        r = self.radius
        v = (r[:, None] * g.directions
             - self._cache["r_theta"][:, None] * e_theta
             - (self._cache["r_phi"] / np.sin(th))[:, None] * e_phi)
        return v / np.linalg.norm(v, axis=1)[:, None]

    def area_elements(self):
        """Quadrature weights for surface integrals over the boundary."""
        r = self.radius
        return self.sphere.weights * r * np.sqrt(r * r + self._grad_sq())

    def volume(self):
        return float(np.sum(self.sphere.weights * self.radius**3) / 3.0)

    def perimeter(self):
        return float(np.sum(self.area_elements()))

    def barycenter(self):
        g = self.sphere
        first = np.sum((g.weights * self.radius**4 / 4.0)[:, None] * g.directions, axis=0)
        return np.asarray(self.center) + first / self.volume()

    def contains(self, points):
        p = np.atleast_2d(np.asarray(points, dtype=float)) - np.asarray(self.center)
        rho = np.linalg.norm(p, axis=1)
        safe = np.where(rho[:, None] > 0, p / np.where(rho > 0, rho, 1.0)[:, None], [0.0, 0.0, 1.0])
        return rho < self.radius_along(safe)

    def to_json(self):
        d = {"kind": "star", "L": self.max_degree, "r0": self.r0,
             "coeffs": {f"{l},{m}": c for (l, m), c in self.coeffs},
             "grid": list(self.grid)}
        if any(self.center):
            d["center"] = list(self.center)
        return d


@dataclass(frozen=True)
class StarUnion:
    """Disjoint union of star bodies (the caller guarantees disjointness)."""

    components: tuple

    def __post_init__(self):
        object.__setattr__(self, "components", tuple(self.components))
        if not self.components:
            raise DomainError("empty union")

    def volume(self):
        return sum(c.volume() for c in self.components)

    def perimeter(self):
        return sum(c.perimeter() for c in self.components)

    def scaled(self, s):
        # homothety about the origin moves the component centers too
        return StarUnion(tuple(c.scaled(s).replace(center=tuple(s * np.asarray(c.center)))
                               for c in self.components))


def two_ball_union(separation, grid=DEFAULT_GRID):
    """Two balls of volume |B_1|/2 each, centers ``separation`` apart on the x axis."""
    r = 2.0 ** (-1.0 / 3.0)
    if separation <= 2 * r:
        raise DomainError("balls overlap")
    h = 0.5 * separation
    return StarUnion((StarSurface.ball(r, (-h, 0.0, 0.0), grid), StarSurface.ball(r, (h, 0.0, 0.0), grid)))


def perturbed_ball(l, amplitude, L=None, grid_res=DEFAULT_GRID[0]):
    """Unit-volume ball with a single zonal mode ``c_{l,0} = amplitude``."""
    L = l if L is None else L
    if not 2 <= l <= L:
        raise DomainError(f"need 2 <= l <= L, got l={l}, L={L}")
    grid = (grid_res, 2 * grid_res)
    coeffs = {(l, 0): amplitude} if amplitude else {}
    return rescale_to_unit_volume(StarSurface(L, coeffs, 1.0, grid=grid))


def random_star_surface(rng, L=4, amplitude=0.15, grid=DEFAULT_GRID, min_degree=1):
    """Unit-volume star shape whose relative perturbation has sup norm ``amplitude``.

    Coefficients for ``min_degree <= l <= L`` are Gaussian, then scaled so that
    ``max |sum c Y|`` over the grid equals ``amplitude``.
    """
    modes = [(l, m) for l in range(min_degree, L + 1) for m in range(-l, l + 1)]
    raw = rng.standard_normal(len(modes))
    g = sphere_grid(*grid)
    pert = sum(c * g.basis(l, m)[0] for (l, m), c in zip(modes, raw))
    scale = amplitude / float(np.max(np.abs(pert)))
    coeffs = {mode: float(c * scale) for mode, c in zip(modes, raw)}
    return rescale_to_unit_volume(StarSurface(L, coeffs, 1.0, grid=grid))


# --------------------------------------------------------------------------
# generic measures


def volume(shape):
    return shape.volume()


def perimeter(shape):
    return shape.perimeter()


def dimension_of(shape):
    return shape.n if isinstance(shape, RadialSet) else 3


def rescale_to_unit_volume(shape):
    """Homothetic copy with volume |B_1| of the ambient dimension."""
    vol = shape.volume()
    if not vol > 0:
        raise DomainError("cannot rescale an empty set")
    n = dimension_of(shape)
    return shape.scaled((unit_ball_volume(n) / vol) ** (1.0 / n))


# --------------------------------------------------------------------------
# JSON shape files

_RADIAL_KEYS = {"kind", "n", "intervals", "center"}
_STAR_KEYS = {"kind", "L", "r0", "coeffs", "grid", "center"}


def shape_from_dict(d):
    if not isinstance(d, dict):
        raise ShapeFormatError("<root>", "shape must be a JSON object")
    kind = d.get("kind")
    if kind == "radial":
        allowed, required = _RADIAL_KEYS, ("n", "intervals")
    elif kind == "star":
        allowed, required = _STAR_KEYS, ("L",)
    else:
        raise ShapeFormatError("kind", f"expected 'radial' or 'star', got {kind!r}")
    for key in d:
        if key not in allowed:
            raise ShapeFormatError(key, "unknown field")
    for key in required:
        if key not in d:
            raise ShapeFormatError(key, "missing required field")
    try:
        if kind == "radial":
            ivs = d["intervals"]
            if not isinstance(ivs, list) or any(not isinstance(iv, list) or len(iv) != 2 for iv in ivs):
                raise ShapeFormatError("intervals", "expected a list of [a, b] pairs")
            try:
                return RadialSet(int(d["n"]), tuple(tuple(iv) for iv in ivs), d.get("center"))
            except (DomainError, TypeError, ValueError) as exc:
                raise ShapeFormatError("intervals", str(exc)) from exc
        raw = d.get("coeffs", {})
        if not isinstance(raw, dict):
            raise ShapeFormatError("coeffs", "expected an object mapping 'l,m' to a number")
        coeffs = {}
        for key, c in raw.items():
            parts = key.split(",")
            try:
                coeffs[(int(parts[0]), int(parts[1]))] = float(c)
            except (ValueError, IndexError, TypeError) as exc:
                if len(parts) != 2 or isinstance(exc, IndexError):
                    raise ShapeFormatError("coeffs", f"bad mode key {key!r}") from exc
                raise ShapeFormatError("coeffs", f"bad entry {key!r}: {c!r}") from exc
            if len(parts) != 2:
                raise ShapeFormatError("coeffs", f"bad mode key {key!r}")
        grid = d.get("grid", list(DEFAULT_GRID))
        if not isinstance(grid, list) or len(grid) != 2:
            raise ShapeFormatError("grid", "expected [n_polar, n_azimuth]")
        try:
            return StarSurface(int(d["L"]), coeffs, float(d.get("r0", 1.0)),
                               tuple(d.get("center", (0.0, 0.0, 0.0))), tuple(grid))
        except (DomainError, ValueError) as exc:
            raise ShapeFormatError("coeffs", str(exc)) from exc
    except ShapeFormatError:
        raise
    except (TypeError, ValueError, AttributeError) as exc:
        raise ShapeFormatError(kind, str(exc)) from exc


def load_shape(path):
    try:
        d = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ShapeFormatError("<json>", str(exc)) from exc
    return shape_from_dict(d)


def dump_shape(shape, path):
    Path(path).write_text(json.dumps(shape.to_json()))
