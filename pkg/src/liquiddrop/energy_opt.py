"""Liquid-drop energy P(E) + lambda NL(E) at unit volume: assembly, scaling,
the ball/two-ball threshold, second variations at the ball and a projected
gradient descent over star shapes.
"""

import csv
import io
import math
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from .errors import ConfigError, DomainError
from .potentials import nonlocal_energy
from .shapes import (RadialSet, StarSurface, dimension_of, perturbed_ball, rescale_to_unit_volume, two_ball_union,
                     unit_ball_volume)
from .sph import mode_list
from .verify import identity_record

VOLUME_TOL = 1e-8


def lambda_from_mass(m, n=3):
    """lambda_m = (m / |B_1|)^(3/n)."""
    if not m > 0:
        raise DomainError(f"mass must be positive, got {m}")
    return (m / unit_ball_volume(n)) ** (3.0 / n)


@dataclass(frozen=True)
class EnergyBreakdown:
    perimeter: float
    nonlocal_: float
    lam: float
    total: float
    error_estimate: float = 0.0

    @classmethod
    def csv_header(cls):
        return ["perimeter", "nonlocal", "lambda", "total", "error_estimate"]

    def csv_row(self):
        return [repr(float(v)) for v in (self.perimeter, self.nonlocal_, self.lam, self.total, self.error_estimate)]


def total_energy(shape, lam, nl_method=None, samples=10**7, seed=0):
    """P(E) + lam NL(E) for a unit-volume shape.

    Star shapes default to the deterministic surface form of NL; pass
    ``nl_method="mc"`` for the Monte Carlo estimator.
    """
    n = dimension_of(shape)
    vol = shape.volume()
    ref = unit_ball_volume(n)
    if abs(vol - ref) > VOLUME_TOL * ref:
        raise DomainError(f"volume {vol!r} differs from |B_1| = {ref!r}")
    if isinstance(shape, RadialSet):
        est = nonlocal_energy(shape)
    else:
        est = nonlocal_energy(shape, method=nl_method or "surface", samples=samples, seed=seed)
    per, nl, lam = float(shape.perimeter()), float(est.value), float(lam)
    return EnergyBreakdown(per, nl, lam, per + lam * nl, abs(lam) * float(est.stderr))


def scaling_consistency(m, E, n=None):
    """P(rE) + NL(rE) = r^(n-1) (P(E) + lambda_m NL(E)), r = (m/|B_1|)^(1/n)."""
    n = n or dimension_of(E)
    if not m > 0:
        raise DomainError(f"mass must be positive, got {m}")
    r = (m / unit_ball_volume(n)) ** (1.0 / n)
    lam = lambda_from_mass(m, n)
    big = E.scaled(r)
    method = None if isinstance(E, RadialSet) else "surface"
    lhs = big.perimeter() + nonlocal_energy(big, method=method).value
    rhs = r ** (n - 1) * (E.perimeter() + lam * nonlocal_energy(E, method=method).value)
    rel = abs(lhs - rhs) / abs(rhs)
    return identity_record("scaling_consistency", "P(rE) + NL(rE) = r^(n-1) (P(E) + lambda_m NL(E))",
                           lhs, rhs, f"m={m!r} n={n}", tol=1e-8, residual=rel)


# --------------------------------------------------------------------------
# ball versus two balls


def ball_nonlocal(n=3):
    """NL(B_1) in closed form for n = 3 (32 pi^2 / 15), by radial pairing otherwise."""
    if n == 3:
        return 32.0 * math.pi**2 / 15.0
    return nonlocal_energy(RadialSet.ball(n)).value


def two_ball_threshold(n=3):
    """lambda at which B_1 and two infinitely separated half-volume balls tie.

    Each half ball has radius 2^(-1/n): perimeters scale by 2^(1/n) in total
    and the self energies by 2 * 2^(-(n+2)/n).
    """
    if n != 3:
        raise DomainError("the two-ball threshold is implemented for n = 3")
    return 4 * math.pi * (2 ** (1 / 3) - 1) / (ball_nonlocal(3) * (1 - 2 ** (-2 / 3)))


def two_ball_threshold_explicit(separation=400.0, grid=(32, 64)):
    """Threshold from explicit energies of B_1 and a two-ball union at finite separation."""
    ball = StarSurface.ball(grid=grid)
    pair = two_ball_union(separation, grid)
    p1, p2 = ball.perimeter(), pair.perimeter()
    nl1 = nonlocal_energy(ball, method="surface").value
    nl2 = nonlocal_energy(pair, method="surface").value
    return (p2 - p1) / (nl1 - nl2)


# --------------------------------------------------------------------------
# second variation at the ball


@dataclass(frozen=True)
class StabilityReport:
    lambdas: tuple
    modes: tuple
    second_diff: dict
    perimeter_part: dict
    nonlocal_part: dict
    noise: dict
    brackets: dict
    threshold: float
    amplitude: float

    def inconclusive(self, l, lam):
        return self.noise[l] * abs(lam) > abs(self.second_diff[(l, lam)]) / 3.0

    def to_csv(self, fh=None):
        buf = io.StringIO() if fh is None else fh
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["l", "lambda", "d2", "d2_perimeter", "d2_nonlocal", "sign", "inconclusive"])
        for l in self.modes:
            for lam in self.lambdas:
                d2 = self.second_diff[(l, lam)]
                w.writerow([l, repr(lam), repr(d2), repr(self.perimeter_part[l]), repr(self.nonlocal_part[l]),
                            int(np.sign(d2)), str(self.inconclusive(l, lam)).lower()])
        w.writerow(["two_ball", repr(self.threshold), "", "", "", "", ""])
        return buf.getvalue() if fh is None else None

    def summary_lines(self):
        out = []
        for l in self.modes:
            b = self.brackets[l]
            txt = "none on grid" if b is None else f"[{b[0]!r}, {b[1]!r}]"
            out.append(f"mode {l}: sign change {txt}")
        out.append(f"two-ball threshold lambda* = {self.threshold!r}")
        return out


def _zonal_second_difference(l, h, grid_res):
    vals = []
    for a in (h, 0.0, -h):
        s = perturbed_ball(l, a, grid_res=grid_res)
        vals.append((s.perimeter(), nonlocal_energy(s, method="surface").value))
    (pp, np_), (p0, n0), (pm, nm) = vals
    return (pp - 2 * p0 + pm) / h**2, (np_ - 2 * n0 + nm) / h**2


def mode_stability_sweep(L=4, lambdas=None, h=0.02, grid_res=32):
    """Second differences D^2(l, lambda) of the energy along zonal modes at the ball.

    The shape family does not depend on lambda, so D^2 = D^2_P + lambda D^2_NL
    is affine in lambda and each mode needs three shapes. The noise level is
    the change of D^2_NL against half the grid resolution.
    """
    if lambdas is None:
        lambdas = np.linspace(0.0, 0.6, 21)
    lambdas = tuple(float(v) for v in lambdas)
    if L < 2:
        raise ConfigError("need L >= 2 (l = 1 is a translation)")
    if grid_res < 2 * L + 2:
        raise ConfigError(f"grid_res {grid_res} too small for degree {L}")
    modes = tuple(range(2, L + 1))
    dp, dn, noise, d2, brackets = {}, {}, {}, {}, {}
    for l in modes:
        dp[l], dn[l] = _zonal_second_difference(l, h, grid_res)
        noise[l] = abs(dn[l] - _zonal_second_difference(l, h, max(2 * L + 2, grid_res // 2))[1])
        for lam in lambdas:
            d2[(l, lam)] = dp[l] + lam * dn[l]
        brackets[l] = None
        for a, b in zip(lambdas[:-1], lambdas[1:]):
            if np.sign(d2[(l, a)]) != np.sign(d2[(l, b)]):
                brackets[l] = (a, b)
                break
    return StabilityReport(lambdas, modes, d2, dp, dn, noise, brackets, two_ball_threshold(3), h)


# --------------------------------------------------------------------------
# projected gradient descent


@dataclass(frozen=True)
class DescentConfig:
    lam: float = 0.1
    steps: int = 500
    step_size: float = 0.2
    max_degree: int = 0
    grid: tuple = (24, 48)
    fd_step: float = 1e-4
    grad_tol: float = 1e-5
    armijo: float = 1e-4
    backtrack: float = 0.5
    max_backtracks: int = 30


@dataclass(frozen=True)
class DescentStep:
    step: int
    energy: EnergyBreakdown
    grad_norm: float
    step_size: float
    beta_squared: float


@dataclass
class DescentResult:
    trajectory: list = field(default_factory=list)
    final_shape: StarSurface = None
    status: str = "budget"

    def to_csv(self, fh=None):
        buf = io.StringIO() if fh is None else fh
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["step"] + EnergyBreakdown.csv_header() + ["grad_norm", "step_size", "beta2"])
        for s in self.trajectory:
            w.writerow([s.step] + s.energy.csv_row() + [repr(s.grad_norm), repr(s.step_size), repr(s.beta_squared)])
        return buf.getvalue() if fh is None else None


def _shape_from_vector(template, modes, x):
    coeffs = {mode: float(c) for mode, c in zip(modes, x) if c != 0.0}
    shape = template.replace(coeffs=coeffs, r0=1.0)
    return rescale_to_unit_volume(shape)


def gradient_descent_shape(start, lam=0.1, config=None, **overrides):
    """Minimise P + lam NL over star shapes with modes 2 <= l <= L.

    Coefficients are relative (r = r0 (1 + sum c Y)); the volume constraint is
    restored by homothety after every trial step, so l = 0 is eliminated and
    l = 1 (translations to first order) is left out. The gradient is a
    central difference of the projected energy; steps are accepted by an
    Armijo backtracking rule, so recorded energies never increase.
    """
    from .asymmetry import beta_at_center

    cfg = config or DescentConfig(lam=lam)
    if overrides:
        cfg = DescentConfig(**{**asdict(cfg), **overrides})
    if not isinstance(start, StarSurface):
        raise TypeError("descent runs on star shapes")
    L = cfg.max_degree or max(start.max_degree, 2)
    modes = [(l, m) for l, m in mode_list(L) if l >= 2]
    template = start.replace(max_degree=L, center=(0.0, 0.0, 0.0), grid=tuple(cfg.grid))
    cd = start.coeff_dict
    x = np.array([cd.get(mode, 0.0) for mode in modes])

    def energy(vec):
        return total_energy(_shape_from_vector(template, modes, vec), cfg.lam)

    def grad(vec):
        g = np.empty_like(vec)
        for i in range(vec.size):
            e = np.zeros_like(vec)
            e[i] = cfg.fd_step
            g[i] = (energy(vec + e).total - energy(vec - e).total) / (2 * cfg.fd_step)
        return g

    def beta2(vec):
        s = _shape_from_vector(template, modes, vec)
        return beta_at_center(s, s.barycenter())

    result = DescentResult()
    cur = energy(x)
    t = cfg.step_size
    for k in range(cfg.steps + 1):
        g = grad(x)
        gn = float(np.linalg.norm(g))
        result.trajectory.append(DescentStep(k, cur, gn, t, beta2(x)))
        if gn < cfg.grad_tol:
            result.status = "converged"
            break
        if k == cfg.steps:
            break
        t = min(cfg.step_size, 2 * t)
        for _ in range(cfg.max_backtracks):
            try:
                trial_x = x - t * g
                trial = energy(trial_x)
            except DomainError:
                t *= cfg.backtrack
                continue
            if trial.total <= cur.total - cfg.armijo * t * gn * gn:
                break
            t *= cfg.backtrack
        else:
            result.status = "line_search_failed"
            break
        x, cur = trial_x, trial
    result.final_shape = _shape_from_vector(template, modes, x)
    return result


# --------------------------------------------------------------------------
# flat key=value configuration


@dataclass(frozen=True)
class SweepConfig:
    max_degree: int = 4
    lambda_min: float = 0.0
    lambda_max: float = 0.6
    lambda_points: int = 21
    amplitude: float = 0.02
    grid_res: int = 32

    def lambdas(self):
        return np.linspace(self.lambda_min, self.lambda_max, self.lambda_points)


def _coerce(typ, key, raw):
    try:
        if typ is tuple:
            return tuple(int(v) for v in raw.replace("x", ",").split(","))
        if typ is bool:
            if raw.lower() in ("1", "true", "yes"):
                return True
            if raw.lower() in ("0", "false", "no"):
                return False
            raise ValueError(raw)
        return typ(raw)
    except ValueError as exc:
        raise ConfigError(f"{key}: cannot parse {raw!r}") from exc


def parse_flat_config(text, schema):
    """Parse ``key = value`` lines (``#`` comments) into a dict, typed by ``schema``.

    ``schema`` maps key to a type; unknown or duplicate keys raise ConfigError.
    """
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value")
        key, raw = (s.strip() for s in line.split("=", 1))
        if key not in schema:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in out:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        out[key] = _coerce(schema[key], key, raw)
    return out


def config_schema(cls):
    types = {"int": int, "float": float, "tuple": tuple, "bool": bool, "str": str}
    return {f.name: types[f.type] if isinstance(f.type, str) else f.type for f in fields(cls)}


__all__ = [
    "EnergyBreakdown", "StabilityReport", "DescentConfig", "DescentResult", "SweepConfig",
    "lambda_from_mass", "total_energy", "scaling_consistency", "two_ball_threshold",
    "two_ball_threshold_explicit", "mode_stability_sweep", "gradient_descent_shape",
    "parse_flat_config", "config_schema",
]
