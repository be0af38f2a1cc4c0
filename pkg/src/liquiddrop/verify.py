"""Numerical checks of the identities and inequalities behind small-mass ball
minimality, each producing a :class:`VerdictRecord`.

Identity checks pass when the residual is at most the tolerance; inequality
checks pass when the margin (``rhs - lhs`` for ``lhs <= rhs``) is at least
minus the tolerance. Conditional statements whose hypothesis fails on a given
input produce skip records.
"""

import csv
import io
import math
from dataclasses import asdict, dataclass, fields

import numpy as np

from .asymmetry import gamma_at_center
from .potentials import (RadialDensity, extension_sphere_mean, newton_pairing, newton_v,
                         radial_grid, riesz_ball_average, riesz_of_profile, riesz_potential_radial,
                         riesz_values, sigma_constant)
from .shapes import RadialSet, annulus_family, random_radial_set, unit_ball_volume

IDENTITY_TOL = 1e-6
MARGIN_FLOOR = 1e-9
RIESZ_IDENTITY_TOL = 1e-4
EXTENSION_REL_TOL = 0.02
SLOPE_TOL = 0.15
MONOTONE_GRID_POINTS = 400
SUITES = ("n3", "odd", "even", "lemma", "counterexample", "all")


@dataclass(frozen=True)
class VerdictRecord:
    check_name: str
    anchor: str
    lhs: float
    rhs: float
    margin: float
    tolerance: float
    passed: bool
    input_descriptor: str
    kind: str = "inequality"
    status: str = ""

    def __post_init__(self):
        if not self.status:
            object.__setattr__(self, "status", "pass" if self.passed else "fail")

    @classmethod
    def csv_header(cls):
        return [f.name for f in fields(cls)]

    def csv_row(self):
        out = []
        for k, v in asdict(self).items():
            if isinstance(v, bool):
                out.append(str(v).lower())
            elif isinstance(v, float):
                out.append(repr(v))
            else:
                out.append(str(v))
        return out


def inequality_record(name, anchor, lhs, rhs, descriptor, tol=MARGIN_FLOOR):
    """Record for ``lhs <= rhs``; margin = rhs - lhs."""
    lhs, rhs = float(lhs), float(rhs)
    margin = rhs - lhs
    return VerdictRecord(name, anchor, lhs, rhs, margin, tol, bool(margin >= -tol), descriptor, "inequality")


def identity_record(name, anchor, lhs, rhs, descriptor, tol=IDENTITY_TOL, residual=None):
    """Record for ``lhs == rhs``; margin holds the residual (default |lhs - rhs|)."""
    lhs, rhs = float(lhs), float(rhs)
    res = abs(lhs - rhs) if residual is None else float(residual)
    return VerdictRecord(name, anchor, lhs, rhs, res, tol, bool(res <= tol), descriptor, "identity")


def skip_record(name, anchor, descriptor, reason):
    return VerdictRecord(name, anchor, math.nan, math.nan, math.nan, math.nan, False,
                         f"{descriptor} [skipped: {reason}]", "conditional", "skip")


def describe(E, label=None):
    iv = ";".join(f"{a:.6g}-{b:.6g}" for a, b in E.intervals)
    head = f"{label} " if label else ""
    return f"{head}n={E.n} shells={iv}"


def _centered(E):
    if not isinstance(E, RadialSet):
        raise TypeError("radial checks need a RadialSet")
    return E if E.is_centered else E.translated(-np.asarray(E.center))


def _ball_density(n):
    return RadialDensity(n, np.array([0.0, 1.0]), np.ones(1))


# --------------------------------------------------------------------------
# n = 3 route and the general quadratic bound


def check_quadratic_positivity(E, descriptor=None):
    """int int f_E(x) f_E(y) |x - y|^(2-n) >= 0."""
    E = _centered(E)
    f = RadialDensity.of_set(E)
    q = newton_pairing(f, f)
    return inequality_record("quadratic_positivity", "Newton energy of f_E is nonnegative",
                             0.0, q, descriptor or describe(E))


def _nl_pieces(E):
    f = RadialDensity.of_set(E)
    chi_e = RadialDensity.of_set(E, relative_to_ball=False)
    ball = _ball_density(E.n)
    nl_ball = newton_pairing(ball, ball)
    nl_e = newton_pairing(chi_e, chi_e)
    return nl_ball, nl_e, 2.0 * newton_pairing(ball, f), newton_pairing(f, f)


def check_nl_upper_bound(E, descriptor=None):
    """NL(B_1) - NL(E) <= 2 int_{B_1} v, plus the gap-equals-quadratic-form cross-check.

    Returns two records: the inequality and the identity margin == Q to 1e-8
    relative.
    """
    E = _centered(E)
    desc = descriptor or describe(E)
    nl_ball, nl_e, two_int_v, q = _nl_pieces(E)
    ineq = inequality_record("nl_upper_bound", "NL(B1) - NL(E) <= 2 int_B1 v", nl_ball - nl_e, two_int_v, desc)
    tol = 1e-8 * abs(q) + 1e-13 * nl_ball
    gap = identity_record("nl_bound_gap_is_quadratic", "2 int_B1 v - (NL(B1) - NL(E)) = Q(f_E)",
                          ineq.margin, q, desc, tol=tol)
    return [ineq, gap]


def check_mean_value_n3(E, descriptor=None):
    """2 avg_{B_1} v <= 2 v(0) and 2 v(0) = gamma_0(E), n = 3."""
    E = _centered(E)
    if E.n != 3:
        raise ValueError("mean-value check is specific to n = 3")
    desc = descriptor or describe(E)
    f = RadialDensity.of_set(E)
    avg_v = newton_pairing(_ball_density(3), f) / unit_ball_volume(3)
    v0 = float(newton_v(E, 0.0))
    gamma0 = gamma_at_center(E, np.zeros(3))
    return [
        inequality_record("mean_value_n3", "2 avg_B1 v <= 2 v(0)", 2 * avg_v, 2 * v0, desc),
        identity_record("mean_value_gamma", "2 v(0) = gamma_0(E)", 2 * v0, gamma0, desc),
    ]


def check_main_route_n3(E, descriptor=None):
    """NL(B_1) - NL(E) <= |B_1| gamma_0(E) in n = 3."""
    E = _centered(E)
    desc = descriptor or describe(E)
    nl_ball, nl_e, _, _ = _nl_pieces(E)
    gamma0 = gamma_at_center(E, np.zeros(3))
    return inequality_record("main_route_n3", "NL(B1) - NL(E) <= |B1| gamma(E)",
                             nl_ball - nl_e, unit_ball_volume(3) * gamma0, desc)


# --------------------------------------------------------------------------
# Lemma


def _monotone_excess(E, alpha, n_points=MONOTONE_GRID_POINTS):
    """Largest forward increase of phi_alpha = I_alpha f_E on a radial grid, and a scale."""
    dens = RadialDensity.of_set(E)
    grid = radial_grid(dens.jumps, n_points=n_points)
    vals = riesz_values(E, alpha, grid)
    scale = float(np.max(np.abs(vals))) if vals.size else 0.0
    return float(np.max(np.diff(vals), initial=0.0)), scale


def _monotone_tol(scale):
    return MARGIN_FLOOR * (1.0 + scale)


def phi_is_decreasing(E, alpha):
    excess, scale = _monotone_excess(E, alpha)
    return excess <= _monotone_tol(scale)


def check_lemma(E, alpha, descriptor=None):
    """Lemma conclusions (i), (ii), (iii) for I_alpha f_E and I_{alpha+2} f_E."""
    E = _centered(E)
    n = E.n
    desc = (descriptor or describe(E)) + f" alpha={alpha:g}"
    names = ("lemma_i", "lemma_ii", "lemma_iii")
    anchors = ("phi_{a+2} is decreasing", "avg I_a <= 2n(n+2) avg I_{a+2}", "avg I_a <= 2n I_{a+2}(0)")
    if n < 5 or not 2 <= alpha <= n - 3:
        raise ValueError(f"the Lemma needs n >= 5 and alpha in [2, n-3], got n={n}, alpha={alpha}")
    pre, pre_scale = _monotone_excess(E, alpha)
    if pre > _monotone_tol(pre_scale):
        reason = f"phi_{alpha:g} increases by {pre:.3e}"
        return [skip_record(nm, an, desc, reason) for nm, an in zip(names, anchors)]
    inc, scale = _monotone_excess(E, alpha + 2)
    avg_a = riesz_ball_average(E, alpha)
    avg_a2 = riesz_ball_average(E, alpha + 2)
    at0 = float(riesz_values(E, alpha + 2, 0.0))
    return [
        inequality_record(names[0], anchors[0], inc, 0.0, desc, tol=_monotone_tol(scale)),
        inequality_record(names[1], anchors[1], avg_a, 2 * n * (n + 2) * avg_a2, desc),
        inequality_record(names[2], anchors[2], avg_a, 2 * n * at0, desc),
    ]


# --------------------------------------------------------------------------
# Riesz identities


def _mask_jumps(r, jumps, width=0.05):
    keep = np.ones_like(r, dtype=bool)
    for j in jumps:
        keep &= np.abs(r - j) > width
    return r[keep]


def _laplace_residual(E, alpha, r, h):
    def f(k):
        return riesz_values(E, alpha + 2, r + k * h)

    f2, f1, f0, fm1, fm2 = f(2), f(1), f(0), f(-1), f(-2)
    d2 = (-f2 + 16 * f1 - 30 * f0 + 16 * fm1 - fm2) / (12 * h * h)
    d1 = (-f2 + 8 * f1 - 8 * fm1 + fm2) / (12 * h)
    lap = d2 + (E.n - 1) / r * d1
    return float(np.max(np.abs(lap + riesz_values(E, alpha, r))))


def _semigroup_residual(E, a1, a2, r, n_points):
    dens = RadialDensity.of_set(E)
    prof = riesz_potential_radial(E, a2, radial_grid(dens.jumps, n_points=n_points))
    return float(np.max(np.abs(riesz_of_profile(prof, a1, r) - riesz_values(E, a1 + a2, r))))


def check_laplace_and_semigroup(E, alpha=None, alpha1=1.0, alpha2=None, h=0.01, n_points=600,
                                descriptor=None):
    """-Lap I_{alpha+2} f = I_alpha f and I_{a1} I_{a2} f = I_{a1+a2} f.

    Residuals are maxima over r in [0.1, 3] away from the jump radii. The
    Laplacian uses a fourth-order five-point stencil at step ``h``; each
    identity also gets a record that the residual drops at least 4x from the
    coarse level (2h, n_points / 2) to the default level.
    """
    E = _centered(E)
    n = E.n
    desc = descriptor or describe(E)
    if alpha is None:
        alpha = 2.0 if n >= 5 else n - 3.0
    if alpha2 is None:
        alpha2 = 2.0 if alpha1 + 2.0 < n else n - 1.0 - alpha1
    jumps = RadialDensity.of_set(E).jumps
    r_lap = _mask_jumps(np.linspace(0.1, 3.0, 300), jumps)
    r_sg = _mask_jumps(np.linspace(0.1, 3.0, 60), jumps)
    lap_fine = _laplace_residual(E, alpha, r_lap, h)
    lap_coarse = _laplace_residual(E, alpha, r_lap, 2 * h)
    sg_fine = _semigroup_residual(E, alpha1, alpha2, r_sg, n_points)
    sg_coarse = _semigroup_residual(E, alpha1, alpha2, r_sg, n_points // 2)
    d_lap = f"{desc} alpha={alpha:g} h={h:g}"
    d_sg = f"{desc} alphas={alpha1:g},{alpha2:g} grid={n_points}"
    return [
        identity_record("riesz_laplace", "-Lap I_{a+2} f = I_a f", lap_fine, 0.0, d_lap, tol=RIESZ_IDENTITY_TOL),
        _refinement_record("riesz_laplace_refinement", lap_coarse, lap_fine, d_lap),
        identity_record("riesz_semigroup", "I_a I_b f = I_{a+b} f", sg_fine, 0.0, d_sg, tol=RIESZ_IDENTITY_TOL),
        _refinement_record("riesz_semigroup_refinement", sg_coarse, sg_fine, d_sg),
    ]


def _refinement_record(name, coarse, fine, desc, factor=4.0, floor=1e-13):
    # residuals at round-off level count as converged
    if fine <= floor:
        return inequality_record(name, "residual improves >= 4x under refinement", 0.0, 0.0, desc)
    return inequality_record(name, "residual improves >= 4x under refinement", factor, coarse / fine, desc, tol=0.0)


# --------------------------------------------------------------------------
# counterexample family


def annulus_ratio(n, eps):
    """v(0) / (P(E_eps) - P(B_1)) for the unit-volume annulus."""
    E = annulus_family(eps, n)
    v0 = float(newton_v(E, 0.0))
    area = n * unit_ball_volume(n)
    # R^(n-1) - 1 with R^n = 1 + eps^n, without cancellation
    excess = area * (eps ** (n - 1) + math.expm1((n - 1) / n * math.log1p(eps**n)))
    return v0 / excess


def check_counterexample_scan(n, eps_list=(0.1, 0.05, 0.025)):
    """Growth of v(0)/(P(E) - P(B_1)) along shrinking annuli.

    For n >= 4 the ratios must increase as eps decreases and their log-log
    slope must be 3 - n within 0.15. For n = 3 the ratio stays bounded
    (max/min < 2).
    """
    eps = np.asarray(eps_list, dtype=float)
    if np.any(np.diff(eps) >= 0) or eps[0] > 0.2 or eps[-1] <= 0:
        raise ValueError("eps_list must decrease within (0, 0.2]")
    ratios = np.array([annulus_ratio(n, e) for e in eps])
    desc = f"annuli n={n} eps=" + ",".join(f"{e:g}" for e in eps)
    slope = float(np.polyfit(np.log(eps), np.log(ratios), 1)[0])
    if n == 3:
        spread = float(ratios.max() / ratios.min())
        return [inequality_record("counterexample_control", "ratio bounded in n=3", spread, 2.0, desc, tol=0.0)]
    out = [
        inequality_record("counterexample_increasing", "ratio grows as eps decreases", ratios[k - 1], ratios[k],
                          f"{desc} step={k}", tol=0.0)
        for k in range(1, len(eps))
    ]
    out.append(identity_record("counterexample_slope", "log-log slope of ratio = 3 - n", slope, 3.0 - n, desc,
                               tol=SLOPE_TOL))
    return out


# --------------------------------------------------------------------------
# odd and even dimensional chains


def extension_constant(n):
    """C~_n = 2 omega_n / ((n + 1) omega_{n+1})."""
    return 2.0 * unit_ball_volume(n) / ((n + 1) * unit_ball_volume(n + 1))


def odd_chain_constant(n):
    """Constant C with avg_{B_1} v <= C gamma_0(E)/(n - 1) from the iterated Lemma.

    Steps I_2 -> I_4 -> ... -> I_{n-3} contribute 2n(n+2) each through (ii);
    (iii) at alpha = n - 3 contributes 2n; v = I_2 f / sigma_{n,2} and
    I_{n-1} f(0) = sigma_{n,n-1} gamma_0 / (n - 1).
    """
    steps = (n - 5) // 2
    return (2 * n * (n + 2)) ** steps * 2 * n * sigma_constant(n, n - 1) / sigma_constant(n, 2)


def even_chain_constant(n):
    """Constant C with avg_{B_1} v <= C gamma_0(E)/(n - 1) in even n.

    (ii) applies (n - 4)/2 times up to I_{n-2}; the extension argument then
    bounds avg I_{n-2} by I_{n-1} f(0) / C~_n.
    """
    steps = (n - 4) // 2
    return (2 * n * (n + 2)) ** steps * sigma_constant(n, n - 1) / (extension_constant(n) * sigma_constant(n, 2))


def _chain_preconditions(E, alphas, desc, name):
    for a in alphas:
        excess, scale = _monotone_excess(E, a)
        if excess > _monotone_tol(scale):
            return skip_record(name, "chain of Lemma applications", desc, f"phi_{a:g} increases by {excess:.3e}")
    return None


def _avg_v(E):
    f = RadialDensity.of_set(E)
    return newton_pairing(_ball_density(E.n), f) / unit_ball_volume(E.n)


def check_odd_chain(E, descriptor=None):
    """avg_{B_1} v <= C_chain gamma_0(E)/(n - 1) for odd n >= 5."""
    E = _centered(E)
    n = E.n
    if n < 5 or n % 2 == 0:
        raise ValueError("odd chain needs odd n >= 5")
    desc = descriptor or describe(E)
    skip = _chain_preconditions(E, range(2, n - 2, 2), desc, "odd_chain")
    if skip is not None:
        return [skip]
    gamma0 = gamma_at_center(E, np.zeros(n))
    rhs = odd_chain_constant(n) * gamma0 / (n - 1)
    return [inequality_record("odd_chain", "avg_B1 v <= C gamma(E)/(n-1)", _avg_v(E), rhs, desc)]


def extension_derivative_pairs(E, radii=(0.25, 0.5, 0.75, 1.0), h=0.01, n_points=1200):
    """(phi_u~'(R), -C~_n avg_{B_R} I_{n-2} f_E) at each radius.

    phi_u~ is the sphere mean of the reflected harmonic extension of
    I_{n-1} f_E in R^(n+1); its derivative is a central difference.
    """
    E = _centered(E)
    n = E.n
    dens = RadialDensity.of_set(E)
    prof = riesz_potential_radial(E, n - 1, radial_grid(dens.jumps, n_points=n_points))
    c = extension_constant(n)
    out = []
    for R in radii:
        lhs = (extension_sphere_mean(prof, R + h) - extension_sphere_mean(prof, R - h)) / (2 * h)
        rhs = -c * riesz_ball_average(E, n - 2, R)
        out.append((R, lhs, rhs))
    return out


def check_even_chain(E, extension=True, descriptor=None):
    """Even-dimensional chain.

    (a) with ``extension``: the derivative of the extension sphere mean
    matches -C~_n avg_{B_R} I_{n-2} f_E within 2% at R = 0.25, 0.5, 0.75, 1.
    (b) avg_{B_1} I_{n-2} f_E <= I_{n-1} f_E(0) / C~_n.
    (c) the full chain avg_{B_1} v <= C_chain gamma_0/(n - 1).
    """
    E = _centered(E)
    n = E.n
    if n < 4 or n % 2:
        raise ValueError("even chain needs even n >= 4")
    desc = descriptor or describe(E)
    out = []
    if extension:
        for R, lhs, rhs in extension_derivative_pairs(E):
            res = abs(lhs - rhs) / max(abs(rhs), 1e-12)
            out.append(identity_record("even_extension_derivative", "phi_u' = -C~ avg_BR I_{n-2} f",
                                       lhs, rhs, f"{desc} R={R:g}", tol=EXTENSION_REL_TOL, residual=res))
    avg = riesz_ball_average(E, n - 2)
    at0 = float(riesz_values(E, n - 1, 0.0))
    out.append(inequality_record("even_to_show", "avg_B1 I_{n-2} f <= I_{n-1} f(0) / C~",
                                 avg, at0 / extension_constant(n), desc))
    skip = _chain_preconditions(E, range(2, n - 1, 2), desc, "even_chain")
    if skip is not None:
        out.append(skip)
    else:
        rhs = even_chain_constant(n) * gamma_at_center(E, np.zeros(n)) / (n - 1)
        out.append(inequality_record("even_chain", "avg_B1 v <= C gamma(E)/(n-1)", _avg_v(E), rhs, desc))
    return out


# --------------------------------------------------------------------------
# batteries


def seeded_sets(n, count, seed, n_intervals=None):
    """Deterministic random unit-volume radial sets with their descriptors."""
    out = []
    for k in range(count):
        rng = np.random.default_rng([seed, n, k])
        E = random_radial_set(n, rng, n_intervals)
        out.append((E, describe(E, f"random(seed={seed},index={k})")))
    return out


def _fixed_sets(n):
    sets = [(RadialSet.ball(n), describe(RadialSet.ball(n), "ball"))]
    for eps in (0.3, 0.5):
        E = annulus_family(eps, n)
        sets.append((E, describe(E, f"annulus(eps={eps:g})")))
    return sets


def battery_n3(seed=0, count=20):
    recs = []
    for E, d in _fixed_sets(3) + seeded_sets(3, count, seed):
        recs.append(check_quadratic_positivity(E, d))
        recs.extend(check_nl_upper_bound(E, d))
        recs.extend(check_mean_value_n3(E, d))
        recs.append(check_main_route_n3(E, d))
    return recs


def battery_lemma(n=5, seed=0, count=20):
    recs = []
    alphas = [a for a in range(2, n - 2, 2)]
    for E, d in _fixed_sets(n) + seeded_sets(n, count, seed):
        for a in alphas:
            recs.extend(check_lemma(E, a, d))
    E = annulus_family(0.4, n)
    recs.extend(check_laplace_and_semigroup(E, descriptor=describe(E, "annulus(eps=0.4)")))
    return recs


def battery_odd(n=5, seed=0, count=20):
    if n % 2 == 0:
        raise ValueError("odd battery needs odd n")
    recs = []
    for E, d in _fixed_sets(n) + seeded_sets(n, count, seed):
        recs.extend(check_odd_chain(E, d))
    return recs


def battery_even(n=4, seed=0, count=20):
    if n % 2:
        raise ValueError("even battery needs even n")
    recs = []
    for k, (E, d) in enumerate(_fixed_sets(n)):
        recs.extend(check_even_chain(E, extension=k > 0, descriptor=d))
    for E, d in seeded_sets(n, count, seed):
        recs.extend(check_even_chain(E, extension=False, descriptor=d))
    return recs


def battery_counterexample(n=4):
    return check_counterexample_scan(n)


def run_suite(suite, n=None, seed=0, count=20):
    """Records for a named suite; ``n`` selects the dimension where relevant."""
    if suite not in SUITES:
        raise ValueError(f"unknown suite {suite!r}; choose from {', '.join(SUITES)}")
    if suite == "n3":
        return battery_n3(seed, count)
    if suite == "lemma":
        return battery_lemma(n or 5, seed, count)
    if suite == "odd":
        return battery_odd(n or 5, seed, count)
    if suite == "even":
        return battery_even(n or 4, seed, count)
    if suite == "counterexample":
        return battery_counterexample(n or 4)
    recs = battery_n3(seed, count)
    for m in (5, 7):
        recs += battery_lemma(m, seed, count)
        recs += battery_odd(m, seed, count)
    for m in (4, 6):
        recs += battery_even(m, seed, count)
    for m in (3, 4, 6):
        recs += battery_counterexample(m)
    return recs


def summarize(records):
    counts = {"pass": 0, "fail": 0, "skip": 0}
    for r in records:
        counts[r.status] += 1
    return counts


def records_to_csv(records, fh=None):
    buf = io.StringIO() if fh is None else fh
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(VerdictRecord.csv_header())
    for r in records:
        w.writerow(r.csv_row())
    return buf.getvalue() if fh is None else None
