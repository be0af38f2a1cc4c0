import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from liquiddrop import energy_opt as eo
from liquiddrop.errors import ConfigError, DomainError
from liquiddrop.shapes import (
    RadialSet, StarSurface, annulus_family, perturbed_ball, random_radial_set, random_star_surface,
    unit_ball_volume,
)

NL_BALL_3 = 32 * math.pi**2 / 15


def test_lambda_from_mass_examples():
    assert eo.lambda_from_mass(unit_ball_volume(3)) == pytest.approx(1.0)
    assert eo.lambda_from_mass(8 * unit_ball_volume(3)) == pytest.approx(8.0)
    assert eo.lambda_from_mass(16 * unit_ball_volume(4), n=4) == pytest.approx(8.0)
    with pytest.raises(DomainError):
        eo.lambda_from_mass(0.0)


def test_total_energy_ball():
    e = eo.total_energy(RadialSet.ball(3), 1.0)
    assert e.perimeter == pytest.approx(4 * math.pi)
    assert e.total == pytest.approx(4 * math.pi + NL_BALL_3, rel=1e-13)
    assert e.csv_row()[2] == "1.0"


def test_total_energy_star_ball_surface_default():
    e = eo.total_energy(StarSurface.ball(), 0.5)
    assert e.total == pytest.approx(4 * math.pi + 0.5 * NL_BALL_3, rel=1e-5)


def test_total_energy_rejects_wrong_volume():
    with pytest.raises(DomainError):
        eo.total_energy(RadialSet.ball(3, 1.1), 1.0)


def test_annulus_costs_more_than_ball():
    lam = 0.5
    assert eo.total_energy(annulus_family(0.3, 3), lam).total > eo.total_energy(RadialSet.ball(3), lam).total


def test_ball_beats_small_perturbation_at_small_lambda():
    lam = 0.1
    assert eo.total_energy(perturbed_ball(2, 0.05), lam).total > eo.total_energy(StarSurface.ball(), lam).total


@settings(max_examples=15)
@given(m=st.floats(0.01, 50.0), seed=st.integers(0, 2**32 - 1), n=st.integers(3, 6))
def test_scaling_consistency_radial(m, seed, n):
    E = random_radial_set(n, np.random.default_rng(seed))
    assert eo.scaling_consistency(m, E).passed


def test_scaling_consistency_star():
    S = random_star_surface(np.random.default_rng(4))
    rec = eo.scaling_consistency(2.5, S)
    assert rec.passed and rec.margin < 1e-10


def test_two_ball_threshold_value():
    assert eo.two_ball_threshold() == pytest.approx(0.41922270487352764, rel=1e-14)
    with pytest.raises(DomainError):
        eo.two_ball_threshold(4)


def test_two_ball_threshold_explicit_agrees():
    assert eo.two_ball_threshold_explicit(grid=(16, 32)) == pytest.approx(eo.two_ball_threshold(), rel=0.01)


def test_stability_sweep_structure_and_signs():
    rep = eo.mode_stability_sweep(L=3, lambdas=np.linspace(0, 0.6, 4), grid_res=24)
    assert rep.modes == (2, 3)
    assert rep.perimeter_part[2] > 0 and rep.nonlocal_part[2] < 0
    for l in rep.modes:
        for lam in rep.lambdas:
            assert rep.second_diff[(l, lam)] == pytest.approx(rep.perimeter_part[l] + lam * rep.nonlocal_part[l])
            assert rep.second_diff[(l, lam)] > 0
        assert rep.brackets[l] is None
    lines = rep.to_csv().splitlines()
    assert lines[0] == "l,lambda,d2,d2_perimeter,d2_nonlocal,sign,inconclusive"
    assert len(lines) == 1 + 2 * 4 + 1
    assert lines[-1].startswith("two_ball,0.4192")


def test_second_difference_matches_direct_energies():
    lam, h = 0.3, 0.02
    rep = eo.mode_stability_sweep(L=2, lambdas=[lam], h=h, grid_res=24)
    vals = [eo.total_energy(perturbed_ball(2, a, grid_res=24), lam).total for a in (h, 0.0, -h)]
    direct = (vals[0] - 2 * vals[1] + vals[2]) / h**2
    assert rep.second_diff[(2, lam)] == pytest.approx(direct, rel=1e-8)


def test_stability_sweep_config_errors():
    with pytest.raises(ConfigError):
        eo.mode_stability_sweep(L=1)
    with pytest.raises(ConfigError):
        eo.mode_stability_sweep(L=20, grid_res=16)


def test_descent_monotone_and_rounds_up():
    res = eo.gradient_descent_shape(perturbed_ball(2, 0.1), lam=0.1, steps=40)
    totals = [s.energy.total for s in res.trajectory]
    assert all(b <= a + 1e-12 for a, b in zip(totals, totals[1:]))
    assert res.trajectory[-1].beta_squared < 1e-3
    assert res.status in ("converged", "budget")
    lines = res.to_csv().splitlines()
    assert lines[0].startswith("step,perimeter,nonlocal,lambda,total")
    assert len(lines) == len(res.trajectory) + 1


def test_descent_budget_status():
    res = eo.gradient_descent_shape(perturbed_ball(2, 0.1), lam=0.1, steps=1)
    assert res.status == "budget" and len(res.trajectory) == 2


def test_descent_needs_star_shape():
    with pytest.raises(TypeError):
        eo.gradient_descent_shape(RadialSet.ball(3))


def test_flat_config_parser():
    schema = eo.config_schema(eo.SweepConfig)
    cfg = eo.parse_flat_config("# sweep\nmax_degree = 3\nlambda_max=0.5  # upper\n", schema)
    assert cfg == {"max_degree": 3, "lambda_max": 0.5}
    sc = eo.SweepConfig(**cfg)
    assert sc.lambdas()[-1] == 0.5


@pytest.mark.parametrize("text", ["bogus = 1", "max_degree = 2\nmax_degree = 3", "max_degree = two", "max_degree"])
def test_flat_config_errors(text):
    with pytest.raises(ConfigError):
        eo.parse_flat_config(text, eo.config_schema(eo.SweepConfig))


def test_descent_config_schema_tuple():
    schema = eo.config_schema(eo.DescentConfig)
    assert eo.parse_flat_config("grid = 16x32", schema) == {"grid": (16, 32)}
