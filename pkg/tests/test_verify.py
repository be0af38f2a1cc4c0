import csv
import io
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from liquiddrop import verify
from liquiddrop.potentials import sigma_constant
from liquiddrop.shapes import RadialSet, annulus_family, random_radial_set


def test_inequality_record_margin_and_verdict():
    ok = verify.inequality_record("x", "a <= b", 1.0, 2.0, "d")
    assert ok.margin == 1.0 and ok.passed and ok.status == "pass" and ok.kind == "inequality"
    near = verify.inequality_record("x", "a <= b", 1.0 + 1e-10, 1.0, "d")
    assert near.passed
    bad = verify.inequality_record("x", "a <= b", 2.0, 1.0, "d")
    assert not bad.passed and bad.status == "fail"


def test_identity_record_uses_residual():
    rec = verify.identity_record("x", "a = b", 1.0, 1.0 + 1e-7, "d")
    assert rec.margin == pytest.approx(1e-7) and rec.passed and rec.kind == "identity"
    rec = verify.identity_record("x", "a = b", 1.0, 3.0, "d", residual=0.5, tol=1.0)
    assert rec.margin == 0.5 and rec.passed


def test_skip_record():
    rec = verify.skip_record("x", "a", "desc", "hypothesis fails")
    assert rec.status == "skip" and rec.kind == "conditional" and not rec.passed
    assert "hypothesis fails" in rec.input_descriptor
    assert math.isnan(rec.margin)


def test_csv_layout():
    recs = [verify.inequality_record("x", "a, b", 0.0, 1.0, "d"), verify.skip_record("y", "a", "d", "r")]
    text = verify.records_to_csv(recs)
    rows = list(csv.reader(io.StringIO(text)))
    assert rows[0] == ["check_name", "anchor", "lhs", "rhs", "margin", "tolerance", "passed",
                       "input_descriptor", "kind", "status"]
    assert rows[1][1] == "a, b"
    assert rows[1][6] == "true" and rows[2][9] == "skip"
    assert verify.summarize(recs) == {"pass": 1, "fail": 0, "skip": 1}


def test_ball_checks_are_tight():
    B = RadialSet.ball(3)
    recs = verify.check_nl_upper_bound(B) + verify.check_mean_value_n3(B)
    assert all(r.passed for r in recs)
    assert recs[0].margin == pytest.approx(0.0, abs=1e-12)


def test_annulus_mean_value_values():
    E = annulus_family(0.5, 3)
    R = E.intervals[0][1]
    ineq, ident = verify.check_mean_value_n3(E)
    # v(0) = 2 pi (1 - R^2 + eps^2)
    assert ineq.rhs == pytest.approx(4 * math.pi * (1 - R * R + 0.25), rel=1e-12)
    assert ident.passed


@settings(max_examples=20)
@given(seed=st.integers(0, 2**32 - 1))
def test_n3_route_on_random_sets(seed):
    E = random_radial_set(3, np.random.default_rng(seed))
    recs = [verify.check_quadratic_positivity(E), *verify.check_nl_upper_bound(E),
            *verify.check_mean_value_n3(E), verify.check_main_route_n3(E)]
    assert all(r.passed for r in recs), [r for r in recs if not r.passed]


def test_off_center_sets_are_recentered():
    E = annulus_family(0.4, 3)
    moved = E.translated((0.5, 0.0, 0.0))
    assert verify.check_main_route_n3(moved).margin == pytest.approx(verify.check_main_route_n3(E).margin)


@pytest.mark.parametrize("n,alpha", [(5, 2), (7, 2), (7, 4)])
def test_lemma_on_annuli(n, alpha):
    recs = verify.check_lemma(annulus_family(0.4, n), alpha)
    assert [r.check_name for r in recs] == ["lemma_i", "lemma_ii", "lemma_iii"]
    assert all(r.passed for r in recs)


def test_lemma_rejects_out_of_range():
    with pytest.raises(ValueError):
        verify.check_lemma(annulus_family(0.4, 4), 2)
    with pytest.raises(ValueError):
        verify.check_lemma(annulus_family(0.4, 7), 5)


def test_lemma_skips_when_hypothesis_fails(monkeypatch):
    real = verify._monotone_excess

    def rising(E, alpha, n_points=verify.MONOTONE_GRID_POINTS):
        return (1e-3, 1.0) if alpha == 2 else real(E, alpha, n_points)

    monkeypatch.setattr(verify, "_monotone_excess", rising)
    E = annulus_family(0.4, 7)
    recs = verify.check_lemma(E, 2)
    assert all(r.status == "skip" for r in recs)
    assert "phi_2 increases" in recs[0].input_descriptor
    assert verify.check_lemma(E, 4)[0].status == "pass"
    assert verify.check_odd_chain(E)[0].status == "skip"
    assert verify.check_even_chain(annulus_family(0.4, 6), extension=False)[-1].status == "skip"


@settings(max_examples=40)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(3, 8))
def test_phi2_nonincreasing_for_every_radial_set(seed, n):
    E = random_radial_set(n, np.random.default_rng(seed))
    assert verify.phi_is_decreasing(E, 2)


def test_laplace_and_semigroup_identities():
    recs = verify.check_laplace_and_semigroup(annulus_family(0.4, 5))
    assert [r.check_name for r in recs] == [
        "riesz_laplace", "riesz_laplace_refinement", "riesz_semigroup", "riesz_semigroup_refinement"]
    assert all(r.passed for r in recs), recs


@pytest.mark.parametrize("n", [4, 6])
def test_counterexample_slope(n):
    recs = verify.check_counterexample_scan(n)
    slope = recs[-1]
    assert slope.lhs == pytest.approx(3 - n, abs=verify.SLOPE_TOL)
    assert all(r.passed for r in recs)


def test_counterexample_control_n3():
    (rec,) = verify.check_counterexample_scan(3)
    assert rec.check_name == "counterexample_control" and rec.passed


def test_counterexample_rejects_bad_eps():
    with pytest.raises(ValueError):
        verify.check_counterexample_scan(4, (0.05, 0.1))


def test_annulus_ratio_small_eps_is_finite():
    assert math.isfinite(verify.annulus_ratio(6, 1e-4))
    assert verify.annulus_ratio(6, 1e-4) > verify.annulus_ratio(6, 1e-3)


def test_chain_constants():
    assert verify.extension_constant(4) == pytest.approx(3 / 8, rel=1e-14)
    assert verify.odd_chain_constant(5) == pytest.approx(10 * sigma_constant(5, 4) / sigma_constant(5, 2))
    expected7 = 2 * 7 * 9 * 2 * 7 * sigma_constant(7, 6) / sigma_constant(7, 2)
    assert verify.odd_chain_constant(7) == pytest.approx(expected7, rel=1e-13)
    assert verify.even_chain_constant(4) == pytest.approx(
        sigma_constant(4, 3) / (0.375 * sigma_constant(4, 2)), rel=1e-13)


def test_extension_derivative_identity():
    pairs = verify.extension_derivative_pairs(annulus_family(0.3, 4), radii=(0.5, 1.0))
    for _, lhs, rhs in pairs:
        assert lhs == pytest.approx(rhs, rel=verify.EXTENSION_REL_TOL)


def test_even_chain_records():
    recs = verify.check_even_chain(annulus_family(0.5, 4), extension=False)
    assert [r.check_name for r in recs] == ["even_to_show", "even_chain"]
    assert all(r.passed for r in recs)


def test_seeded_sets_are_deterministic():
    a = verify.seeded_sets(5, 3, 9)
    b = verify.seeded_sets(5, 3, 9)
    assert [d for _, d in a] == [d for _, d in b]
    assert a[0][1] != verify.seeded_sets(5, 3, 10)[0][1]


def test_run_suite_dispatch():
    recs = verify.run_suite("odd", n=5, count=3)
    assert all(r.check_name == "odd_chain" for r in recs)
    assert verify.summarize(recs)["fail"] == 0
    with pytest.raises(ValueError):
        verify.run_suite("bogus")
    with pytest.raises(ValueError):
        verify.run_suite("even", n=5)
