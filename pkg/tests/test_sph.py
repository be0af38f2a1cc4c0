import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from liquiddrop.sph import mode_list, real_sph_harm, real_sph_harm_table, sphere_grid


def test_grid_weights_sum_to_sphere_area():
    g = sphere_grid(16, 32)
    assert g.weights.sum() == pytest.approx(4 * np.pi, rel=1e-14)


def test_gram_matrix_is_identity():
    g = sphere_grid(24, 48)
    gram = g.gram(6)
    assert np.max(np.abs(gram - np.eye(gram.shape[0]))) < 1e-12


def test_mode_count():
    assert len(mode_list(4)) == 25


@given(l=st.integers(1, 6), data=st.data())
def test_derivatives_match_finite_differences(l, data):
    m = data.draw(st.integers(-l, l))
    th = data.draw(st.floats(0.3, 2.8))
    ph = data.draw(st.floats(0.0, 6.0))
    h = 1e-6
    _, yt, yp = real_sph_harm(l, m, th, ph, derivatives=True)
    fd_t = (real_sph_harm(l, m, th + h, ph) - real_sph_harm(l, m, th - h, ph)) / (2 * h)
    fd_p = (real_sph_harm(l, m, th, ph + h) - real_sph_harm(l, m, th, ph - h)) / (2 * h)
    assert yt == pytest.approx(fd_t, abs=1e-7)
    assert yp == pytest.approx(fd_p, abs=1e-7)


def test_table_matches_single_mode_evaluation(rng):
    th = rng.uniform(0, np.pi, 500)
    ph = rng.uniform(0, 2 * np.pi, 500)
    table = real_sph_harm_table(7, th, ph)
    for l, m in mode_list(7):
        np.testing.assert_allclose(table[(l, m)], real_sph_harm(l, m, th, ph), atol=1e-11)


def test_low_order_closed_forms():
    th = np.linspace(0.1, 3.0, 7)
    np.testing.assert_allclose(real_sph_harm(0, 0, th, 0.0), 0.5 / np.sqrt(np.pi))
    np.testing.assert_allclose(real_sph_harm(1, 0, th, 0.0), np.sqrt(3 / (4 * np.pi)) * np.cos(th))


def test_rejects_bad_order():
    with pytest.raises(ValueError):
        real_sph_harm(2, 3, 0.5, 0.5)
