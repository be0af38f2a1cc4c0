import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from liquiddrop.errors import DomainError, ShapeFormatError
from liquiddrop.shapes import (RadialSet, StarSurface, annulus_family, dump_shape, load_shape, perturbed_ball,
                               random_radial_set, random_star_surface, rescale_to_unit_volume, shape_from_dict,
                               two_ball_union, unit_ball_volume, unit_sphere_area)

dims = st.integers(3, 10)


def test_unit_ball_measures():
    assert unit_ball_volume(3) == pytest.approx(4 * math.pi / 3, rel=1e-15)
    assert unit_ball_volume(4) == pytest.approx(math.pi**2 / 2, rel=1e-15)
    assert unit_sphere_area(3) == pytest.approx(4 * math.pi, rel=1e-15)


@given(n=dims, eps=st.floats(0.01, 0.9))
def test_annulus_has_unit_volume(n, eps):
    E = annulus_family(eps, n)
    assert E.volume() == pytest.approx(unit_ball_volume(n), rel=1e-12)
    assert E.perimeter() > unit_sphere_area(n)


@given(n=dims, seed=st.integers(0, 2**32 - 1))
def test_random_radial_sets_are_valid(n, seed):
    E = random_radial_set(n, np.random.default_rng(seed))
    assert 2 <= len(E.intervals) <= 4
    assert E.volume() == pytest.approx(unit_ball_volume(n), rel=1e-12)


@given(n=dims, s=st.floats(0.2, 5.0))
def test_radial_homothety_scaling(n, s):
    E = annulus_family(0.4, n)
    F = E.scaled(s)
    assert F.volume() == pytest.approx(s**n * E.volume(), rel=1e-12)
    assert F.perimeter() == pytest.approx(s ** (n - 1) * E.perimeter(), rel=1e-12)


def test_radial_validation():
    with pytest.raises(DomainError):
        RadialSet(3, ((0.5, 0.2),))
    with pytest.raises(DomainError):
        RadialSet(3, ((0.0, 0.5), (0.4, 0.8)))
    with pytest.raises(DomainError):
        RadialSet(2, ((0.0, 1.0),))
    with pytest.raises(DomainError):
        annulus_family(1.5, 3)


def test_ball_star_surface_is_exact():
    B = StarSurface.ball()
    assert B.volume() == pytest.approx(unit_ball_volume(3), rel=1e-14)
    assert B.perimeter() == pytest.approx(4 * math.pi, rel=1e-14)
    np.testing.assert_allclose(B.normals(), B.sphere.directions, atol=1e-14)


def test_perturbed_ball_resolution_independent():
    a = perturbed_ball(2, 0.1, grid_res=32)
    b = perturbed_ball(2, 0.1, grid_res=64)
    assert a.volume() == pytest.approx(unit_ball_volume(3), rel=1e-13)
    assert a.perimeter() == pytest.approx(b.perimeter(), rel=1e-12)


def test_normals_are_outward_unit_vectors():
    S = perturbed_ball(3, 0.15)
    nu = S.normals()
    np.testing.assert_allclose(np.linalg.norm(nu, axis=1), 1.0, atol=1e-13)
    assert np.all(np.sum(nu * S.sphere.directions, axis=1) > 0)


def test_divergence_of_position_gives_volume():
    # int_dE x.nu dA = 3 |E|
    S = random_star_surface(np.random.default_rng(3), L=3, amplitude=0.15)
    flux = np.sum(S.area_elements() * np.sum(S.boundary_points() * S.normals(), axis=1))
    assert flux == pytest.approx(3 * S.volume(), rel=1e-12)


@given(v=st.tuples(*[st.floats(-2, 2)] * 3), s=st.floats(0.5, 2.0))
def test_star_translation_and_scaling(v, s):
    S = perturbed_ball(2, 0.1, grid_res=24)
    T = S.translated(v).scaled(s)
    assert T.volume() == pytest.approx(s**3 * S.volume(), rel=1e-12)
    assert T.perimeter() == pytest.approx(s**2 * S.perimeter(), rel=1e-12)
    np.testing.assert_allclose(T.barycenter(), np.add(S.barycenter(), v), atol=1e-12)


def test_contains():
    S = StarSurface.ball(center=(1.0, 0.0, 0.0))
    assert S.contains([[1.0, 0.0, 0.5], [1.0, 0.0, 1.5]]).tolist() == [True, False]


def test_nonpositive_radius_rejected():
    with pytest.raises(DomainError):
        StarSurface(2, {(2, 0): 5.0})


def test_two_ball_union():
    U = two_ball_union(5.0, grid=(16, 32))
    assert U.volume() == pytest.approx(unit_ball_volume(3), rel=1e-13)
    assert U.perimeter() == pytest.approx(2 ** (1 / 3) * 4 * math.pi, rel=1e-13)
    with pytest.raises(DomainError):
        two_ball_union(1.0)


def test_rescale_to_unit_volume():
    E = RadialSet(5, ((0.2, 0.7), (0.9, 1.3)))
    assert rescale_to_unit_volume(E).volume() == pytest.approx(unit_ball_volume(5), rel=1e-13)


def test_json_round_trip(tmp_path):
    for shape in (annulus_family(0.3, 4).translated([0.1, 0, 0, 0]), perturbed_ball(3, 0.05, grid_res=16)):
        path = tmp_path / "s.json"
        dump_shape(shape, path)
        back = load_shape(path)
        assert back.volume() == pytest.approx(shape.volume(), rel=1e-14)
        assert back.to_json() == shape.to_json()


@pytest.mark.parametrize("doc, field", [
    ({"kind": "radial", "n": 3, "intervals": [[0.5, 0.2]]}, "intervals"),
    ({"kind": "radial", "n": 3, "intervals": [[0, 1]], "colour": 1}, "colour"),
    ({"kind": "radial", "intervals": [[0, 1]]}, "n"),
    ({"kind": "cube"}, "kind"),
    ({"kind": "star", "L": 2, "coeffs": [1, 2]}, "coeffs"),
    ({"kind": "star", "L": 2, "coeffs": {"2": 0.1}}, "coeffs"),
    ({"kind": "star", "L": 2, "grid": [8]}, "grid"),
])
def test_malformed_documents_name_the_field(doc, field):
    with pytest.raises(ShapeFormatError) as info:
        shape_from_dict(doc)
    assert info.value.field == field


def test_invalid_json(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{not json")
    with pytest.raises(ShapeFormatError):
        load_shape(p)
    p.write_text(json.dumps([1, 2]))
    with pytest.raises(ShapeFormatError):
        load_shape(p)
