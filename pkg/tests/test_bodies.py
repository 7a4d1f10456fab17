import json

import numpy as np
import pytest

from flagtomo.bodies import (
    Ball,
    BodySpec,
    Ellipsoid,
    SampledSupport,
    ZonalHarmonic,
    ball,
    ellipsoid,
    is_convex,
    minkowski_sum,
    restrict,
    support,
    surface_point,
    tangent_gradient,
    translated,
    zonal_harmonic,
)
from flagtomo.errors import InvalidParameter, NonSmooth
from flagtomo.bodies import CallableSupport

from conftest import gallery, random_directions


def test_unit_ball():
    assert Ball(1).evaluate([0.3, -0.2, 0.9]) == pytest.approx(1.0)


def test_translated_ball():
    assert Ball(1, (0, 0, 0.3)).evaluate([0, 0, 1]) == pytest.approx(1.3)


def test_ellipsoid_axis():
    assert Ellipsoid(2, 1, 1).evaluate([1, 0, 0]) == pytest.approx(2.0)


def test_ellipsoid_matches_quadratic_form():
    d = random_directions(50)
    rot = np.linalg.qr(np.random.default_rng(3).normal(size=(3, 3)))[0]
    E = Ellipsoid(1.5, 1.0, 0.5, rot)
    A = rot @ np.diag([1.5**2, 1.0, 0.25]) @ rot.T
    assert np.allclose(E(d), np.sqrt(np.einsum("ni,ij,nj->n", d, A, d)), atol=1e-14)


@pytest.mark.parametrize("spec", [ball(0), ball(-1), ellipsoid(1, 0, 1), ellipsoid(1, 1, -2)])
def test_nonpositive_sizes_rejected(spec):
    with pytest.raises(InvalidParameter):
        support(spec)


def test_unknown_kind_and_missing_parameter():
    with pytest.raises(InvalidParameter):
        support(BodySpec("cube", {}))
    with pytest.raises(InvalidParameter):
        BodySpec.from_dict({"kind": "ellipsoid", "a": 1, "b": 1})


def test_spec_json_round_trip():
    spec = translated(minkowski_sum(ball(0.5), ellipsoid(2, 1, 1)), (0.1, 0.2, 0.3))
    again = BodySpec.from_json(json.dumps(spec.to_dict()))
    d = random_directions(20)
    assert np.allclose(support(again)(d), support(spec)(d))
    assert support(spec).evaluate([0, 0, 1]) == pytest.approx(0.5 + 1 + 0.3)


def test_homogeneous_extension():
    E = Ellipsoid(2, 1, 1)
    assert E.homogeneous([3.0, 0, 0]) == pytest.approx(6.0)


def test_minkowski_sum_adds():
    d = random_directions(10)
    assert np.allclose((Ball(1) + Ellipsoid(2, 1, 1))(d), 1 + Ellipsoid(2, 1, 1)(d))


def test_restriction_of_constant_and_linear():
    assert np.allclose(restrict(Ball(2.0), [0.1, 0.2, 0.9])(np.linspace(0, 6, 7)), 2.0)
    a = np.array([0.0, 0.0, 0.5])
    h = restrict(CallableSupport(lambda u: u @ a), [1, 0, 0])
    phi = np.linspace(0, 2 * np.pi, 9)
    assert np.allclose(h(phi), 0.5 * np.sin(phi))


def test_ellipsoid_restriction_formula():
    h = restrict(Ellipsoid(2, 1, 1), [0, 0, 1])
    phi = np.array([0.0, 0.4, np.pi / 2])
    assert np.allclose(h(phi), np.sqrt(4 * np.cos(phi) ** 2 + np.sin(phi) ** 2))


@pytest.mark.parametrize("H,w,pos", [
    (Ball(1), [0, 0, 1], [0, 0, 1]),
    (Ball(1, (0.2, 0, 0)), [0, 0, 1], [0.2, 0, 1]),
    (Ellipsoid(2, 1, 1), [1, 0, 0], [2, 0, 0]),
])
def test_surface_point_examples(H, w, pos):
    assert np.allclose(surface_point(H, w).position, pos, atol=1e-8)


def test_surface_point_matches_implicit_normal():
    # boundary point of x^T A^-1 x = 1 with normal w is A w / H(w)
    E = Ellipsoid(2, 1.2, 0.7)
    A = np.diag([4, 1.44, 0.49])
    for w in random_directions(5, 2):
        assert np.allclose(surface_point(E, w).position, A @ w / E(w), atol=1e-8)


def test_support_consistency_of_surface_points():
    E = Ellipsoid(2, 1, 1)
    W = random_directions(40, 5)
    P = surface_point(E, W).position
    # every boundary point lies in the supporting half-spaces of all normals
    assert np.all(W @ P.T <= E(W)[:, None] + 1e-9)


def test_non_smooth_gradient_detected():
    kink = CallableSupport(lambda u: np.abs(u[..., 0]) + 1.0, smoothness_order=0)
    with pytest.raises(NonSmooth):
        tangent_gradient(kink, [1e-5, 0.6, 0.8])


@pytest.mark.parametrize("name", list(gallery()))
def test_gallery_bodies_convex(name):
    assert is_convex(gallery()[name][0])


def test_non_convex_detected():
    bumpy = CallableSupport(lambda u: 1 + 0.2 * np.cos(6 * np.arctan2(u[..., 1], u[..., 0])) * (1 - u[..., 2] ** 2))
    assert not is_convex(bumpy)


def test_sampled_support_interpolates():
    E = Ellipsoid(2, 1, 1)
    S = SampledSupport.from_function(E, 32, 64)
    d = random_directions(200, 4)
    assert np.max(np.abs(S(d) - E(d))) < 1e-4
    assert np.allclose(S([[0, 0, 1.0], [0, 0, -1.0]]), 1.0, atol=1e-4)


def test_zonal_harmonic():
    Z = ZonalHarmonic(1.0, 0.05, 3)
    assert Z.evaluate([0, 0, 1]) == pytest.approx(1.05)
    assert support(zonal_harmonic(1.0, 0.05, 3)).evaluate([0, 0, -1]) == pytest.approx(0.95)
