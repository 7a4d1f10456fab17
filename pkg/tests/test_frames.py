import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from flagtomo.errors import DegenerateFrame, NearPoleSingularity
from flagtomo.frames import (
    CANONICAL,
    Direction,
    DualFlag,
    Flag,
    Frame,
    SphericalCoord,
    angle_on_circle,
    dual,
    east_north,
    flag_to_point,
    latlong_frames,
    rotate_flag_about,
    rotation_derivatives,
    to_spherical,
)

from conftest import random_directions

unit = st.tuples(*[st.floats(-1, 1, allow_nan=False)] * 3).filter(lambda v: np.linalg.norm(v) > 0.1)
# the East reference loses about eps / sin(theta) near the pole, so keep off it
off_pole = unit.filter(lambda v: np.hypot(v[0], v[1]) > 1e-4 * np.linalg.norm(v))
angle = st.floats(0, 2 * np.pi, allow_nan=False, exclude_max=True)


def test_direction_normalised():
    d = Direction(3, 4, 0)
    assert abs(np.linalg.norm(d.vec) - 1) < 1e-12
    assert np.allclose(d.vec, [0.6, 0.8, 0])


def test_zero_direction_rejected():
    with pytest.raises(ValueError):
        Direction(0, 0, 0)


def test_frame_right_handed():
    f = Frame(Direction(0.2, 0.3, 0.9), Direction(1, 0, 0))
    M = f.matrix()
    assert np.allclose(M @ M.T, np.eye(3), atol=1e-12)
    assert np.allclose(np.cross(f.pole.vec, f.east.vec), f.north.vec, atol=1e-12)
    assert np.linalg.det(M) == pytest.approx(1.0)


def test_canonical_frame():
    assert np.allclose(CANONICAL.north.vec, [0, 1, 0])


@given(st.floats(-1.5, 1.5), angle)
def test_spherical_round_trip(nu, tau):
    c = SphericalCoord(nu, tau)
    back = SphericalCoord.from_direction(c.to_direction())
    assert back.nu == pytest.approx(nu, abs=1e-10)
    assert np.angle(np.exp(1j * (back.tau - c.tau))) == pytest.approx(0, abs=1e-10)


def test_flag_point_east_and_north():
    assert np.allclose(flag_to_point([0, 0, 1], 0.0), [1, 0, 0])
    assert np.allclose(flag_to_point([0, 0, 1], np.pi / 2), [0, 1, 0], atol=1e-15)


@given(unit, angle)
def test_flag_point_orthogonal(w, phi):
    w = np.array(w) / np.linalg.norm(w)
    assert abs(flag_to_point(w, phi) @ w) < 1e-12


def test_east_north_away_from_pole():
    w = np.array([1.0, 0.0, 0.0])
    e, n = east_north(w)
    assert np.allclose(e, [0, 1, 0]) and np.allclose(n, [0, 0, 1])


def test_pole_requires_fallback_for_explicit_frame():
    with pytest.raises(DegenerateFrame):
        east_north([0, 0, 1], CANONICAL)
    e, _ = east_north([0, 0, 1], CANONICAL, fallback=True)
    assert np.allclose(e, [1, 0, 0])


def test_dual_example():
    d = dual(Flag(Direction(0, 0, 1), 0.0))
    assert np.allclose(d.Omega.vec, [1, 0, 0])
    assert d.phi_star == pytest.approx(float(angle_on_circle([1, 0, 0], [0, 0, 1])))


@settings(max_examples=200)
@given(off_pole, angle)
def test_dual_involution(w, phi):
    f = Flag(Direction(*w), phi)
    g = dual(dual(f))
    assert isinstance(g, Flag)
    assert np.allclose(g.omega.vec, f.omega.vec, atol=1e-10)
    assert abs(np.angle(np.exp(1j * (g.phi - f.phi)))) < 1e-10


def test_dual_involution_many():
    rng = np.random.default_rng(1)
    W = random_directions(1000, 1)
    for w, phi in zip(W, rng.uniform(0, 2 * np.pi, 1000)):
        g = dual(dual(Flag(Direction.of(w), phi)))
        assert np.allclose(g.omega.vec, w, atol=1e-10)
        assert abs(np.angle(np.exp(1j * (g.phi - phi)))) < 1e-10


def test_dual_of_dual_flag_is_flag():
    assert isinstance(dual(DualFlag(Direction(1, 0, 0), 0.3)), Flag)


@pytest.mark.parametrize("nu,phi,expected", [
    (0.0, np.pi / 2, (1.0, 0.0, 0.0)),
    (0.0, 0.0, (0.0, 0.0, -1.0)),
    (np.pi / 4, np.pi / 2, (np.sqrt(2), -1.0, 0.0)),
])
def test_rotation_derivatives_values(nu, phi, expected):
    assert np.allclose(rotation_derivatives(nu, phi), expected, atol=1e-12)


def test_rotation_derivatives_pole():
    with pytest.raises(NearPoleSingularity):
        rotation_derivatives(np.pi / 2, 0.3)


def _coords_after(frame, nu, tau, phi, delta):
    w, e, n = latlong_frames(frame, nu, tau)
    f = Flag(Direction.of(w), phi)
    axis = np.cos(phi) * e + np.sin(phi) * n
    g = rotate_flag_about(axis, f, delta)
    nu2, tau2 = to_spherical(g.omega.vec, frame)
    w2, e2, n2 = latlong_frames(frame, nu2, tau2)
    phi2 = np.arctan2(axis @ n2, axis @ e2)
    return nu2, tau2, phi2


@pytest.mark.parametrize("nu,phi", [(0.0, 0.4), (0.5, 1.2), (-0.7, 2.5)])
def test_rotation_derivatives_match_finite_differences(nu, phi):
    frame = Frame.at([0.2, 0.1, 0.97])
    tau, h = 0.8, 1e-4
    p = np.array(_coords_after(frame, nu, tau, phi, h))
    m = np.array(_coords_after(frame, nu, tau, phi, -h))
    d = (p - m) / (2 * h)
    d[1] = np.angle(np.exp(1j * (p[1] - m[1]))) / (2 * h)
    d[2] = np.angle(np.exp(1j * (p[2] - m[2]))) / (2 * h)
    dtau, dphi, dnu = rotation_derivatives(nu, phi)
    assert d[0] == pytest.approx(dnu, abs=1e-6)
    assert d[1] == pytest.approx(dtau, abs=1e-6)
    assert d[2] == pytest.approx(dphi, abs=1e-6)


@pytest.mark.parametrize("delta", [0.0, 2 * np.pi])
def test_rotate_flag_identity(delta):
    f = Flag(Direction(0.3, -0.4, 0.5), 1.1)
    axis = f.point()
    g = rotate_flag_about(axis, f, delta)
    assert np.allclose(g.omega.vec, f.omega.vec, atol=1e-10)
    assert abs(np.angle(np.exp(1j * (g.phi - f.phi)))) < 1e-10


def test_rotate_flag_requires_axis_on_circle():
    f = Flag(Direction(0, 0, 1), 0.0)
    with pytest.raises(ValueError):
        rotate_flag_about([0, 0, 1], f, 0.1)
