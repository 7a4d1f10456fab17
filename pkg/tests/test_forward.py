import numpy as np
import pytest

from flagtomo.bodies import Ball, CallableSupport, Ellipsoid, Translated
from flagtomo.errors import InsufficientSmoothness, NegativeRadius
from flagtomo.forward import (
    ForwardFlagFunction,
    SampledFlagFunction,
    VectorFlagFunction,
    dual_radius,
    principal_radii_sum,
    projection_curvature_radius,
    read_flag_csv,
    sample_flag_function,
    write_flag_csv,
)
from flagtomo.frames import Direction, DualFlag, Flag, dual, east_north, flag_to_point

from conftest import random_directions


def ellipsoid_section_radius(A, w, d):
    """Curvature radius of the projection of the ellipsoid ``x^T A^-1 x = 1`` along ``w``
    at the boundary point with normal ``d``: ``det(A') / h^3``."""
    n = np.cross(w, d)
    Ap = np.array([[d @ A @ d, d @ A @ n], [n @ A @ d, n @ A @ n]])
    return np.linalg.det(Ap) / np.sqrt(d @ A @ d) ** 3


def test_ball_radius():
    F = ForwardFlagFunction(Ball(1.7, (0.3, -0.1, 0.2)))
    assert F.evaluate([0.2, 0.5, 0.8], 1.3) == pytest.approx(1.7, abs=1e-10)


def test_linear_support_gives_zero():
    F = ForwardFlagFunction(CallableSupport(lambda u: u @ np.array([0.3, -0.2, 0.5])), check_sign=False)
    W = random_directions(10)
    e, n = east_north(W)
    assert np.max(np.abs(F.circle(W, e, n, 64))) < 1e-12


def test_ellipse_section_oracle():
    assert projection_curvature_radius(Ellipsoid(2, 1, 1), Flag(Direction(0, 0, 1), 0.0)) == pytest.approx(0.5, abs=1e-10)
    rng = np.random.default_rng(7)
    rot = np.linalg.qr(rng.normal(size=(3, 3)))[0]
    E = Ellipsoid(1.6, 1.1, 0.6, rot)
    A = rot @ np.diag([1.6**2, 1.1**2, 0.36]) @ rot.T
    F = ForwardFlagFunction(E)
    for w, phi in zip(random_directions(20, 8), rng.uniform(0, 2 * np.pi, 20)):
        d = flag_to_point(w, phi)
        assert F.evaluate(w, phi) == pytest.approx(ellipsoid_section_radius(A, w, d), abs=1e-9)


def test_spectral_convergence():
    E = Ellipsoid(2, 1, 1)
    w = np.array([0.3, 0.4, 0.5]) / np.linalg.norm([0.3, 0.4, 0.5])
    A = np.diag([4.0, 1.0, 1.0])
    exact = ellipsoid_section_radius(A, w, flag_to_point(w, 0.7))
    errs = [abs(ForwardFlagFunction(E, M).evaluate(w, 0.7) - exact) for M in (8, 16, 32, 64)]
    for a, b in zip(errs, errs[1:]):
        assert b < a / 10 or b < 1e-12


def test_periodic_in_phi():
    F = ForwardFlagFunction(Ellipsoid(2, 1, 1))
    w = [0.1, 0.7, 0.2]
    assert abs(F.evaluate(w, 0.4) - F.evaluate(w, 0.4 + 2 * np.pi)) < 1e-10


def test_dual_evaluation_matches():
    H = Ellipsoid(2, 1.3, 0.8)
    F = ForwardFlagFunction(H)
    rng = np.random.default_rng(2)
    for w, phi in zip(random_directions(1000, 3), rng.uniform(0, 2 * np.pi, 1000)):
        f = Flag(Direction.of(w), phi)
        assert abs(F.evaluate_dual(dual(f)) - F(f)) < 1e-9
    assert dual_radius(Ball(0.7), DualFlag(Direction(0, 1, 0), 2.0)) == pytest.approx(0.7)


def test_principal_radii_sum():
    assert principal_radii_sum(Ball(1.5), [0.3, 0.2, 0.1]) == pytest.approx(3.0)
    assert principal_radii_sum(Ellipsoid(2, 1, 1), [1, 0, 0]) == pytest.approx(1.0, abs=1e-10)


def _hessian_trace(H, w, h=1e-3):
    # Laplace-Beltrami of H plus 2H equals R1 + R2
    e, n = east_north(np.asarray(w, float))
    total = 0.0
    for t in (e, n):
        f = lambda s: H(np.cos(s) * w + np.sin(s) * t)
        total += (f(h) - 2 * f(0.0) + f(-h)) / h**2
    return total + 2 * H(w)


def test_principal_radii_sum_against_hessian():
    E = Ellipsoid(2, 1.2, 0.9)
    for w in random_directions(5, 11):
        assert principal_radii_sum(E, w) == pytest.approx(_hessian_trace(E, w), abs=1e-5)


def test_translation_invariance():
    E = Ellipsoid(2, 1, 1)
    T = Translated(E, (0.4, -0.3, 0.2))
    for w in random_directions(5):
        assert abs(principal_radii_sum(T, w) - principal_radii_sum(E, w)) < 1e-9


def test_nonnegative_for_convex_bodies():
    F = ForwardFlagFunction(Ellipsoid(3, 1, 0.4))
    W = random_directions(50)
    e, n = east_north(W)
    R = F.circle(W, e, n, 128)
    assert R.min() >= -1e-8 * 3


def test_negative_radius_raised():
    bumpy = CallableSupport(lambda u: 1 + 0.2 * np.cos(6 * np.arctan2(u[..., 1], u[..., 0])) * (1 - u[..., 2] ** 2))
    with pytest.raises(NegativeRadius):
        ForwardFlagFunction(bumpy).evaluate([0, 0, 1], 0.0)


def test_insufficient_smoothness():
    with pytest.raises(InsufficientSmoothness):
        ForwardFlagFunction(CallableSupport(lambda u: u[..., 0], smoothness_order=1))


def test_csv_round_trip(tmp_path):
    F = ForwardFlagFunction(Ellipsoid(2, 1, 1))
    path = tmp_path / "flags.csv"
    vals = write_flag_csv(F, path, 24, 48, 32)
    header = path.read_text().splitlines()[:4]
    assert header[0] == "# flagtomo flag-sample v1"
    assert "n_nu=24 n_tau=48 n_phi=32" in header[1]
    assert header[3] == "# omega_nu,omega_tau,phi,R"
    S = read_flag_csv(path)
    assert np.array_equal(S.samples, vals)
    assert np.array_equal(sample_flag_function(S, 24, 48, 32), vals) or \
        np.max(np.abs(sample_flag_function(S, 24, 48, 32) - vals)) < 1e-12


def test_sampled_flag_function_interpolates():
    F = ForwardFlagFunction(Ellipsoid(2, 1, 1))
    S = SampledFlagFunction(sample_flag_function(F, 48, 96, 64))
    W = random_directions(30, 9)
    e, n = east_north(W)
    assert np.max(np.abs(S.circle(W, e, n, 64) - F.circle(W, e, n, 64))) < 1e-3  # cubic in (nu, tau), max R = 4


def test_vector_flag_function_broadcasts():
    F = VectorFlagFunction(lambda w, d: 1 + 0 * w[..., 0])
    assert F.values(np.zeros((4, 3)) + [0, 0, 1], np.array([1.0, 0, 0])).shape == (4,)
