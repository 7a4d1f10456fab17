"""Flag functions and the forward map from support function to projection
curvature radii.

A flag function is evaluated on pairs ``(omega, d)`` of orthogonal unit
vectors, where ``d`` is the point of the great circle ``S_omega``.  Angles
only enter through :meth:`FlagFunction.evaluate`, which resolves ``phi``
against a frame; all bulk work goes through :meth:`FlagFunction.circle`.
"""

from __future__ import annotations

from pathlib import Path
from typing import Callable

import numpy as np

from .bodies import SupportFunction
from .errors import InsufficientSmoothness, InvalidParameter, NegativeRadius
from .frames import (
    CANONICAL,
    DualFlag,
    Flag,
    angle_on_circle,
    as_vec,
    circle_points,
    dual,
    east_north,
    flag_to_point,
    to_cartesian,
    to_spherical,
)
from .quadrature import TWO_PI, plus_second_derivative, resample, synthesize, trapezoid_periodic

DEFAULT_M = 128


class FlagFunction:
    """Scalar field on flag space."""

    differentiability: int = 1

    def values(self, omega, d) -> np.ndarray:
        """Evaluate at flags given as broadcastable arrays ``(..., 3)``."""
        raise NotImplementedError

    def circle(self, omega, east, north, M: int) -> np.ndarray:
        """Values at ``cos(phi_k) east + sin(phi_k) north``, ``phi_k = 2 pi k / M``.

        ``east`` and ``north`` are tangent at ``omega`` with
        ``north = omega x east``.  Shape ``(..., M)``.
        """
        omega = np.asarray(omega, dtype=float)
        pts = circle_points(east, north, M)
        return self.values(omega[..., None, :], pts)

    def evaluate(self, omega, phi, frame=None) -> float:
        w = as_vec(omega)
        return float(self.values(w, flag_to_point(w, phi, frame)))

    def __call__(self, f: Flag, frame=None) -> float:
        return self.evaluate(f.omega, f.phi, frame)

    def evaluate_dual(self, d: DualFlag, frame=None) -> float:
        """``F*(Omega, phi*) = F(omega, phi)`` for the primal flag of ``d``."""
        f = dual(d, frame)
        return self.evaluate(f.omega, f.phi, frame)

    def __add__(self, other):
        if not isinstance(other, FlagFunction):
            return NotImplemented
        return SumFlagFunction([self, other])


class VectorFlagFunction(FlagFunction):
    """Flag function from a vectorised callable ``func(omega, d)``."""

    def __init__(self, func: Callable, differentiability: int = 1):
        self.func = func
        self.differentiability = differentiability

    def values(self, omega, d):
        omega = np.asarray(omega, dtype=float)
        d = np.asarray(d, dtype=float)
        out = np.asarray(self.func(omega, d), dtype=float)
        return np.broadcast_to(out, np.broadcast_shapes(omega.shape, d.shape)[:-1]).copy()


class AngleFlagFunction(FlagFunction):
    """Flag function from ``func(omega, phi)`` with ``phi`` in the canonical frame."""

    def __init__(self, func: Callable, differentiability: int = 1, frame=None):
        self.func = func
        self.differentiability = differentiability
        self.frame = frame

    def values(self, omega, d):
        omega = np.asarray(omega, dtype=float)
        d = np.asarray(d, dtype=float)
        omega, d = np.broadcast_arrays(omega, d)
        phi = angle_on_circle(omega, d, self.frame, fallback=True)
        return np.asarray(self.func(omega, phi), dtype=float) * np.ones(phi.shape)


class SumFlagFunction(FlagFunction):
    def __init__(self, parts):
        self.parts = list(parts)
        self.differentiability = min(p.differentiability for p in self.parts)

    def values(self, omega, d):
        return sum(p.values(omega, d) for p in self.parts)

    def circle(self, omega, east, north, M):
        return sum(p.circle(omega, east, north, M) for p in self.parts)


class ForwardFlagFunction(FlagFunction):
    """Projection curvature radius function ``R = h + h''`` of a support function.

    Each requested circle is sampled at ``M`` nodes from the requested East
    reference and differentiated spectrally; other node counts are served by
    trigonometric resampling.
    """

    def __init__(self, H: SupportFunction, M: int = DEFAULT_M, check_sign: bool = True):
        if H.smoothness_order < 2:
            raise InsufficientSmoothness("the forward map needs a 2-smooth support function")
        if M < 8 or M % 2:
            raise InvalidParameter("circle sample count must be even and >= 8")
        self.H = H
        self.M = M
        self.check_sign = check_sign
        self.differentiability = H.smoothness_order - 2

    def circle(self, omega, east, north, M):
        h = self.H(circle_points(east, north, self.M))
        R = plus_second_derivative(h)
        if self.check_sign:
            tol = 1e-8 * max(float(np.abs(h).max(initial=0.0)), 1e-300)
            lo = R.min(initial=0.0)
            if lo < -tol:
                raise NegativeRadius(f"curvature radius {lo:.3e} below -{tol:.1e}: support function not convex")
        return R if M == self.M else resample(R, M)

    def values(self, omega, d):
        omega = np.asarray(omega, dtype=float)
        d = np.asarray(d, dtype=float)
        omega, d = np.broadcast_arrays(omega, d)
        return self.circle(omega, d, np.cross(omega, d), self.M)[..., 0]


def projection_curvature_radius(H: SupportFunction, f: Flag, M: int = DEFAULT_M, frame=None) -> float:
    """``h(phi) + h''(phi)`` for the restriction ``h`` of ``H`` to ``S_omega``."""
    return ForwardFlagFunction(H, M).evaluate(f.omega, f.phi, frame)


def dual_radius(H: SupportFunction, d: DualFlag, M: int = DEFAULT_M, frame=None) -> float:
    return ForwardFlagFunction(H, M).evaluate_dual(d, frame)


def dual_circle(F: FlagFunction, Omega, M: int = DEFAULT_M) -> np.ndarray:
    """``F*(Omega, phi*_k)`` at ``phi*_k = 2 pi k / M``."""
    w = as_vec(Omega)
    e, n = east_north(w)
    omegas = circle_points(e, n, M)
    return F.values(omegas, np.broadcast_to(w, omegas.shape))


def principal_radii_sum(H: SupportFunction, Omega, M: int = DEFAULT_M) -> float:
    """``R1 + R2`` at normal ``Omega`` as ``(1/pi) int R*(Omega, phi) dphi``."""
    return float(trapezoid_periodic(dual_circle(ForwardFlagFunction(H, M), Omega, M)) / np.pi)


# --- sampled flag functions and the flag-sample CSV format ---------------

CSV_COLUMNS = ("omega_nu", "omega_tau", "phi", "R")


def flag_grid(n_nu: int, n_tau: int, n_phi: int):
    """Cell-centred latitudes, uniform longitudes and uniform circle angles."""
    nu = -np.pi / 2 + (np.arange(n_nu) + 0.5) * np.pi / n_nu
    tau = TWO_PI * np.arange(n_tau) / n_tau
    phi = TWO_PI * np.arange(n_phi) / n_phi
    return nu, tau, phi


def sample_flag_function(F: FlagFunction, n_nu: int, n_tau: int, n_phi: int) -> np.ndarray:
    """Samples ``F[i, j, k]`` at ``omega = (nu_i, tau_j)`` and angle ``phi_k``
    in the canonical frame."""
    nu, tau, _ = flag_grid(n_nu, n_tau, n_phi)
    N, T = np.meshgrid(nu, tau, indexing="ij")
    omega = to_cartesian(N, T, CANONICAL)
    e, n = east_north(omega)
    return F.circle(omega, e, n, n_phi)


def write_flag_csv(F: FlagFunction, path, n_nu: int = 48, n_tau: int = 96, n_phi: int = 64,
                   values: np.ndarray | None = None) -> np.ndarray:
    """Write samples of ``F`` on a declared grid; returns the sample array."""
    if n_tau % 2 or n_phi % 2:
        raise InvalidParameter("n_tau and n_phi must be even")
    if values is None:
        values = sample_flag_function(F, n_nu, n_tau, n_phi)
    nu, tau, phi = flag_grid(n_nu, n_tau, n_phi)
    N, T, P = np.meshgrid(nu, tau, phi, indexing="ij")
    table = np.column_stack([N.ravel(), T.ravel(), P.ravel(), np.asarray(values).ravel()])
    header = (
        f"flagtomo flag-sample v1\n"
        f"grid n_nu={n_nu} n_tau={n_tau} n_phi={n_phi} nu=cell-centred tau=uniform phi=uniform order=nu,tau,phi\n"
        f"frame pole=(0,0,1) east=(1,0,0) north=(0,1,0); phi from E=normalize(pole x omega) towards omega x E\n"
        + ",".join(CSV_COLUMNS)
    )
    np.savetxt(path, table, fmt="%.17g", delimiter=",", header=header, comments="# ")
    return values


def read_flag_csv(path) -> "SampledFlagFunction":
    path = Path(path)
    shape = None
    with path.open() as fh:
        for line in fh:
            if not line.startswith("#"):
                break
            if "grid" in line:
                fields = dict(tok.split("=", 1) for tok in line.split() if "=" in tok)
                shape = tuple(int(fields[k]) for k in ("n_nu", "n_tau", "n_phi"))
    if shape is None:
        raise InvalidParameter(f"{path}: missing grid header line")
    table = np.loadtxt(path, delimiter=",", comments="#", ndmin=2)
    if table.shape != (int(np.prod(shape)), 4):
        raise InvalidParameter(f"{path}: expected {np.prod(shape)} rows of 4 columns, got {table.shape}")
    nu, tau, phi = flag_grid(*shape)
    N, T, P = np.meshgrid(nu, tau, phi, indexing="ij")
    for col, ref in zip(table[:, :3].T, (N, T, P)):
        if np.max(np.abs(col - ref.ravel())) > 1e-9:
            raise InvalidParameter(f"{path}: coordinates do not match the declared grid")
    return SampledFlagFunction(table[:, 3].reshape(shape))


def _keys_weights(t):
    """Cubic convolution (Catmull-Rom) weights for offsets -1, 0, 1, 2."""
    t2, t3 = t * t, t * t * t
    return np.stack([
        -0.5 * t3 + t2 - 0.5 * t,
        1.5 * t3 - 2.5 * t2 + 1.0,
        -1.5 * t3 + 2.0 * t2 + 0.5 * t,
        0.5 * t3 - 0.5 * t2,
    ], axis=-1)


class SampledFlagFunction(FlagFunction):
    """Flag function from samples on the canonical ``(nu, tau, phi)`` grid.

    Trigonometric interpolation in ``phi`` and bicubic (Catmull-Rom)
    interpolation of the Fourier coefficients in ``(nu, tau)``.  Across the
    poles the grid is continued by ``F(nu, tau, phi) = F(pi - nu, tau + pi, phi + pi)``.
    """

    GHOST = 2

    def __init__(self, samples: np.ndarray, chunk: int = 4096):
        samples = np.asarray(samples, dtype=float)
        n_nu, n_tau, n_phi = samples.shape
        if n_tau % 2 or n_phi % 2 or n_nu < 4:
            raise InvalidParameter("grid needs n_nu >= 4 and even n_tau, n_phi")
        self.samples = samples
        self.shape = samples.shape
        self.differentiability = 1
        self.chunk = chunk
        spec = np.fft.rfft(samples, axis=-1)
        flip = (-1.0) ** np.arange(spec.shape[-1])
        half = np.roll(spec, -n_tau // 2, axis=1) * flip
        g = self.GHOST
        top = half[::-1][:g]      # rows n-1, n-2 reflected to pi - nu
        bottom = half[:g][::-1]   # rows 1, 0 reflected to -pi - nu
        self._spec = np.concatenate([bottom, spec, top], axis=0)
        self._dnu = np.pi / n_nu
        self._dtau = TWO_PI / n_tau
        self._nu0 = -np.pi / 2 + 0.5 * self._dnu

    def max_abs(self) -> float:
        return float(np.abs(self.samples).max())

    def _interp_spectrum(self, omega):
        nu, tau = to_spherical(omega, CANONICAL)
        x = (nu - self._nu0) / self._dnu + self.GHOST
        i0 = np.floor(x).astype(int)
        tx = x - i0
        y = tau / self._dtau
        j0 = np.floor(y).astype(int)
        ty = y - j0
        wx = _keys_weights(tx)
        wy = _keys_weights(ty)
        n_tau = self.shape[1]
        ii = np.clip(i0[..., None] + np.arange(-1, 3), 0, self._spec.shape[0] - 1)
        jj = np.mod(j0[..., None] + np.arange(-1, 3), n_tau)
        block = self._spec[ii[..., :, None], jj[..., None, :]]  # (..., 4, 4, K)
        w = wx[..., :, None] * wy[..., None, :]
        return np.einsum("...ab,...abk->...k", w, block)

    def circle(self, omega, east, north, M):
        omega = np.asarray(omega, dtype=float)
        east = np.asarray(east, dtype=float)
        lead = np.broadcast_shapes(omega.shape, east.shape)[:-1]
        omega = np.broadcast_to(omega, lead + (3,)).reshape(-1, 3)
        east = np.broadcast_to(east, lead + (3,)).reshape(-1, 3)
        out = np.empty((omega.shape[0], M))
        for s in range(0, omega.shape[0], self.chunk):
            w = omega[s:s + self.chunk]
            shift = angle_on_circle(w, east[s:s + self.chunk])
            spec = self._interp_spectrum(w)
            out[s:s + self.chunk] = synthesize(spec, self.shape[2], M, shift)
        return out.reshape(lead + (M,))

    def values(self, omega, d):
        omega = np.asarray(omega, dtype=float)
        d = np.asarray(d, dtype=float)
        omega, d = np.broadcast_arrays(omega, d)
        return self.circle(omega, d, np.cross(omega, d), 2 * (self.shape[2] // 2))[..., 0]
