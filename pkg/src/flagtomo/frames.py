"""Directions, frames, flags and the dual-flag map on the unit sphere.

Conventions used throughout the package:

* A frame is a right-handed orthonormal triple ``(east, north, pole)`` with
  ``north = pole x east``.  Spherical coordinates relative to a frame are
  latitude ``nu`` in ``[-pi/2, pi/2]`` and longitude ``tau`` in ``[0, 2pi)``::

      (nu, tau) -> cos(nu) * (cos(tau) * east + sin(tau) * north) + sin(nu) * pole

* On the great circle ``S_omega`` polar to ``omega`` the angle ``phi`` is
  measured from the local East ``E = normalize(pole x omega)`` towards the
  local North ``N = omega x E``, i.e. anticlockwise seen from the tip of
  ``omega``.  The point of ``S_omega`` with angle ``phi`` is
  ``cos(phi) E + sin(phi) N``.

* When ``omega`` coincides with ``+-pole`` the East reference is built from
  the alternate pole ``frame.north`` instead, which makes ``E = frame.east``
  at the pole itself.

Vectorised helpers (``east_north``, ``circle_points`` ...) work on arrays of
shape ``(..., 3)``; the dataclasses wrap single values for the scalar API.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateFrame, NearPoleSingularity

TWO_PI = 2.0 * np.pi
POLE_TOL = 1e-9


def normalize(v):
    v = np.asarray(v, dtype=float)
    n = np.linalg.norm(v, axis=-1, keepdims=True)
    if np.any(n == 0.0):
        raise ValueError("cannot normalise a zero vector")
    return v / n


def wrap_angle(a):
    """Map angles to ``[0, 2pi)``."""
    a = np.mod(a, TWO_PI)
    # np.mod can return 2pi for tiny negative inputs
    return np.where(a >= TWO_PI, 0.0, a)


@dataclass(frozen=True)
class Direction:
    x: float
    y: float
    z: float

    def __post_init__(self):
        v = normalize([self.x, self.y, self.z])
        object.__setattr__(self, "x", float(v[0]))
        object.__setattr__(self, "y", float(v[1]))
        object.__setattr__(self, "z", float(v[2]))

    @classmethod
    def of(cls, v) -> "Direction":
        if isinstance(v, Direction):
            return v
        v = np.asarray(v, dtype=float).reshape(3)
        return cls(*v)

    @property
    def vec(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])

    def __array__(self, dtype=None, copy=None):
        return self.vec if dtype is None else self.vec.astype(dtype)


def as_vec(v) -> np.ndarray:
    """Unit vector(s) from a Direction or array-like."""
    if isinstance(v, Direction):
        return v.vec
    return normalize(v)


@dataclass(frozen=True)
class Frame:
    pole: Direction
    east: Direction
    north: Direction = field(default=None)

    def __post_init__(self):
        p = as_vec(self.pole)
        e = as_vec(self.east)
        if abs(p @ e) > 1e-12:
            # Gram-Schmidt so that east is exactly tangent at the pole
            e = normalize(e - (p @ e) * p)
        n = np.cross(p, e)
        if self.north is not None and np.linalg.norm(as_vec(self.north) - n) > 1e-9:
            raise ValueError("north must equal pole x east")
        object.__setattr__(self, "pole", Direction.of(p))
        object.__setattr__(self, "east", Direction.of(e))
        object.__setattr__(self, "north", Direction.of(n))

    @classmethod
    def at(cls, pole, reference: "Frame | None" = None) -> "Frame":
        """Frame with the given pole whose ``east`` is the local East of
        ``pole`` relative to ``reference`` (the canonical frame by default)."""
        ref = CANONICAL if reference is None else reference
        p = as_vec(pole)
        e, _ = east_north(p, ref, fallback=True)
        return cls(Direction.of(p), Direction.of(e))

    def matrix(self) -> np.ndarray:
        """Rows are east, north, pole."""
        return np.stack([self.east.vec, self.north.vec, self.pole.vec])


CANONICAL = Frame(Direction(0.0, 0.0, 1.0), Direction(1.0, 0.0, 0.0))


def east_north(omega, frame: Frame | None = None, fallback: bool | None = None):
    """Local East/North unit tangents at ``omega`` (arrays ``(..., 3)``).

    ``fallback`` defaults to True for the canonical frame (``frame=None``) and
    False for an explicitly supplied frame, in which case a direction within
    ``POLE_TOL`` of the pole raises :class:`DegenerateFrame`.
    """
    if fallback is None:
        fallback = frame is None
    frame = CANONICAL if frame is None else frame
    w = np.asarray(omega, dtype=float)
    if isinstance(omega, Direction):
        w = omega.vec
    p = frame.pole.vec
    c = np.cross(p, w)
    n = np.linalg.norm(c, axis=-1, keepdims=True)
    degenerate = n[..., 0] < POLE_TOL
    if np.any(degenerate):
        if not fallback:
            raise DegenerateFrame("omega coincides with the frame pole; East is undefined")
        alt = np.cross(frame.north.vec, w)
        c = np.where(degenerate[..., None], alt, c)
        n = np.linalg.norm(c, axis=-1, keepdims=True)
    e = c / n
    north = np.cross(w, e)
    return e, north


def circle_points(east, north, M: int, offset: float = 0.0):
    """Points ``cos(phi_k) east + sin(phi_k) north`` at ``phi_k = offset + 2 pi k / M``.

    Returns an array of shape ``(..., M, 3)``.
    """
    phi = offset + TWO_PI * np.arange(M) / M
    c = np.cos(phi)[:, None]
    s = np.sin(phi)[:, None]
    return c * np.asarray(east)[..., None, :] + s * np.asarray(north)[..., None, :]


def angle_on_circle(omega, point, frame: Frame | None = None, fallback: bool | None = None):
    """Angle of ``point`` (orthogonal to ``omega``) on ``S_omega``."""
    e, n = east_north(omega, frame, fallback)
    point = np.asarray(point, dtype=float)
    return wrap_angle(np.arctan2(np.sum(point * n, -1), np.sum(point * e, -1)))


@dataclass(frozen=True)
class SphericalCoord:
    nu: float
    tau: float
    frame: Frame = CANONICAL

    def __post_init__(self):
        if not -np.pi / 2 - 1e-12 <= self.nu <= np.pi / 2 + 1e-12:
            raise ValueError(f"latitude {self.nu} outside [-pi/2, pi/2]")
        object.__setattr__(self, "nu", float(np.clip(self.nu, -np.pi / 2, np.pi / 2)))
        object.__setattr__(self, "tau", float(wrap_angle(self.tau)))

    def to_direction(self) -> Direction:
        return Direction.of(to_cartesian(self.nu, self.tau, self.frame))

    @classmethod
    def from_direction(cls, d, frame: Frame = CANONICAL) -> "SphericalCoord":
        nu, tau = to_spherical(as_vec(d), frame)
        return cls(float(nu), float(tau), frame)


def to_cartesian(nu, tau, frame: Frame = CANONICAL):
    nu = np.asarray(nu, dtype=float)
    tau = np.asarray(tau, dtype=float)
    cn = np.cos(nu)[..., None]
    return (
        cn * np.cos(tau)[..., None] * frame.east.vec
        + cn * np.sin(tau)[..., None] * frame.north.vec
        + np.sin(nu)[..., None] * frame.pole.vec
    )


def to_spherical(d, frame: Frame = CANONICAL):
    d = np.asarray(d, dtype=float)
    z = np.clip(d @ frame.pole.vec, -1.0, 1.0)
    tau = wrap_angle(np.arctan2(d @ frame.north.vec, d @ frame.east.vec))
    return np.arcsin(z), tau


def latlong_frames(frame: Frame, nu, tau):
    """Points ``(nu, tau)_frame`` with their local East and North.

    East and North are the coordinate tangents (increasing ``tau`` and
    ``nu``), which coincide with :func:`east_north` relative to the frame
    pole away from the poles and stay well defined at ``|nu| = pi/2``.
    """
    nu = np.asarray(nu, dtype=float)
    tau = np.asarray(tau, dtype=float)
    e0, n0, p = frame.east.vec, frame.north.vec, frame.pole.vec
    ct, st = np.cos(tau)[..., None], np.sin(tau)[..., None]
    cn, sn = np.cos(nu)[..., None], np.sin(nu)[..., None]
    eq = ct * e0 + st * n0
    omega = cn * eq + sn * p
    east = -st * e0 + ct * n0
    north = -sn * eq + cn * p
    return omega, east, north


@dataclass(frozen=True)
class Flag:
    omega: Direction
    phi: float

    def __post_init__(self):
        object.__setattr__(self, "omega", Direction.of(self.omega))
        object.__setattr__(self, "phi", float(wrap_angle(self.phi)))

    def point(self, frame: Frame | None = None) -> np.ndarray:
        return flag_to_point(self.omega, self.phi, frame)


@dataclass(frozen=True)
class DualFlag:
    Omega: Direction
    phi_star: float

    def __post_init__(self):
        object.__setattr__(self, "Omega", Direction.of(self.Omega))
        object.__setattr__(self, "phi_star", float(wrap_angle(self.phi_star)))


def flag_to_point(omega, phi, frame: Frame | None = None, fallback: bool | None = None):
    """The point of ``S_omega`` at angle ``phi`` from the local East."""
    e, n = east_north(as_vec(omega) if isinstance(omega, Direction) else omega, frame, fallback)
    phi = np.asarray(phi, dtype=float)[..., None]
    return np.cos(phi) * e + np.sin(phi) * n


def dual(f: Flag | DualFlag, frame: Frame | None = None):
    """The dual flag map ``(omega, phi) -> (Omega, phi*)``.

    ``Omega`` is the point ``phi`` of ``S_omega``; ``phi*`` is the angle of
    ``omega`` on ``S_Omega``.  Applied to a :class:`DualFlag` it returns the
    primal :class:`Flag` (the map is an involution).
    """
    if isinstance(f, DualFlag):
        w, a = f.Omega.vec, f.phi_star
        out = Flag
    else:
        w, a = f.omega.vec, f.phi
        out = DualFlag
    W = flag_to_point(w, a, frame)
    return out(Direction.of(W), float(angle_on_circle(W, w, frame)))


def rotation_derivatives(nu: float, phi: float):
    """Rates ``(dtau, dphi, dnu)`` per unit right-screw rotation of the flag
    ``((nu, tau), phi)`` about its own direction ``phi``."""
    c = np.cos(nu)
    if abs(c) <= 1e-12:
        raise NearPoleSingularity("cos(nu) vanishes; longitude rate is unbounded")
    return np.sin(phi) / c, -np.tan(nu) * np.sin(phi), -np.cos(phi)


def rotate(v, axis, angle):
    """Right-handed rotation of ``v`` about the unit ``axis`` (Rodrigues)."""
    v = np.asarray(v, dtype=float)
    k = np.asarray(axis, dtype=float)
    c, s = np.cos(angle), np.sin(angle)
    return v * c + np.cross(k, v) * s + k * np.sum(k * v, -1, keepdims=True) * (1 - c)


def rotate_flag_about(Omega, f: Flag, delta: float, frame: Frame | None = None) -> Flag:
    """Rotate the flag by ``delta`` about ``Omega``, a point of ``S_omega``.

    ``Omega`` stays on the great circle of the rotated ``omega``; the dual
    flag keeps ``Omega`` and its angle advances by ``delta``.
    """
    axis = as_vec(Omega)
    w = as_vec(f.omega)
    if abs(axis @ w) > 1e-9:
        raise ValueError("rotation axis must lie on S_omega")
    w2 = normalize(rotate(w, axis, delta))
    return Flag(Direction.of(w2), float(angle_on_circle(w2, axis, frame)))
