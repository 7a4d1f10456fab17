"""Support functions of analytic test bodies and of sampled grids."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.interpolate import RectBivariateSpline
from scipy.special import eval_legendre

from .errors import InvalidParameter, NonSmooth
from .frames import CANONICAL, Frame, as_vec, circle_points, east_north, to_spherical

Array = np.ndarray


class SupportFunction:
    """A scalar field ``H`` on the unit sphere.

    Calling the object evaluates ``H`` on an array of unit vectors of shape
    ``(..., 3)``.  The homogeneous extension ``H(x) = |x| H(x/|x|)`` is
    available through :meth:`homogeneous`.
    """

    smoothness_order: int = 1
    provenance: str = "analytic"

    def __call__(self, u) -> Array:
        raise NotImplementedError

    def evaluate(self, direction) -> float:
        return float(self(as_vec(direction)))

    def homogeneous(self, x) -> Array:
        x = np.asarray(x, dtype=float)
        r = np.linalg.norm(x, axis=-1)
        safe = np.where(r > 0, r, 1.0)[..., None]
        return r * self(x / safe)

    def __add__(self, other):
        if not isinstance(other, SupportFunction):
            return NotImplemented
        return MinkowskiSum([self, other])

    def translated(self, v) -> "Translated":
        return Translated(self, v)


class CallableSupport(SupportFunction):
    """Wrap a vectorised callable ``f(u) -> values``."""

    def __init__(self, func: Callable[[Array], Array], smoothness_order: int = 3,
                 provenance: str = "analytic"):
        self.func = func
        self.smoothness_order = smoothness_order
        self.provenance = provenance

    def __call__(self, u):
        return np.asarray(self.func(np.asarray(u, dtype=float)), dtype=float)


class Ball(SupportFunction):
    smoothness_order = 1000

    def __init__(self, r: float, center=(0.0, 0.0, 0.0)):
        if not r > 0:
            raise InvalidParameter(f"ball radius must be positive, got {r}")
        self.r = float(r)
        self.center = np.asarray(center, dtype=float).reshape(3)

    def __call__(self, u):
        u = np.asarray(u, dtype=float)
        return self.r + u @ self.center


class Ellipsoid(SupportFunction):
    """``H(u) = sqrt(u^T A u)`` with ``A = Q diag(a^2, b^2, c^2) Q^T``."""

    smoothness_order = 1000

    def __init__(self, a: float, b: float, c: float, rotation=None):
        for name, s in zip("abc", (a, b, c)):
            if not s > 0:
                raise InvalidParameter(f"semi-axis {name} must be positive, got {s}")
        self.axes = np.array([a, b, c], dtype=float)
        Q = np.eye(3) if rotation is None else np.asarray(rotation, dtype=float)
        if not np.allclose(Q @ Q.T, np.eye(3), atol=1e-10):
            raise InvalidParameter("rotation must be orthogonal")
        self.rotation = Q
        self.A = Q @ np.diag(self.axes**2) @ Q.T

    def __call__(self, u):
        u = np.asarray(u, dtype=float)
        return np.sqrt(np.einsum("...i,ij,...j->...", u, self.A, u))


class ZonalHarmonic(SupportFunction):
    """Ball of radius ``r`` perturbed by ``amplitude * P_degree(<u, axis>)``.

    Odd degrees give bodies without a centre of symmetry.  The caller keeps
    ``amplitude`` small enough for convexity; :func:`is_convex` checks it.
    """

    smoothness_order = 1000

    def __init__(self, r: float, amplitude: float, degree: int, axis=(0.0, 0.0, 1.0)):
        if not r > 0:
            raise InvalidParameter(f"radius must be positive, got {r}")
        if degree < 0:
            raise InvalidParameter("degree must be nonnegative")
        self.r = float(r)
        self.amplitude = float(amplitude)
        self.degree = int(degree)
        self.axis = as_vec(axis)

    def __call__(self, u):
        t = np.clip(np.asarray(u, dtype=float) @ self.axis, -1.0, 1.0)
        return self.r + self.amplitude * eval_legendre(self.degree, t)


class MinkowskiSum(SupportFunction):
    def __init__(self, parts):
        parts = list(parts)
        if not parts:
            raise InvalidParameter("empty Minkowski sum")
        self.parts = parts
        self.smoothness_order = min(p.smoothness_order for p in parts)
        self.provenance = "analytic" if all(p.provenance == "analytic" for p in parts) else "sampled-grid"

    def __call__(self, u):
        return sum(p(u) for p in self.parts)


class Translated(SupportFunction):
    def __init__(self, body: SupportFunction, v):
        self.body = body
        self.v = np.asarray(v, dtype=float).reshape(3)
        self.smoothness_order = body.smoothness_order
        self.provenance = body.provenance

    def __call__(self, u):
        u = np.asarray(u, dtype=float)
        return self.body(u) + u @ self.v


class SampledSupport(SupportFunction):
    """Support function known on an equiangular ``(nu, tau)`` grid.

    Interpolation is bicubic (tensor cubic spline) on the grid extended
    periodically in ``tau`` and across both poles via
    ``(nu, tau) ~ (pi - nu, tau + pi)``.  ``n_tau`` must be even.
    """

    provenance = "sampled-grid"
    smoothness_order = 2

    def __init__(self, nu, tau, values, frame: Frame = CANONICAL, ghost: int = 4):
        nu = np.asarray(nu, dtype=float)
        tau = np.asarray(tau, dtype=float)
        values = np.asarray(values, dtype=float)
        if values.shape != (nu.size, tau.size):
            raise InvalidParameter("values must have shape (n_nu, n_tau)")
        if tau.size % 2:
            raise InvalidParameter("n_tau must be even for pole continuation")
        self.nu, self.tau, self.values, self.frame = nu, tau, values, frame
        n_tau = tau.size
        g = min(ghost, nu.size)
        half = np.roll(values, -n_tau // 2, axis=1)
        # rows beyond the poles: (nu, tau) ~ (pi - nu, tau + pi)
        top = np.arange(nu.size - 1, nu.size - 1 - g, -1)
        bot = np.arange(g)
        ext_nu = np.concatenate([-np.pi - nu[bot], nu, np.pi - nu[top]])
        ext = np.concatenate([half[bot], values, half[top]], axis=0)
        gt = min(ghost, n_tau)
        ext_tau = np.concatenate([tau[-gt:] - 2 * np.pi, tau, tau[:gt] + 2 * np.pi])
        ext = np.concatenate([ext[:, -gt:], ext, ext[:, :gt]], axis=1)
        order = np.argsort(ext_nu)
        self._spline = RectBivariateSpline(ext_nu[order], ext_tau, ext[order], kx=3, ky=3, s=0)

    @classmethod
    def from_function(cls, H: SupportFunction, n_nu: int, n_tau: int, frame: Frame = CANONICAL):
        from .frames import to_cartesian

        nu, tau = equiangular_grid(n_nu, n_tau)
        N, T = np.meshgrid(nu, tau, indexing="ij")
        return cls(nu, tau, H(to_cartesian(N, T, frame)), frame)

    def __call__(self, u):
        u = np.asarray(u, dtype=float)
        nu, tau = to_spherical(u, self.frame)
        shape = nu.shape
        return self._spline.ev(nu.ravel(), tau.ravel()).reshape(shape)


def equiangular_grid(n_nu: int, n_tau: int):
    """Cell-centred latitudes (poles excluded) and uniform longitudes."""
    nu = -np.pi / 2 + (np.arange(n_nu) + 0.5) * np.pi / n_nu
    tau = 2 * np.pi * np.arange(n_tau) / n_tau
    return nu, tau


# --- body specifications -------------------------------------------------


@dataclass(frozen=True)
class BodySpec:
    """Declarative description of a gallery body (JSON round-trippable)."""

    kind: str
    parameters: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        params = {}
        for k, v in self.parameters.items():
            if k == "parts":
                params[k] = [p.to_dict() for p in v]
            elif k == "body":
                params[k] = v.to_dict()
            else:
                params[k] = v
        return {"kind": self.kind, **params}

    @classmethod
    def from_dict(cls, d: dict) -> "BodySpec":
        if not isinstance(d, dict) or "kind" not in d:
            raise InvalidParameter("body spec needs a 'kind' field")
        d = dict(d)
        kind = d.pop("kind")
        if kind == "minkowski_sum":
            d["parts"] = tuple(cls.from_dict(p) for p in d.get("parts", []))
        elif kind == "translated":
            d["body"] = cls.from_dict(d["body"])
        spec = cls(kind, d)
        support(spec)  # validate eagerly
        return spec

    @classmethod
    def from_json(cls, text: str) -> "BodySpec":
        return cls.from_dict(json.loads(text))

    def label(self) -> str:
        p = self.parameters
        if self.kind == "ball":
            return f"ball(r={p.get('r')}, center={tuple(p.get('center', (0, 0, 0)))})"
        if self.kind == "ellipsoid":
            return f"ellipsoid({p.get('a')},{p.get('b')},{p.get('c')})"
        if self.kind == "minkowski_sum":
            return "sum[" + " + ".join(q.label() for q in p["parts"]) + "]"
        if self.kind == "translated":
            return f"translated({p['body'].label()}, {tuple(p['vector'])})"
        return f"{self.kind}{p}"


def ball(r, center=(0.0, 0.0, 0.0)) -> BodySpec:
    return BodySpec("ball", {"r": r, "center": list(center)})


def ellipsoid(a, b, c, rotation=None) -> BodySpec:
    params = {"a": a, "b": b, "c": c}
    if rotation is not None:
        params["rotation"] = np.asarray(rotation, dtype=float).tolist()
    return BodySpec("ellipsoid", params)


def minkowski_sum(*parts: BodySpec) -> BodySpec:
    return BodySpec("minkowski_sum", {"parts": tuple(parts)})


def translated(body: BodySpec, vector) -> BodySpec:
    return BodySpec("translated", {"body": body, "vector": list(vector)})


def zonal_harmonic(r, amplitude, degree, axis=(0.0, 0.0, 1.0)) -> BodySpec:
    return BodySpec("zonal_harmonic", {"r": r, "amplitude": amplitude, "degree": degree,
                                       "axis": list(axis)})


def support(spec: BodySpec) -> SupportFunction:
    """Build the support function of a body specification."""
    p = spec.parameters
    try:
        if spec.kind == "ball":
            return Ball(p["r"], p.get("center", (0.0, 0.0, 0.0)))
        if spec.kind == "ellipsoid":
            return Ellipsoid(p["a"], p["b"], p["c"], p.get("rotation"))
        if spec.kind == "minkowski_sum":
            return MinkowskiSum(support(q) for q in p["parts"])
        if spec.kind == "translated":
            return Translated(support(p["body"]), p["vector"])
        if spec.kind == "zonal_harmonic":
            return ZonalHarmonic(p["r"], p["amplitude"], p["degree"], p.get("axis", (0, 0, 1)))
    except KeyError as exc:
        raise InvalidParameter(f"{spec.kind}: missing parameter {exc}") from None
    except (TypeError, ValueError) as exc:
        if isinstance(exc, InvalidParameter):
            raise
        raise InvalidParameter(f"{spec.kind}: {exc}") from None
    raise InvalidParameter(f"unknown body kind {spec.kind!r}")


def restrict(H: SupportFunction, omega, frame: Frame | None = None):
    """The periodic function ``phi -> H(point phi of S_omega)``."""
    e, n = east_north(as_vec(omega), frame)

    def h(phi):
        phi = np.asarray(phi, dtype=float)[..., None]
        return H(np.cos(phi) * e + np.sin(phi) * n)

    return h


def restrict_samples(H: SupportFunction, omega, east=None, north=None, M: int = 128) -> Array:
    """Samples of the restriction on ``M`` uniform nodes; shape ``(..., M)``."""
    if east is None or north is None:
        east, north = east_north(omega)
    return H(circle_points(east, north, M))


@dataclass(frozen=True)
class SurfacePoint:
    position: np.ndarray
    normal: np.ndarray


def tangent_gradient(H: SupportFunction, Omega, h: float = 1e-4, tol: float = 1e-6):
    """Spherical gradient of ``H`` at ``Omega`` by geodesic central differences.

    The step ``h`` and ``h/2`` estimates are Richardson-combined; their gap
    beyond ``tol`` (relative to ``max(1, |H|)``) raises :class:`NonSmooth`.
    """
    w = as_vec(Omega)
    e, n = east_north(w, fallback=True)
    grads = []
    for step in (h, h / 2):
        c, s = np.cos(step), np.sin(step)
        de = (H(c * w + s * e) - H(c * w - s * e)) / (2 * step)
        dn = (H(c * w + s * n) - H(c * w - s * n)) / (2 * step)
        grads.append(np.asarray(de)[..., None] * e + np.asarray(dn)[..., None] * n)
    g1, g2 = grads
    scale = max(1.0, float(np.max(np.abs(H(w)))))
    if np.max(np.abs(g1 - g2)) > tol * scale:
        raise NonSmooth("gradient estimates at two step sizes disagree")
    return (4 * g2 - g1) / 3


def surface_point(H: SupportFunction, Omega) -> SurfacePoint:
    """Boundary point with outer normal ``Omega``: ``H(Omega) Omega + grad H``."""
    w = as_vec(Omega)
    pos = np.asarray(H(w))[..., None] * w + tangent_gradient(H, w)
    return SurfacePoint(pos, w)


def is_convex(H: SupportFunction, n_dirs: int = 200, M: int = 128, seed: int = 0) -> bool:
    """Check ``h + h'' >= 0`` on the great circles of random directions."""
    from .quadrature import plus_second_derivative

    rng = np.random.default_rng(seed)
    w = rng.normal(size=(n_dirs, 3))
    w /= np.linalg.norm(w, axis=1, keepdims=True)
    vals = H(circle_points(*east_north(w), M))
    radii = plus_second_derivative(vals)
    return bool(radii.min() >= -1e-8 * np.abs(vals).max())
