"""Support function reconstruction from flag data.

``reconstruct_support`` evaluates the closed-form triple-integral
representation at one direction.  ``ode_path_support`` reaches the same value
by integrating the averaged latitude ODE from the pole to the equator and
serves as an independent cross-check.  ``centroid`` locates the origin the
representation is referenced to.
"""

from __future__ import annotations

import csv
import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from functools import lru_cache

import numpy as np

from .bodies import SampledSupport, SupportFunction, equiangular_grid, surface_point
from .conditions import ConditionReport, check_belt_derivative, check_orthogonality, merge_reports
from .errors import (
    FlagTomoError,
    IllConditioned,
    InvalidParameter,
    PoleDivergence,
    QuadratureUnderresolved,
)
from .forward import FlagFunction
from .frames import Direction, Frame, as_vec, latlong_frames, to_cartesian, to_spherical
from .quadrature import TWO_PI, gauss_legendre, nodes, spectral_weights

POLE_TOL = 1e-5
TAIL_STEPS = (1.0, 0.5, 0.25, 0.125)


@dataclass(frozen=True)
class QuadratureSpec:
    M_phi: int = 128
    M_tau: int = 128
    N_nu: int = 64
    eps_pole: float = 1e-3
    extrapolate_pole: bool = True

    def __post_init__(self):
        for name in ("M_phi", "M_tau"):
            v = getattr(self, name)
            if int(v) != v or v < 8 or v % 2:
                raise InvalidParameter(f"{name} must be an even integer >= 8, got {v}")
        if int(self.N_nu) != self.N_nu or self.N_nu < 8:
            raise InvalidParameter(f"N_nu must be an integer >= 8, got {self.N_nu}")
        if not 0.0 < self.eps_pole < np.pi / 4:
            raise InvalidParameter(f"eps_pole must lie in (0, pi/4), got {self.eps_pole}")
        object.__setattr__(self, "M_phi", int(self.M_phi))
        object.__setattr__(self, "M_tau", int(self.M_tau))
        object.__setattr__(self, "N_nu", int(self.N_nu))
        object.__setattr__(self, "eps_pole", float(self.eps_pole))
        object.__setattr__(self, "extrapolate_pole", bool(self.extrapolate_pole))

    def coarsened(self) -> "QuadratureSpec":
        """Half the node counts (floored at 8), same pole cutoff."""
        half = lambda n: max(8, (n // 4) * 2)
        return QuadratureSpec(half(self.M_phi), half(self.M_tau), max(8, self.N_nu // 2),
                              self.eps_pole, self.extrapolate_pole)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "QuadratureSpec":
        unknown = set(d) - {"M_phi", "M_tau", "N_nu", "eps_pole", "extrapolate_pole"}
        if unknown:
            raise InvalidParameter(f"unknown quadrature fields {sorted(unknown)}")
        return cls(**d)

    @classmethod
    def parse(cls, text: str) -> "QuadratureSpec":
        """From ``"M_phi,M_tau,N_nu,eps_pole"``."""
        parts = [p.strip() for p in text.split(",")]
        if len(parts) != 4:
            raise InvalidParameter("quadrature must be M_phi,M_tau,N_nu,eps_pole")
        try:
            return cls(int(parts[0]), int(parts[1]), int(parts[2]), float(parts[3]))
        except ValueError as exc:
            raise InvalidParameter(f"bad quadrature {text!r}: {exc}") from None


DEFAULT_QUADRATURE = QuadratureSpec()


# --- phi weights ----------------------------------------------------------


@lru_cache(maxsize=None)
def _phi_weights(M: int):
    """Nodal weights for the two half-range phi integrals of the equator terms."""
    w1 = spectral_weights(np.cos, 0.0, np.pi / 2, M)
    w2 = spectral_weights(lambda p: (np.pi + 2 * p) * np.cos(p) - 2 * np.sin(p) ** 3, -np.pi / 2, np.pi / 2, M)
    w1.setflags(write=False)
    w2.setflags(write=False)
    return w1, w2


def _circles(F: FlagFunction, frame: Frame, nu, M_tau: int, M_phi: int, chunk: int = 8) -> np.ndarray:
    """``F((nu_i, tau_j)_frame, phi_k)`` as an array ``(len(nu), M_tau, M_phi)``."""
    nu = np.atleast_1d(np.asarray(nu, dtype=float))
    tau = nodes(M_tau)
    out = np.empty((nu.size, M_tau, M_phi))
    for s in range(0, nu.size, chunk):
        w, e, n = latlong_frames(frame, nu[s:s + chunk, None], tau[None, :])
        out[s:s + chunk] = F.circle(w, e, n, M_phi)
    return out


def equator_terms(F: FlagFunction, Omega, q: QuadratureSpec = DEFAULT_QUADRATURE):
    """The two equator integrals ``(term1, term2)`` at ``Omega``."""
    frame = Frame.at(as_vec(Omega))
    vals = _circles(F, frame, [0.0], q.M_tau, q.M_phi)[0]
    w1, w2 = _phi_weights(q.M_phi)
    dtau = TWO_PI / q.M_tau
    t1 = dtau * np.sum(vals @ w1) / (4 * np.pi)
    t2 = dtau * np.sum(vals @ w2) / (8 * np.pi**2)
    return float(t1), float(t2), float(np.max(np.abs(vals)))


def inner_integral(F: FlagFunction, Omega, nu, q: QuadratureSpec = DEFAULT_QUADRATURE) -> np.ndarray:
    """``int int F((nu, tau)_Omega, phi) sin^3(phi) dphi dtau`` at each latitude."""
    frame = Frame.at(as_vec(Omega))
    s3 = np.sin(nodes(q.M_phi)) ** 3
    vals = _circles(F, frame, nu, q.M_tau, q.M_phi)
    return (vals @ s3).sum(-1) * (TWO_PI / q.M_phi) * (TWO_PI / q.M_tau)


def term3_integrand(F: FlagFunction, Omega, nu, q: QuadratureSpec = DEFAULT_QUADRATURE) -> np.ndarray:
    """``sin(nu) / cos^2(nu)`` times the inner double integral."""
    nu = np.atleast_1d(np.asarray(nu, dtype=float))
    return np.sin(nu) / np.cos(nu) ** 2 * inner_integral(F, Omega, nu, q)


@dataclass
class PoleFit:
    """Near-pole model ``g ~ c1 / s + c2 + c3 s`` of a latitude integrand, ``s = cos(nu)``.

    A nonzero ``c1`` makes the integral log-divergent at the pole.
    """

    c1: float
    c2: float
    c3: float
    scale: float

    @property
    def divergent(self) -> bool:
        return abs(self.c1) > POLE_TOL * self.scale

    def tail(self, eps: float) -> float:
        """Integral of the bounded part of the model over ``[pi/2 - eps, pi/2]``."""
        return self.c2 * eps + self.c3 * (1.0 - np.cos(eps))


def fit_pole(t, g, scale: float) -> PoleFit:
    """Least-squares fit of the near-pole model at distances ``t`` from the pole."""
    s = np.sin(np.asarray(t, dtype=float))
    A = np.column_stack([np.ones_like(s), s, s**2])
    coef, *_ = np.linalg.lstsq(A, np.asarray(g, dtype=float) * s, rcond=None)
    return PoleFit(float(coef[0]), float(coef[1]), float(coef[2]), scale)


@dataclass
class SupportEstimate:
    H: float
    terms: tuple
    pole: PoleFit
    scale: float


def _estimate(F: FlagFunction, Omega, q: QuadratureSpec) -> SupportEstimate:
    t1, t2, scale = equator_terms(F, Omega, q)
    eps = q.eps_pole
    x, w = gauss_legendre(q.N_nu, 0.0, np.pi / 2 - eps)
    t = eps * np.asarray(TAIL_STEPS)
    nu = np.concatenate([x, np.pi / 2 - t])
    inner = inner_integral(F, Omega, nu, q)
    g = np.sin(nu) / np.cos(nu) ** 2 * inner
    pole = fit_pole(t, g[x.size:], scale)
    if pole.divergent:
        raise PoleDivergence(
            f"term3 integrand grows like 1/cos(nu) near the pole (c1={pole.c1:.3e}); "
            "the belt-derivative condition is violated", c1=pole.c1, direction=as_vec(Omega))
    integral = float(w @ g[: x.size])
    if q.extrapolate_pole:
        integral += pole.tail(eps)
    t3 = -integral / (2 * np.pi**2)
    return SupportEstimate(t1 + t2 + t3, (t1, t2, t3), pole, scale)


def reconstruct_support(F: FlagFunction, Omega, q: QuadratureSpec = DEFAULT_QUADRATURE,
                        target_tol: float | None = None):
    """Support function value at ``Omega`` and its three-term breakdown.

    With ``target_tol`` the value is recomputed on the coarsened quadrature and
    :class:`QuadratureUnderresolved` is raised when the two differ by more
    than ten times the tolerance.
    """
    est = _estimate(F, Omega, q)
    if target_tol is not None:
        coarse = _estimate(F, Omega, q.coarsened())
        if abs(coarse.H - est.H) > 10 * target_tol:
            raise QuadratureUnderresolved(
                f"halving the quadrature moved H by {abs(coarse.H - est.H):.3e}")
    return est.H, est.terms


# --- grids ----------------------------------------------------------------


@dataclass
class ReconstructionResult:
    directions: np.ndarray
    H_values: np.ndarray
    term1: np.ndarray
    term2: np.ndarray
    term3: np.ndarray
    quadrature: QuadratureSpec
    condition_reports: list = field(default_factory=list)
    failures: dict = field(default_factory=dict)
    grid_shape: tuple | None = None
    wall_time: float | None = None

    def __len__(self):
        return len(self.H_values)

    def items(self):
        for d, h in zip(self.directions, self.H_values):
            yield Direction.of(d), float(h)

    @property
    def ok(self) -> bool:
        return not self.failures

    def to_dict(self) -> dict:
        nu, tau = to_spherical(self.directions) if len(self) else (np.zeros(0), np.zeros(0))
        rows = []
        for i in range(len(self)):
            rows.append({
                "direction": [float(v) for v in self.directions[i]],
                "Omega_nu": float(nu[i]), "Omega_tau": float(tau[i]),
                "H": _num(self.H_values[i]), "term1": _num(self.term1[i]),
                "term2": _num(self.term2[i]), "term3": _num(self.term3[i]),
                "error": self.failures.get(i),
            })
        return {
            "quadrature": self.quadrature.to_dict(),
            "grid_shape": list(self.grid_shape) if self.grid_shape else None,
            "directions": rows,
            "condition_reports": [r.to_dict() for r in self.condition_reports],
            "n_failed": len(self.failures),
            "wall_time": self.wall_time,
        }

    def to_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")

    def to_csv(self, path) -> None:
        nu, tau = to_spherical(self.directions) if len(self) else (np.zeros(0), np.zeros(0))
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(["Omega_nu", "Omega_tau", "H", "term1", "term2", "term3"])
            for i in range(len(self)):
                wr.writerow([repr(float(v)) for v in
                             (nu[i], tau[i], self.H_values[i], self.term1[i], self.term2[i], self.term3[i])])


def _num(v):
    v = float(v)
    return v if np.isfinite(v) else None


def _as_directions(grid) -> np.ndarray:
    if isinstance(grid, np.ndarray) and grid.ndim == 2:
        return as_vec(grid) if len(grid) else np.zeros((0, 3))
    grid = list(grid)
    if not grid:
        return np.zeros((0, 3))
    return np.array([as_vec(d) for d in grid])


def reconstruct_grid(F: FlagFunction, grid, q: QuadratureSpec = DEFAULT_QUADRATURE, n_jobs: int = 1,
                     conditions: bool = True, grid_shape=None, timing: bool = False) -> ReconstructionResult:
    """``reconstruct_support`` over many directions.

    Failures at single directions are recorded in ``failures`` (index to
    message) with NaN values; the rest of the grid is still computed.  With
    ``conditions`` the orthogonality and belt-derivative checks are run at
    every grid direction and merged into one worst-case report each.
    """
    D = _as_directions(grid)
    n = len(D)
    start = time.perf_counter()

    def one(i):
        try:
            est = _estimate(F, D[i], q)
            out = (est.H, *est.terms, None)
        except (FlagTomoError, ValueError) as exc:
            out = (np.nan, np.nan, np.nan, np.nan, f"{type(exc).__name__}: {exc}")
        reps = []
        if conditions:
            for check in (check_orthogonality, check_belt_derivative):
                try:
                    reps.append(check(F, D[i]))
                except FlagTomoError:
                    pass
        return out, reps

    if n_jobs is None or n_jobs == 1 or n <= 1:
        results = [one(i) for i in range(n)]
    else:
        workers = None if n_jobs < 0 else n_jobs
        with ThreadPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(one, range(n)))

    vals = np.array([r[0][:4] for r in results], dtype=float).reshape(n, 4)
    failures = {i: r[0][4] for i, r in enumerate(results) if r[0][4] is not None}
    reports = []
    if conditions and n:
        for cid in ("orthogonality", "belt_derivative"):
            group = [rep for r in results for rep in r[1] if rep.condition_id == cid]
            if group:
                reports.append(merge_reports(group))
    wall = time.perf_counter() - start if timing else None
    return ReconstructionResult(D, vals[:, 0], vals[:, 1], vals[:, 2], vals[:, 3], q, reports, failures,
                                tuple(grid_shape) if grid_shape else None, wall)


# --- centroid -------------------------------------------------------------


def _belt_differences(H: SupportFunction, Omega, M: int, h: float):
    frame = Frame.at(as_vec(Omega))
    tau = nodes(M)
    vals = {}
    for s in (h, -h, h / 2, -h / 2):
        P, _, _ = latlong_frames(frame, np.full(M, s), tau)
        vals[s] = H(P).sum() * (TWO_PI / M)
    d1 = (vals[h] - vals[-h]) / (2 * h)
    d2 = (vals[h / 2] - vals[-h / 2]) / h
    return (4 * d2 - d1) / 3


def belt_functional(H: SupportFunction, Q, Omega, M: int = 256, h: float = 1e-4, form: str = "derivative") -> float:
    """``K_Q(Omega) = int <P_Omega(tau) - Q, Omega> dtau`` over the belt of ``Omega``.

    ``form='derivative'`` differentiates ``H_Q`` across the equator of
    ``Omega``; ``form='geometric'`` integrates the height of the boundary
    points with normals on the equator (needs a 2-smooth body).
    """
    Q = np.asarray(Q, dtype=float).reshape(3)
    W = as_vec(Omega)
    if form == "derivative":
        # the translation term <Q, (nu, tau)> differentiates to 2 pi <Q, Omega>
        return float(_belt_differences(H, W, M, h) - TWO_PI * (Q @ W))
    if form == "geometric":
        frame = Frame.at(W)
        P, _, _ = latlong_frames(frame, np.zeros(M), nodes(M))
        heights = [surface_point(H, p).position @ W for p in P]
        return float(np.sum(heights) * (TWO_PI / M) - TWO_PI * (Q @ W))
    raise InvalidParameter(f"unknown belt functional form {form!r}")


def cube_directions() -> np.ndarray:
    """The 26 directions to the vertices, edge midpoints and faces of a cube."""
    pts = [np.array([i, j, k], float) for i in (-1, 0, 1) for j in (-1, 0, 1) for k in (-1, 0, 1)
           if (i, j, k) != (0, 0, 0)]
    return np.array([p / np.linalg.norm(p) for p in pts])


@dataclass
class CentroidResult:
    point: np.ndarray
    max_belt_residual: float

    def to_dict(self) -> dict:
        return {"point": [float(v) for v in self.point], "max_belt_residual": float(self.max_belt_residual)}


def centroid(H: SupportFunction, directions=None, M: int = 256, h: float = 1e-4) -> CentroidResult:
    """Point ``Q`` minimising ``K_Q`` over the sampled directions.

    ``K_Q(Omega) = K_O(Omega) - 2 pi <Q, Omega>`` is affine in ``Q`` so this
    is a 3-unknown linear least-squares problem.
    """
    if H.smoothness_order < 1:
        raise InvalidParameter("centroid needs a 1-smooth support function")
    W = cube_directions() if directions is None else _as_directions(directions)
    K0 = np.array([_belt_differences(H, w, M, h) for w in W])
    A = TWO_PI * W
    if len(W) < 3 or np.linalg.matrix_rank(A, tol=1e-10 * TWO_PI) < 3:
        raise IllConditioned("belt directions do not span space; centroid is underdetermined")
    Q, *_ = np.linalg.lstsq(A, K0, rcond=None)
    resid = np.abs(K0 - A @ Q).max()
    return CentroidResult(Q, float(resid))


# --- averaged ODE path ----------------------------------------------------


def _V(W, K, psi, n: int = 200):
    """``int_psi^{2pi} W(phi) K(phi - psi) dphi`` for an array of ``psi``."""
    psi = np.atleast_1d(np.asarray(psi, dtype=float))
    x, w = np.polynomial.legendre.leggauss(n)
    half = (TWO_PI - psi)[:, None] / 2
    phi = half * (x + 1) + psi[:, None]
    return (W(phi) * K(phi - psi[:, None]) * w).sum(-1) * half[:, 0]


def kernel_I(psi):
    return _V(lambda p: np.sin(2 * p) * np.cos(p), np.sin, psi)


def kernel_II(psi):
    return _V(lambda p: np.sin(2 * p) * np.sin(p), np.cos, psi)


def kernel_tau(psi):
    return _V(lambda p: np.sin(2 * p) * np.sin(p), np.sin, psi)


@lru_cache(maxsize=None)
def _ode_weights(M: int):
    out = []
    for kern in (kernel_I, kernel_II, kernel_tau):
        w = spectral_weights(kern, 0.0, TWO_PI, M, n_gl=4 * M)
        w.setflags(write=False)
        out.append(w)
    return tuple(out)


@dataclass
class OdePathState:
    """Latitude profiles of the averaged path: ``Abar`` and ``Sbar`` at ``nu``."""

    nu: np.ndarray
    Abar: np.ndarray
    Sbar: np.ndarray
    Sbar0: float

    def residual(self) -> np.ndarray:
        """``Sbar' + tan(nu) Sbar - Abar`` at the nodes, with ``Sbar'`` spectral."""
        series = self._series()
        c = np.cos(self.nu)
        dS = series.deriv()(self.nu) * c - np.sin(self.nu) * (self.Sbar0 + series(self.nu))
        return dS + np.tan(self.nu) * self.Sbar - self.Abar

    def _series(self):
        # Sbar / cos = Sbar0 + int_0^nu Abar / cos, represented as a Legendre series
        b = self.nu.max() + (self.nu.max() - self.nu.min()) / (len(self.nu) - 1)
        g = np.polynomial.Legendre.fit(self.nu, self.Abar / np.cos(self.nu), len(self.nu) - 1,
                                       domain=[0.0, b])
        return g.integ(lbnd=0.0)


def _circle_derivs(F, frame, nu, M_tau, M_phi, h):
    """Richardson central differences of the circle samples in ``nu`` and ``tau``."""
    def at(dnu, dtau):
        tau = nodes(M_tau) + dtau
        w, e, n = latlong_frames(frame, np.full(M_tau, nu + dnu), tau)
        return F.circle(w, e, n, M_phi)

    def d(step):
        a = (at(step, 0) - at(-step, 0)) / (2 * step)
        b = (at(0, step) - at(0, -step)) / (2 * step)
        return a, b

    a1, b1 = d(h)
    a2, b2 = d(h / 2)
    return (4 * a2 - a1) / 3, (4 * b2 - b1) / 3, at(0.0, 0.0)


def ode_path_state(F: FlagFunction, Omega, q: QuadratureSpec = DEFAULT_QUADRATURE, h: float = 1e-3) -> OdePathState:
    """Average ``Abar(nu)`` of the consistency source terms and the resulting ``Sbar``.

    ``Sbar(0) = -int_0^{pi/2} Abar / cos`` uses the vanishing pole boundary
    term; the tail beyond ``pi/2 - eps_pole`` is extrapolated as in
    ``reconstruct_support``.
    """
    frame = Frame.at(as_vec(Omega))
    wI, wII, wT = _ode_weights(q.M_phi)
    eps = q.eps_pole
    x, w = gauss_legendre(q.N_nu, 0.0, np.pi / 2 - eps)
    t = eps * np.asarray(TAIL_STEPS)
    nus = np.concatenate([x, np.pi / 2 - t])
    A = np.empty(nus.size)
    dtau = TWO_PI / q.M_tau
    for i, nu in enumerate(nus):
        Fn, Ft, F0 = _circle_derivs(F, frame, nu, q.M_tau, q.M_phi, h)
        s = -(Fn @ wI).sum() + (Ft @ wT).sum() / np.cos(nu) - np.tan(nu) * (F0 @ wII).sum()
        A[i] = s * dtau / np.pi
    g = A / np.cos(nus)
    scale = float(np.abs(F0).max())
    pole = fit_pole(t, g[x.size:], scale)
    if pole.divergent:
        raise PoleDivergence(f"ODE-path integrand grows like 1/cos(nu) near the pole (c1={pole.c1:.3e})",
                             c1=pole.c1, direction=as_vec(Omega))
    integral = float(w @ g[: x.size])
    if q.extrapolate_pole:
        integral += pole.tail(eps)
    Sbar0 = -integral
    state = OdePathState(x, A[: x.size], np.zeros(x.size), Sbar0)
    state.Sbar = np.cos(x) * (Sbar0 + state._series()(x))
    return state


def ode_path_support(F: FlagFunction, Omega, q: QuadratureSpec = DEFAULT_QUADRATURE, h: float = 1e-3) -> float:
    """Support value from the averaged ODE path, independent of the closed form."""
    state = ode_path_state(F, Omega, q, h)
    frame = Frame.at(as_vec(Omega))
    vals = _circles(F, frame, [0.0], q.M_tau, q.M_phi)[0]
    w1, _ = _phi_weights(q.M_phi)
    first = (TWO_PI / q.M_tau) * np.sum(vals @ w1)
    return float((first + state.Sbar0) / TWO_PI)


class ReconstructedSupport(SupportFunction):
    """Support function evaluated pointwise by ``reconstruct_support``.

    Every call runs the full quadrature at each requested direction, so it
    suits short restrictions (a few great circles), not dense grids.
    """

    provenance = "reconstructed"
    smoothness_order = 2

    def __init__(self, F: FlagFunction, q: QuadratureSpec = DEFAULT_QUADRATURE):
        self.F = F
        self.q = q

    def __call__(self, u):
        u = np.asarray(u, dtype=float)
        flat = u.reshape(-1, 3)
        out = np.array([_estimate(self.F, d, self.q).H for d in flat])
        return out.reshape(u.shape[:-1])


def sampled_reconstruction(F: FlagFunction, n_nu: int, n_tau: int, q: QuadratureSpec = DEFAULT_QUADRATURE,
                           n_jobs: int = 1, result: ReconstructionResult | None = None):
    """Bicubic :class:`SampledSupport` through reconstructed values on an equiangular grid.

    A previously computed ``result`` on the same grid (row-major in
    ``(nu, tau)``) is reused instead of reconstructing again.
    """
    nu, tau = equiangular_grid(n_nu, n_tau)
    if result is None:
        result = reconstruct_grid(F, grid_directions(n_nu, n_tau), q, n_jobs=n_jobs, conditions=False)
    if len(result) != n_nu * n_tau:
        raise InvalidParameter("result does not match the requested grid")
    return SampledSupport(nu, tau, result.H_values.reshape(n_nu, n_tau))


def grid_directions(n_nu: int, n_tau: int) -> np.ndarray:
    """Directions of the equiangular output grid, row-major in ``(nu, tau)``."""
    nu, tau = equiangular_grid(n_nu, n_tau)
    N, T = np.meshgrid(nu, tau, indexing="ij")
    return to_cartesian(N, T).reshape(-1, 3)
