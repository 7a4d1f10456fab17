"""Necessary conditions on flag data and the algebra of flag solutions.

``check_orthogonality`` and ``check_belt_derivative`` test the two
conditions every projection curvature radius function satisfies;
``ode_residual`` tests whether a candidate support function reproduces the
data through ``h + h''``.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

import numpy as np

from .bodies import SupportFunction
from .errors import StepTooLarge
from .forward import DEFAULT_M, FlagFunction, ForwardFlagFunction
from .frames import Frame, as_vec, east_north, flag_to_point, latlong_frames
from .quadrature import TWO_PI, gauss_legendre, nodes, plus_second_derivative, trapezoid_periodic

DEFAULT_TOL = 1e-5

CONDITION_IDS = ("orthogonality", "belt_derivative", "ode_residual")


@dataclass
class ConditionReport:
    condition_id: str
    max_abs_residual: float
    worst_location: list
    tolerance_used: float
    pass_: bool = field(init=False)
    details: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.condition_id not in CONDITION_IDS:
            raise ValueError(f"unknown condition id {self.condition_id!r}")
        self.max_abs_residual = float(self.max_abs_residual)
        self.tolerance_used = float(self.tolerance_used)
        self.worst_location = [float(x) for x in np.ravel(self.worst_location)]
        self.pass_ = bool(self.max_abs_residual <= self.tolerance_used)

    @property
    def passed(self) -> bool:
        return self.pass_

    def to_dict(self) -> dict:
        d = asdict(self)
        d["pass"] = d.pop("pass_")
        d["details"] = {k: _plain(v) for k, v in self.details.items()}
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ConditionReport":
        d = dict(d)
        d.pop("pass", None)
        return cls(**d)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def _plain(v):
    if isinstance(v, np.ndarray):
        return v.tolist()
    if isinstance(v, np.generic):
        return v.item()
    return v


def merge_reports(reports: list[ConditionReport]) -> ConditionReport:
    """Worst-case aggregate of reports on the same condition."""
    worst = max(reports, key=lambda r: r.max_abs_residual - r.tolerance_used)
    out = ConditionReport(worst.condition_id, worst.max_abs_residual, worst.worst_location,
                          worst.tolerance_used, details={"n_checked": len(reports),
                                                         "n_failed": sum(not r.passed for r in reports)})
    return out


def _scale(values) -> float:
    return max(float(np.max(np.abs(values))), 1e-300)


# --- flag solutions -------------------------------------------------------


def particular_flag_solution(F: FlagFunction, omega, phi: float, frame: Frame | None = None,
                             start: float = 0.0, n: int = 64) -> float:
    """``int_start^phi F(omega, psi) sin(phi - psi) dpsi`` by Gauss-Legendre.

    With ``start = 0`` this is the solution of ``G + G'' = F`` with
    ``G(0) = G'(0) = 0``.
    """
    w = as_vec(omega)
    if phi == start:
        return 0.0
    psi, wts = gauss_legendre(n, start, phi)
    vals = F.values(w, flag_to_point(w, psi, frame))
    return float(np.sum(wts * vals * np.sin(phi - psi)))


def flag_solution(F: FlagFunction, omega, phi, C: float = 0.0, S: float = 0.0,
                  frame: Frame | None = None, start: float = 0.0, n: int = 64) -> np.ndarray:
    """General flag solution ``G + C cos(phi) + S sin(phi)`` at one or more angles."""
    phi = np.atleast_1d(np.asarray(phi, dtype=float))
    G = np.array([particular_flag_solution(F, omega, p, frame, start, n) for p in phi])
    return G + C * np.cos(phi) + S * np.sin(phi)


def circle_operator(samples) -> np.ndarray:
    """``g + g''`` of periodic circle samples."""
    return plus_second_derivative(samples)


def harmonic_fit(phi, values, max_degree: int = 2) -> dict:
    """Least-squares fit to ``{1, cos k phi, sin k phi : k <= max_degree}``.

    Returns the coefficients and the energy outside the first harmonic
    (squared coefficients of all other basis functions plus the residual
    mean square).
    """
    phi = np.asarray(phi, dtype=float)
    cols = [np.ones_like(phi)]
    names = ["1"]
    for k in range(1, max_degree + 1):
        cols += [np.cos(k * phi), np.sin(k * phi)]
        names += [f"cos{k}", f"sin{k}"]
    A = np.column_stack(cols)
    coef, *_ = np.linalg.lstsq(A, values, rcond=None)
    resid = values - A @ coef
    other = sum(c**2 for nm, c in zip(names, coef) if nm not in ("cos1", "sin1"))
    return {"coefficients": dict(zip(names, coef)), "non_first_energy": float(other + np.mean(resid**2))}


# --- condition checks -----------------------------------------------------


def check_orthogonality(F: FlagFunction, omega, M: int = DEFAULT_M, tol: float | None = None) -> ConditionReport:
    """First-harmonic content of ``F`` on ``S_omega``.

    The residual is ``|int F(omega, phi) exp(i phi) dphi|``, the largest value
    of ``|int F cos(phi - phi0) dphi|`` over all reference points ``phi0``; it
    bounds both the sine and cosine integrals.
    """
    w = as_vec(omega)
    e, n = east_north(w)
    vals = F.circle(w, e, n, M)
    phi = nodes(M)
    c = trapezoid_periodic(vals * np.cos(phi))
    s = trapezoid_periodic(vals * np.sin(phi))
    tol = DEFAULT_TOL * _scale(vals) if tol is None else tol
    return ConditionReport("orthogonality", float(np.hypot(c, s)), w, tol,
                           details={"cos_integral": float(c), "sin_integral": float(s)})


def belt_profile(F: FlagFunction, Omega, nu, M: int = DEFAULT_M) -> np.ndarray:
    """``int_0^{2pi} F*((nu, tau)_Omega, N) dtau`` for an array of latitudes.

    The dual flag at ``P = (nu, tau)_Omega`` pointing North corresponds to
    the primal flag with ``omega = N`` (the North tangent at ``P``) and
    circle point ``P``.
    """
    frame = Frame.at(as_vec(Omega))
    nu = np.atleast_1d(np.asarray(nu, dtype=float))
    tau = nodes(M)
    P, _, N = latlong_frames(frame, nu[:, None], tau[None, :])
    return trapezoid_periodic(F.values(N, P))


def check_belt_derivative(F: FlagFunction, Omega, h_nu: float = 1e-3, M: int = DEFAULT_M,
                          tol: float | None = None) -> ConditionReport:
    """``int [d/dnu F*((nu, tau)_Omega, N)]_{nu=0} dtau`` by central differences.

    Estimates at ``h_nu`` and ``h_nu / 2`` are Richardson-combined; a gap
    beyond ten times the tolerance raises :class:`StepTooLarge`.
    """
    steps = np.array([h_nu, -h_nu, h_nu / 2, -h_nu / 2, 0.0])
    J = belt_profile(F, Omega, steps, M)
    d1 = (J[0] - J[1]) / (2 * h_nu)
    d2 = (J[2] - J[3]) / h_nu
    est = (4 * d2 - d1) / 3
    scale = max(_scale(J), 1e-300) / TWO_PI
    tol = DEFAULT_TOL * scale if tol is None else tol
    if abs(d1 - d2) > 10 * max(tol, 1e-14):
        raise StepTooLarge(f"belt derivative estimates {d1:.3e} and {d2:.3e} disagree; reduce h_nu")
    return ConditionReport("belt_derivative", abs(est), as_vec(Omega), tol,
                           details={"derivative": float(est), "h_nu": h_nu})


def ode_residual(Hbar: SupportFunction, F: FlagFunction, omegas=None, M: int = DEFAULT_M,
                 tol: float | None = None) -> ConditionReport:
    """``max |hbar + hbar'' - F|`` over the great circles of ``omegas``.

    ``details['min_curvature']`` records the smallest ``hbar + hbar''`` seen,
    which must be nonnegative for ``Hbar`` to be a support function.
    """
    if omegas is None:
        omegas = fibonacci_directions(64)
    omegas = np.asarray([as_vec(w) for w in omegas]) if not isinstance(omegas, np.ndarray) else omegas
    e, n = east_north(omegas)
    fwd = ForwardFlagFunction(Hbar, M, check_sign=False).circle(omegas, e, n, M)
    data = F.circle(omegas, e, n, M)
    diff = np.abs(fwd - data)
    i, k = np.unravel_index(np.argmax(diff), diff.shape)
    tol = DEFAULT_TOL * _scale(data) if tol is None else tol
    return ConditionReport("ode_residual", float(diff[i, k]), [*omegas[i], nodes(M)[k]], tol,
                           details={"min_curvature": float(fwd.min())})


def fibonacci_directions(n: int) -> np.ndarray:
    """Quasi-uniform deterministic directions on the sphere."""
    i = np.arange(n) + 0.5
    z = 1 - 2 * i / n
    r = np.sqrt(1 - z**2)
    t = np.pi * (3 - np.sqrt(5)) * i
    return np.column_stack([r * np.cos(t), r * np.sin(t), z])
