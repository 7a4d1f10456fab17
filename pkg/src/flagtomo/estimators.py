"""scikit-learn style wrappers around the forward map and the reconstruction.

``ForwardMap`` turns flags ``(omega, d)`` (rows of 6 numbers) into projection
curvature radii of a fixed body.  ``SupportFunctionReconstructor`` is fitted
on flag data and predicts support function values at directions.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .bodies import BodySpec, SupportFunction, support
from .errors import InvalidParameter
from .forward import FlagFunction, ForwardFlagFunction, read_flag_csv
from .reconstruct import QuadratureSpec, reconstruct_grid


def check_directions(X) -> np.ndarray:
    """Validate an ``(n, 3)`` array of nonzero vectors and normalise the rows."""
    X = check_array(X, dtype=float, ensure_min_samples=0)
    if X.shape[1] != 3:
        raise ValueError(f"directions need 3 columns, got {X.shape[1]}")
    norms = np.linalg.norm(X, axis=1)
    if np.any(norms == 0):
        raise ValueError("zero vector among directions")
    return X / norms[:, None]


def check_flags(X, tol: float = 1e-8) -> tuple[np.ndarray, np.ndarray]:
    """Validate ``(n, 6)`` flag rows ``[omega, d]`` with orthogonal unit halves."""
    X = check_array(X, dtype=float, ensure_min_samples=0)
    if X.shape[1] != 6:
        raise ValueError(f"flags need 6 columns (omega, d), got {X.shape[1]}")
    w, d = check_directions(X[:, :3]), check_directions(X[:, 3:])
    if len(X) and np.max(np.abs(np.sum(w * d, axis=1))) > tol:
        raise ValueError("flag point d must be orthogonal to omega")
    return w, d


def _body(body) -> SupportFunction:
    if isinstance(body, SupportFunction):
        return body
    if isinstance(body, BodySpec):
        return support(body)
    if isinstance(body, dict):
        return support(BodySpec.from_dict(body))
    raise InvalidParameter("body must be a SupportFunction, BodySpec or body dict")


class ForwardMap(TransformerMixin, BaseEstimator):
    """Projection curvature radii of ``body`` at flag rows ``[omega, d]``."""

    def __init__(self, body=None, M: int = 128, check_sign: bool = True):
        self.body = body
        self.M = M
        self.check_sign = check_sign

    def fit(self, X=None, y=None):
        self.flag_function_ = ForwardFlagFunction(_body(self.body), self.M, self.check_sign)
        return self

    def transform(self, X):
        check_is_fitted(self, "flag_function_")
        w, d = check_flags(X)
        return self.flag_function_.values(w, d)[:, None]


class SupportFunctionReconstructor(BaseEstimator):
    """Reconstruct support function values from flag data.

    ``fit`` accepts a :class:`FlagFunction` or a path to a flag-sample CSV;
    ``predict`` evaluates the reconstruction at rows of directions.
    """

    def __init__(self, M_phi: int = 128, M_tau: int = 128, N_nu: int = 64, eps_pole: float = 1e-3,
                 extrapolate_pole: bool = True, n_jobs: int = 1):
        self.M_phi = M_phi
        self.M_tau = M_tau
        self.N_nu = N_nu
        self.eps_pole = eps_pole
        self.extrapolate_pole = extrapolate_pole
        self.n_jobs = n_jobs

    def fit(self, F, y=None):
        if isinstance(F, (str, Path)):
            F = read_flag_csv(F)
        if not isinstance(F, FlagFunction):
            raise InvalidParameter("fit expects a FlagFunction or a flag-sample CSV path")
        self.quadrature_ = QuadratureSpec(self.M_phi, self.M_tau, self.N_nu, self.eps_pole, self.extrapolate_pole)
        self.flag_function_ = F
        return self

    def reconstruct(self, X, conditions: bool = False):
        """Full :class:`ReconstructionResult` at the rows of ``X``."""
        check_is_fitted(self, "flag_function_")
        return reconstruct_grid(self.flag_function_, check_directions(X), self.quadrature_,
                                n_jobs=self.n_jobs, conditions=conditions)

    def predict(self, X) -> np.ndarray:
        return self.reconstruct(X).H_values

    def score(self, X, y) -> float:
        """Negative sup-norm error against reference values ``y``."""
        y = np.asarray(y, dtype=float).ravel()
        return -float(np.max(np.abs(self.predict(X) - y), initial=0.0))
