"""Quadrature and differentiation primitives for periodic samples.

Samples on a circle are always taken at the uniform nodes
``phi_k = 2 pi k / M`` (``M`` even) along the last array axis.
"""

from __future__ import annotations

import numpy as np

TWO_PI = 2.0 * np.pi


def nodes(M: int) -> np.ndarray:
    return TWO_PI * np.arange(M) / M


def trapezoid_periodic(values, axis=-1):
    """Periodic trapezoid rule for samples over one full period."""
    values = np.asarray(values)
    return values.sum(axis=axis) * (TWO_PI / values.shape[axis])


def spectral_second_derivative(values, axis=-1):
    """``d^2/dphi^2`` of periodic samples by discrete Fourier differentiation.

    The Nyquist mode is differentiated as ``cos(M phi / 2)`` (its real part).
    """
    values = np.asarray(values, dtype=float)
    M = values.shape[axis]
    k = np.fft.rfftfreq(M, 1.0 / M)
    shape = [1] * values.ndim
    shape[axis] = k.size
    spec = np.fft.rfft(values, axis=axis) * (-(k**2)).reshape(shape)
    return np.fft.irfft(spec, n=M, axis=axis)


def plus_second_derivative(values, axis=-1):
    """``h + h''`` of periodic samples (the planar curvature-radius operator)."""
    values = np.asarray(values, dtype=float)
    M = values.shape[axis]
    k = np.fft.rfftfreq(M, 1.0 / M)
    shape = [1] * values.ndim
    shape[axis] = k.size
    spec = np.fft.rfft(values, axis=axis) * (1.0 - k**2).reshape(shape)
    return np.fft.irfft(spec, n=M, axis=axis)


def resample(values, M_out: int, shift=0.0):
    """Trigonometric interpolation of periodic samples onto ``M_out`` nodes.

    The output nodes are ``shift + 2 pi k / M_out``; ``shift`` may be an
    array broadcasting against the leading axes.
    """
    values = np.asarray(values, dtype=float)
    M = values.shape[-1]
    if M_out == M and not np.any(shift):
        return values.copy()
    return synthesize(np.fft.rfft(values, axis=-1), M, M_out, shift)


def synthesize(spectrum, M_in: int, M_out: int, shift=0.0):
    """Evaluate an ``rfft`` spectrum of ``M_in`` samples on ``M_out`` nodes.

    Modes the output grid cannot carry are dropped; the sine half of a
    shared Nyquist mode aliases away.
    """
    c = np.asarray(spectrum)
    shift = np.asarray(shift, dtype=float)
    K = min(M_in, M_out) // 2
    k = np.arange(K + 1)
    phase = np.exp(1j * k * shift[..., None])
    lead = np.broadcast_shapes(c.shape[:-1], shift.shape)
    b = np.zeros(lead + (M_out // 2 + 1,), dtype=complex)
    b[..., :K] = c[..., :K] * phase[..., :K] * (M_out / M_in)
    top = c[..., K] * phase[..., K]
    if M_out > M_in:
        b[..., K] = top * (M_out / (2.0 * M_in))
    elif M_out < M_in:
        b[..., K] = (2.0 * M_out / M_in) * top.real
    else:
        b[..., K] = top.real
    return np.fft.irfft(b, n=M_out, axis=-1)


_GL_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def gauss_legendre(n: int, a: float, b: float):
    """Gauss-Legendre nodes and weights on ``[a, b]``."""
    if n not in _GL_CACHE:
        _GL_CACHE[n] = np.polynomial.legendre.leggauss(n)
    x, w = _GL_CACHE[n]
    half = 0.5 * (b - a)
    return half * (x + 1.0) + a, w * half


def spectral_weights_from_moments(moments: np.ndarray, nyquist_moment: float, M: int) -> np.ndarray:
    """Nodal weights ``w_j`` with ``sum_j w_j g(phi_j) = sum_k g_k m_k``.

    ``moments[k]`` is ``int W(phi) exp(i k phi) dphi`` for ``k = 0..M/2-1`` and
    ``nyquist_moment`` the integral of ``W cos(M phi / 2)``.  The result is
    exact for every trigonometric polynomial the grid resolves.
    """
    phi = nodes(M)
    k = np.arange(M // 2)
    e = np.exp(-1j * np.outer(phi, k))
    w = 2.0 * (e[:, 1:] @ moments[1:]).real + moments[0].real
    w = w + ((-1.0) ** np.arange(M)) * nyquist_moment
    return w / M


def spectral_weights(weight_fn, a: float, b: float, M: int, n_gl: int | None = None) -> np.ndarray:
    """Nodal weights for ``int_a^b weight_fn(phi) g(phi) dphi`` with periodic ``g``.

    ``weight_fn`` only needs to be smooth on ``[a, b]``; the moments are
    computed by Gauss-Legendre quadrature of ``weight_fn`` times the Fourier
    modes.
    """
    n_gl = n_gl or max(256, 2 * M)
    x, wx = gauss_legendre(n_gl, a, b)
    Wx = weight_fn(x) * wx
    k = np.arange(M // 2)
    moments = np.exp(1j * np.outer(k, x)) @ Wx
    nyq = np.cos(0.5 * M * x) @ Wx
    return spectral_weights_from_moments(moments, nyq, M)


def central_difference(f, x: float, h: float, richardson: bool = True):
    """Central-difference derivative of ``f`` at ``x``.

    With ``richardson`` the estimates at ``h`` and ``h/2`` are combined as
    ``(4 D(h/2) - D(h)) / 3``.  Returns ``(estimate, D(h), D(h/2))``.
    """
    d1 = (np.asarray(f(x + h)) - np.asarray(f(x - h))) / (2 * h)
    if not richardson:
        return d1, d1, d1
    d2 = (np.asarray(f(x + h / 2)) - np.asarray(f(x - h / 2))) / h
    return (4 * d2 - d1) / 3, d1, d2
