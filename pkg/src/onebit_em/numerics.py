"""Shared numerical kernels.

Unitary DFT/IDFT over power-of-two lengths, a tail-stable standard normal
log-CDF and inverse Mills ratio, and largest singular values.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import special

__all__ = [
    "unitary_dft",
    "unitary_idft",
    "log_std_normal_cdf",
    "log_std_normal_pdf",
    "inv_mills",
    "largest_singular_value",
    "largest_singular_values",
]

_SQRT2 = math.sqrt(2.0)
_SQRT_2_OVER_PI = math.sqrt(2.0 / math.pi)
_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)

def _check_length(n: int) -> None:
    if n < 1:
        raise ValueError("transform length must be positive")
    if n & (n - 1):
        raise ValueError(f"transform length must be a power of two, got {n}")


def _as_complex(x, axis: int) -> np.ndarray:
    x = np.asarray(x, dtype=np.complex128)
    if x.ndim == 0:
        raise ValueError("expected at least a 1-d array")
    _check_length(x.shape[axis])
    return x


def unitary_dft(x, axis: int = -1) -> np.ndarray:
    """Multiply by the unitary W-point DFT matrix along ``axis``.

    ``W`` must be a power of two. Batched input is transformed independently
    along the remaining axes.
    """
    x = _as_complex(x, axis)
    return np.fft.fft(x, axis=axis, norm="ortho")


def unitary_idft(x, axis: int = -1) -> np.ndarray:
    """Adjoint (and inverse) of :func:`unitary_dft`."""
    x = _as_complex(x, axis)
    return np.fft.ifft(x, axis=axis, norm="ortho")


def _check_real(u) -> np.ndarray:
    u = np.asarray(u, dtype=np.float64)
    if np.isnan(u).any():
        raise ValueError("NaN input")
    return u


def log_std_normal_cdf(u):
    """Return ``log(Phi(u))`` for the standard normal CDF ``Phi``.

    Negative arguments go through the scaled complementary error function,
    ``Phi(u) = erfcx(-u/sqrt2) * exp(-u**2/2) / 2``, so the result stays
    accurate far into the lower tail where ``Phi`` itself underflows.
    Non-negative arguments use ``log1p`` of the upper-tail mass.
    Accepts scalars or arrays; returns the same shape.
    """
    u = _check_real(u)
    out = np.empty_like(u)
    neg = u < 0
    un = u[neg]
    out[neg] = np.log(0.5 * special.erfcx(-un / _SQRT2)) - 0.5 * un * un
    up = u[~neg]
    out[~neg] = np.log1p(-0.5 * special.erfc(up / _SQRT2))
    return out[()] if out.ndim == 0 else out


def log_std_normal_pdf(u):
    u = _check_real(u)
    return -0.5 * u * u - _LOG_SQRT_2PI


def inv_mills(u):
    """Inverse Mills ratio ``phi(u) / Phi(u)``.

    Evaluated as ``sqrt(2/pi) / erfcx(-u/sqrt2)``; the Gaussian factors cancel
    analytically, so there is no overflow for large negative ``u`` where the
    ratio grows like ``-u``. For ``u`` above about 37.5 the true value is
    below the smallest normal double and the result flushes toward zero.
    """
    u = _check_real(u)
    return _SQRT_2_OVER_PI / special.erfcx(-u / _SQRT2)


def _check_matrix(H) -> np.ndarray:
    H = np.asarray(H, dtype=np.complex128)
    if H.ndim < 2 or H.shape[-1] < 1 or H.shape[-2] < 1:
        raise ValueError("expected a matrix (or stack of matrices) with positive dimensions")
    if not np.isfinite(H).all():
        raise ValueError("matrix has non-finite entries")
    return H


def largest_singular_values(H) -> np.ndarray:
    """Largest singular value of every matrix in a stack ``H[..., N, K]``.

    Top eigenvalue of the ``K x K`` Gram matrix ``H^H H`` from a dense
    Hermitian eigensolve. K is small (tens), so this is cheap and, unlike
    power iteration, accurate when the top singular values nearly tie.
    """
    H = _check_matrix(H)
    G = np.conj(np.swapaxes(H, -1, -2)) @ H
    top = np.linalg.eigvalsh(G)[..., -1]
    return np.sqrt(np.maximum(top, 0.0))


def largest_singular_value(H) -> float:
    """Largest singular value of a single ``N x K`` matrix (0 for the zero matrix)."""
    H = _check_matrix(H)
    if H.ndim != 2:
        raise ValueError("expected a 2-d matrix")
    return float(largest_singular_values(H))
