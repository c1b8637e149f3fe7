"""One-bit negative log-likelihood, its gradient, and the E-step."""

from __future__ import annotations

import numpy as np

from ..channel import ChannelRealization, apply_time_domain
from ..numerics import inv_mills, log_std_normal_cdf, unitary_dft
from ..ofdm import ObservationBlock

__all__ = ["nll", "nll_from_z", "nll_gradient", "gradient_from_z", "truncated_gaussian_mean", "posterior_means", "e_step", "pseudo_measurements"]


def _sigma(obs: ObservationBlock) -> float:
    sigma = obs.sigma
    if not sigma > 0:
        raise ValueError("likelihood is undefined for a noiseless observation (sigma = 0)")
    return sigma


def _check_z(z, obs: ObservationBlock) -> np.ndarray:
    z = np.asarray(z, dtype=np.complex128)
    if z.shape != obs.y.shape:
        raise ValueError(f"noiseless signal shape {z.shape} does not match observations {obs.y.shape}")
    return z


def nll_from_z(z, obs: ObservationBlock) -> float:
    """``F`` evaluated from the noiseless signal ``z`` (shape (N, W))."""
    z = _check_z(z, obs)
    sigma = _sigma(obs)
    y = obs.y
    u_re = y.real * z.real / sigma
    u_im = y.imag * z.imag / sigma
    return float(-(np.sum(log_std_normal_cdf(u_re)) + np.sum(log_std_normal_cdf(u_im))))


def nll(S, obs: ObservationBlock, channel: ChannelRealization) -> float:
    """Negative log-likelihood of the one-bit observations given symbols ``S`` (W, K)."""
    return nll_from_z(apply_time_domain(channel, S), obs)


def nll_gradient(S, obs: ObservationBlock, channel: ChannelRealization) -> np.ndarray:
    """Gradient of :func:`nll` as a (W, K) complex grid.

    Entry ``[w, k]`` is ``dF/dRe(s_kw) + 1j * dF/dIm(s_kw)``. Uses
    ``d/du[-log Phi(u)] = -inv_mills(u)`` and the adjoint of the
    symbols-to-samples map, ``g -> H_w^H (F g)_w``.
    """
    return gradient_from_z(apply_time_domain(channel, S), obs, channel)


def gradient_from_z(z, obs: ObservationBlock, channel: ChannelRealization) -> np.ndarray:
    z = _check_z(z, obs)
    sigma = _sigma(obs)
    y = obs.y
    g_re = -y.real * inv_mills(y.real * z.real / sigma) / sigma
    g_im = -y.imag * inv_mills(y.imag * z.imag / sigma) / sigma
    G = unitary_dft(g_re + 1j * g_im, axis=-1)  # (N, W)
    return np.einsum("wnk,nw->wk", np.conj(channel.freq_response), G)


def truncated_gaussian_mean(z, y, sigma):
    """Mean of ``N(z, sigma^2)`` truncated to the half-line with sign ``y``.

    Equals ``z + y * sigma * inv_mills(y * z / sigma)`` for ``y`` in {-1, +1}.
    Real arrays, broadcast together.
    """
    z = np.asarray(z, dtype=float)
    y = np.asarray(y, dtype=float)
    return z + y * sigma * inv_mills(y * z / sigma)


def posterior_means(z, obs: ObservationBlock) -> np.ndarray:
    """Posterior means of the unquantized samples given ``z``, shape (N, W)."""
    z = _check_z(z, obs)
    sigma = _sigma(obs)
    y = obs.y
    return truncated_gaussian_mean(z.real, y.real, sigma) + 1j * truncated_gaussian_mean(z.imag, y.imag, sigma)


def e_step(z, obs: ObservationBlock) -> np.ndarray:
    """E-step: posterior sample means moved to the subcarrier domain, shape (W, N)."""
    return pseudo_measurements(posterior_means(z, obs))


def pseudo_measurements(r) -> np.ndarray:
    """Per-subcarrier vectors ``r_check_w`` from time-domain blocks ``r`` (N, W).

    Returns shape (W, N): row ``w`` is ``(F r_1)_w, ..., (F r_N)_w``.
    """
    return unitary_dft(r, axis=-1).T
