"""Multipath millimeter-wave channel realizations for a uniform linear array.

Taps are stored in time order (tap ``l`` sits at delay ``l``). The per
subcarrier responses are the *unnormalized* length-W DFT of the zero-padded
tap sequence, i.e. the eigenvalues of the circulant convolution matrix, while
every signal-path transform uses the unitary DFT. With these two conventions
``circconv(h, F^H s) == F^H (DFT(h) * s)`` holds exactly.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .numerics import largest_singular_values, unitary_idft

__all__ = [
    "ChannelParams",
    "ChannelRealization",
    "generate_channel",
    "apply_time_domain",
    "steering_vector",
    "dump_channel",
    "load_channel",
]


@dataclass(frozen=True)
class ChannelParams:
    N: int
    K: int
    W: int
    L: int = 16
    eta: int = 4
    antenna_spacing_ratio: float = 0.5
    normalize: bool = False

    def __post_init__(self):
        for name in ("N", "K", "W", "L", "eta"):
            if int(getattr(self, name)) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.L > self.W:
            raise ValueError(f"tap count L={self.L} exceeds block length W={self.W}")
        if not self.antenna_spacing_ratio > 0:
            raise ValueError("antenna_spacing_ratio must be positive")


@dataclass(frozen=True, eq=False)
class ChannelRealization:
    """One channel draw.

    Attributes
    ----------
    taps : ndarray, shape (L, K, N)
        Time-domain tap vectors ``h_{l,k}`` across the N antennas.
    W : int
        OFDM block length.
    freq_response : ndarray, shape (W, N, K)
        ``H_w`` for every subcarrier.
    step_constants : ndarray, shape (W,)
        ``L_w = 2 * sigma_max(H_w)**2``.
    """

    taps: np.ndarray
    W: int
    freq_response: np.ndarray = field(init=False, repr=False)
    step_constants: np.ndarray = field(init=False, repr=False)
    gram: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        taps = np.array(self.taps, dtype=np.complex128)
        if taps.ndim != 3:
            raise ValueError("taps must have shape (L, K, N)")
        L = taps.shape[0]
        if L > self.W:
            raise ValueError("more taps than subcarriers")
        if not np.isfinite(taps).all():
            raise ValueError("non-finite channel taps")
        # (L, K, N) -> (W, N, K): unnormalized DFT over the delay axis
        H = np.fft.fft(taps, n=self.W, axis=0).transpose(0, 2, 1)
        H = np.ascontiguousarray(H)
        G = np.conj(np.swapaxes(H, -1, -2)) @ H
        L_w = 2.0 * largest_singular_values(H) ** 2
        for arr in (taps, H, G, L_w):
            arr.setflags(write=False)
        object.__setattr__(self, "taps", taps)
        object.__setattr__(self, "freq_response", H)
        object.__setattr__(self, "gram", G)
        object.__setattr__(self, "step_constants", L_w)

    @property
    def L(self) -> int:
        return self.taps.shape[0]

    @property
    def K(self) -> int:
        return self.taps.shape[1]

    @property
    def N(self) -> int:
        return self.taps.shape[2]

    def user_gains(self) -> np.ndarray:
        """Per-user gain ``sum_l ||h_{l,k}||^2 / N``, shape (K,)."""
        return np.sum(np.abs(self.taps) ** 2, axis=(0, 2)) / self.N


def steering_vector(N: int, theta, spacing_ratio: float) -> np.ndarray:
    """ULA response ``exp(-j 2 pi (d/lambda) m sin(theta))`` for m = 0..N-1.

    ``theta`` may be an array; the antenna index is appended as the last axis.
    """
    m = np.arange(N)
    phase = -2j * np.pi * spacing_ratio * np.multiply.outer(np.sin(theta), m)
    return np.exp(phase)


def generate_channel(params: ChannelParams, rng: np.random.Generator) -> ChannelRealization:
    """Draw ``h_{l,k} = sum_i beta^i_{l,k} a(theta^i_{l,k})``.

    Path gains are ``CN(0, 1/eta)`` and angles uniform on ``[-pi, pi]``, all
    independent across (l, k, i).
    """
    L, K, eta, N = params.L, params.K, params.eta, params.N
    beta = (rng.standard_normal((L, K, eta)) + 1j * rng.standard_normal((L, K, eta))) / np.sqrt(2 * eta)
    theta = rng.uniform(-np.pi, np.pi, size=(L, K, eta))
    a = steering_vector(N, theta, params.antenna_spacing_ratio)  # (L, K, eta, N)
    taps = np.einsum("lki,lkin->lkn", beta, a)
    if params.normalize:
        gain = np.sum(np.abs(taps) ** 2, axis=(0, 2)) / N
        taps = taps / np.sqrt(gain)[None, :, None]
    return ChannelRealization(taps=taps, W=params.W)


def apply_time_domain(channel: ChannelRealization, S) -> np.ndarray:
    """Noiseless received blocks ``sum_k H_{n,k} F^H s_k``.

    Parameters
    ----------
    S : ndarray, shape (W, K)
        Frequency-domain symbols, row ``w`` is the multiuser vector on
        subcarrier ``w``.

    Returns
    -------
    ndarray, shape (N, W)
        Time-domain block at each antenna.
    """
    S = np.asarray(S, dtype=np.complex128)
    if S.shape != (channel.W, channel.K):
        raise ValueError(f"symbol grid shape {S.shape} does not match (W, K) = {(channel.W, channel.K)}")
    X = np.einsum("wnk,wk->nw", channel.freq_response, S)
    return unitary_idft(X, axis=-1)


def dump_channel(channel: ChannelRealization, path) -> None:
    """Write the taps as JSON: ``{"W": .., "taps_real": [[[..]]], "taps_imag": ..}``
    with nested lists indexed ``[l][k][n]``. Derived quantities are not stored."""
    doc = {
        "format": "onebit_em.channel/1",
        "W": int(channel.W),
        "L": channel.L,
        "K": channel.K,
        "N": channel.N,
        "taps_real": channel.taps.real.tolist(),
        "taps_imag": channel.taps.imag.tolist(),
    }
    Path(path).write_text(json.dumps(doc, indent=1))


def load_channel(path) -> ChannelRealization:
    doc = json.loads(Path(path).read_text())
    taps = np.asarray(doc["taps_real"], dtype=float) + 1j * np.asarray(doc["taps_imag"], dtype=float)
    return ChannelRealization(taps=taps, W=int(doc["W"]))
