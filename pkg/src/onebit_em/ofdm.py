"""QAM constellations, Gray bit mapping, OFDM transmission and one-bit IQ quantization.

Symbol grids are plain complex arrays of shape (W, K). Bits serialize in
(w, k) row-major order; within a symbol the real-axis bits precede the
imaginary-axis bits, each axis carrying the binary-reflected Gray code of its
level index, most significant bit first. Level index ``i`` has amplitude
``2*i - 2*D + 1``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .channel import ChannelRealization, apply_time_domain

__all__ = [
    "Constellation",
    "ObservationBlock",
    "quantize",
    "map_bits",
    "demap_bits",
    "random_bits",
    "transmit",
    "hard_decision",
    "project_box",
]


@dataclass(frozen=True)
class Constellation:
    """Square QAM with per-axis levels ``{+-1, +-3, ..., +-(2D-1)}``."""

    D: int

    def __post_init__(self):
        M = 2 * self.D
        if self.D < 1 or M & (M - 1):
            raise ValueError(f"2D must be a power of two, got D={self.D}")

    @property
    def levels(self) -> np.ndarray:
        return np.arange(-2 * self.D + 1, 2 * self.D, 2, dtype=float)

    @property
    def bits_per_axis(self) -> int:
        return (2 * self.D).bit_length() - 1

    @property
    def bits_per_symbol(self) -> int:
        return 2 * self.bits_per_axis

    @property
    def order(self) -> int:
        return (2 * self.D) ** 2

    @property
    def amplitude(self) -> float:
        """Box half-width ``2D - 1``."""
        return float(2 * self.D - 1)

    @property
    def average_energy(self) -> float:
        """``E|s|^2 = 2(4D^2 - 1)/3`` for equiprobable symbols."""
        return 2.0 * (4 * self.D**2 - 1) / 3.0

    @cached_property
    def _gray_table(self) -> np.ndarray:
        # row i: Gray code bits of level index i, MSB first
        nb = self.bits_per_axis
        idx = np.arange(2 * self.D)
        g = idx ^ (idx >> 1)
        shifts = np.arange(nb - 1, -1, -1)
        return ((g[:, None] >> shifts) & 1).astype(np.uint8)

    @cached_property
    def _gray_inverse(self) -> np.ndarray:
        # packed code value -> level index
        nb = self.bits_per_axis
        weights = 1 << np.arange(nb - 1, -1, -1)
        codes = self._gray_table @ weights
        inv = np.empty(2 * self.D, dtype=np.int64)
        inv[codes] = np.arange(2 * self.D)
        return inv


def _constellation(D) -> Constellation:
    return D if isinstance(D, Constellation) else Constellation(int(D))


def project_box(S, D) -> np.ndarray:
    """Clip real and imaginary parts to ``[-(2D-1), 2D-1]``."""
    a = _constellation(D).amplitude
    S = np.asarray(S)
    return np.clip(S.real, -a, a) + 1j * np.clip(S.imag, -a, a)


def quantize(r) -> np.ndarray:
    """IQ one-bit quantizer ``sgn(Re r) + j sgn(Im r)`` with ``sgn(0) = +1``."""
    r = np.asarray(r)
    re = np.where(np.real(r) >= 0, 1.0, -1.0)
    im = np.where(np.imag(r) >= 0, 1.0, -1.0)
    return re + 1j * im


def random_bits(rng: np.random.Generator, W: int, K: int, D) -> np.ndarray:
    c = _constellation(D)
    return rng.integers(0, 2, size=W * K * c.bits_per_symbol, dtype=np.uint8)


def map_bits(bits, D, shape: tuple[int, int]) -> np.ndarray:
    """Map a flat bit array to a (W, K) symbol grid."""
    c = _constellation(D)
    W, K = shape
    bits = np.asarray(bits, dtype=np.uint8).ravel()
    nb = c.bits_per_axis
    expected = W * K * 2 * nb
    if bits.size != expected:
        raise ValueError(f"expected {expected} bits for W={W}, K={K}, D={c.D}, got {bits.size}")
    if bits.max(initial=0) > 1:
        raise ValueError("bits must be 0 or 1")
    weights = 1 << np.arange(nb - 1, -1, -1)
    codes = bits.reshape(W, K, 2, nb) @ weights
    level_idx = c._gray_inverse[codes]
    amp = 2.0 * level_idx - 2 * c.D + 1
    return amp[..., 0] + 1j * amp[..., 1]


def demap_bits(S, D) -> np.ndarray:
    """Inverse of :func:`map_bits` for grids whose entries lie in the constellation."""
    c = _constellation(D)
    S = np.asarray(S)
    parts = np.stack([S.real, S.imag], axis=-1)
    level_idx = np.rint((parts + 2 * c.D - 1) / 2).astype(np.int64)
    if (level_idx < 0).any() or (level_idx >= 2 * c.D).any():
        raise ValueError("symbol outside the constellation")
    return c._gray_table[level_idx].reshape(-1)


def hard_decision(S, D) -> np.ndarray:
    """Round each axis to the nearest odd level; even-integer ties go up."""
    c = _constellation(D)
    S = np.asarray(S)
    a = c.amplitude

    def axis(x):
        return np.clip(2.0 * np.floor(x / 2.0) + 1.0, -a, a)

    return axis(S.real) + 1j * axis(S.imag)


@dataclass(frozen=True, eq=False)
class ObservationBlock:
    """Received data for one OFDM block, all arrays shaped (N, W).

    ``r`` is the unquantized signal (kept for full-resolution baselines),
    ``y = quantize(r)`` the one-bit output, ``sigma**2 = sigma_c_sq / 2``
    the per-component noise variance.
    """

    y: np.ndarray
    sigma_c_sq: float
    r: np.ndarray | None = None

    def __post_init__(self):
        y = np.asarray(self.y, dtype=np.complex128)
        if self.sigma_c_sq < 0:
            raise ValueError("noise variance must be non-negative")
        if not (np.isin(y.real, (-1.0, 1.0)).all() and np.isin(y.imag, (-1.0, 1.0)).all()):
            raise ValueError("one-bit observations must take values in {+-1 +- 1j}")
        object.__setattr__(self, "y", y)
        if self.r is not None:
            r = np.asarray(self.r, dtype=np.complex128)
            if r.shape != y.shape:
                raise ValueError("r and y shapes differ")
            object.__setattr__(self, "r", r)

    @property
    def sigma(self) -> float:
        return float(np.sqrt(self.sigma_c_sq / 2.0))


def transmit(S, channel: ChannelRealization, sigma_c_sq: float, rng: np.random.Generator | None = None) -> ObservationBlock:
    """Pass a symbol grid through the channel, add CN(0, sigma_c_sq) noise and quantize.

    ``sigma_c_sq == 0`` gives a noiseless block (no random numbers drawn).
    """
    if not sigma_c_sq >= 0:
        raise ValueError(f"noise variance must be >= 0, got {sigma_c_sq}")
    z = apply_time_domain(channel, S)
    if sigma_c_sq > 0:
        if rng is None:
            raise ValueError("an rng is required for noisy transmission")
        s = np.sqrt(sigma_c_sq / 2.0)
        noise = s * rng.standard_normal(z.shape) + 1j * s * rng.standard_normal(z.shape)
        r = z + noise
    else:
        r = z
    return ObservationBlock(y=quantize(r), sigma_c_sq=float(sigma_c_sq), r=r)
