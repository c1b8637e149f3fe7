"""Reference detectors: per-subcarrier zero-forcing and direct projected gradient (1BOX)."""

from __future__ import annotations

import time

import numpy as np

from ..channel import ChannelRealization, apply_time_domain
from ..ofdm import Constellation, ObservationBlock, hard_decision, project_box
from .config import ConvergenceTrace, DetectionResult, DetectorConfig, relative_step
from .likelihood import gradient_from_z, nll_from_z, pseudo_measurements

__all__ = ["zf_equalize", "zf_detect", "onebox_detect", "geometric_schedule"]

ZF_RIDGE = 1e-10


def zf_equalize(x, channel: ChannelRealization, D, rescale: bool):
    """Per-subcarrier pseudo-inverse of time-domain blocks ``x`` (N, W).

    Returns the (W, K) soft estimate and a tuple of flags. With ``rescale``
    each user's estimates are scaled so their mean power equals the
    constellation energy; one-bit samples carry no absolute amplitude.
    """
    c = D if isinstance(D, Constellation) else Constellation(int(D))
    R = pseudo_measurements(x)  # (W, N)
    H = channel.freq_response
    G = channel.gram
    corr = np.einsum("wnk,wn->wk", np.conj(H), R)
    flags = []
    eig = np.linalg.eigvalsh(G)
    lam_max = eig[:, -1]
    deficient = eig[:, 0] <= ZF_RIDGE * np.maximum(lam_max, 1e-300)
    if deficient.any():
        G = G.copy()
        K = G.shape[-1]
        G[deficient] += ZF_RIDGE * np.maximum(lam_max[deficient], 1.0)[:, None, None] * np.eye(K)
        flags.append("rank_deficient")
    S = np.linalg.solve(G, corr[..., None])[..., 0]
    if rescale:
        power = np.mean(np.abs(S) ** 2, axis=0)
        scale = np.where(power > 0, np.sqrt(c.average_energy / np.where(power > 0, power, 1.0)), 1.0)
        S = S * scale[None, :]
    return S, tuple(flags)


def zf_detect(obs: ObservationBlock, channel: ChannelRealization, D, quantized: bool = True) -> DetectionResult:
    """Zero-forcing on the one-bit (``quantized``) or the unquantized samples."""
    if quantized:
        x = obs.y
    else:
        if obs.r is None:
            raise ValueError("full-resolution ZF needs the unquantized samples")
        x = obs.r
    S, flags = zf_equalize(x, channel, D, rescale=quantized)
    return DetectionResult(symbols=hard_decision(S, D), relaxed=S, trace=ConvergenceTrace(), flags=flags)


def geometric_schedule(start: float, stop: float, iters: int) -> np.ndarray:
    """Stepsizes decaying geometrically from ``start`` to ``stop``.

    Falls back to linear interpolation when an endpoint is zero.
    """
    if iters == 1:
        return np.array([start])
    t = np.arange(iters) / (iters - 1)
    if start > 0 and stop > 0:
        return start * (stop / start) ** t
    return start + (stop - start) * t


def onebox_detect(obs: ObservationBlock, channel: ChannelRealization, config: DetectorConfig, D, S0=None) -> DetectionResult:
    """Projected gradient directly on the box-relaxed NLL, all subcarriers jointly."""
    c = D if isinstance(D, Constellation) else Constellation(int(D))
    start, stop, iters = config.onebox_step_schedule
    steps = geometric_schedule(start, stop, iters)
    S = np.zeros((channel.W, channel.K), dtype=np.complex128) if S0 is None else project_box(S0, c)
    trace = ConvergenceTrace()
    t0 = time.perf_counter()
    z = apply_time_domain(channel, S)
    trace.append(0, nll_from_z(z, obs), np.nan, 0.0)
    for t, mu in enumerate(steps, start=1):
        S_new = project_box(S - mu * gradient_from_z(z, obs, channel), c)
        ref = np.linalg.norm(S)
        diff = np.linalg.norm(S_new - S)
        S = S_new
        z = apply_time_domain(channel, S)
        trace.append(t, nll_from_z(z, obs), relative_step(diff, ref), 1e3 * (time.perf_counter() - t0))
    return DetectionResult(symbols=hard_decision(S, c), relaxed=S, trace=trace, iterations=iters)
