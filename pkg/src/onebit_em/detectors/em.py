"""EM detection on the box relaxation, with exact or inexact M-steps.

Each iteration maps the current symbols to time-domain samples, replaces the
one-bit samples by their truncated-Gaussian posterior means, moves those to
the subcarrier domain, and then solves (or partially solves) W independent
box-constrained least-squares problems.
"""

from __future__ import annotations

import time

import numpy as np

from ..channel import ChannelRealization, apply_time_domain
from ..ofdm import Constellation, ObservationBlock, hard_decision, project_box
from .baselines import onebox_detect, zf_detect, zf_equalize
from .config import ConvergenceTrace, DetectionResult, DetectorConfig, relative_step
from .likelihood import e_step, nll_from_z
from .mstep import BoxQP, _apg, _exact

__all__ = ["em_detect", "detect", "initial_symbols"]


def initial_symbols(obs: ObservationBlock, channel: ChannelRealization, config: DetectorConfig, D) -> np.ndarray:
    if config.init == "zf":
        S, _ = zf_equalize(obs.y, channel, D, rescale=True)
        return project_box(S, D)
    return np.zeros((channel.W, channel.K), dtype=np.complex128)


def m_step(R, S, channel: ChannelRealization, config: DetectorConfig, D):
    """Apply the configured M-step to every subcarrier at once.

    ``R`` holds the pseudo-measurements (W, N); ``S`` the warm start (W, K).
    Returns the new grid and a flag that is False if an exact inner solve
    hit its cap.
    """
    corr = np.einsum("wnk,wn->wk", np.conj(channel.freq_response), R)
    qp = BoxQP(channel.gram, corr, channel.step_constants, D)
    if config.variant == "em_pg1":
        return qp.step(S), True
    if config.variant == "em_apg":
        return _apg(qp, S, config.B, config.momentum), True
    if config.variant == "em_exact":
        S_new, ok = _exact(qp, S, config.exact_inner_tol, config.exact_inner_cap, config.momentum)
        return S_new, bool(ok.all())
    raise ValueError(f"{config.variant} is not an EM variant")


def em_detect(obs: ObservationBlock, channel: ChannelRealization, config: DetectorConfig, D, S0=None) -> DetectionResult:
    """Run EM until ``||S+ - S||_F <= rel_tol * ||S||_F`` or ``max_em_iters``.

    ``trace.nll[j]`` is the negative log-likelihood of the j-th iterate, with
    entry 0 the starting point. Hitting the iteration cap is reported through
    ``converged`` rather than raised.
    """
    c = D if isinstance(D, Constellation) else Constellation(int(D))
    S = initial_symbols(obs, channel, config, c) if S0 is None else project_box(S0, c)
    trace = ConvergenceTrace()
    flags = []
    t0 = time.perf_counter()
    z = apply_time_domain(channel, S)
    trace.append(0, nll_from_z(z, obs), np.nan, 0.0)
    converged = False
    it = 0
    for it in range(1, config.max_em_iters + 1):
        R = e_step(z, obs)
        S_new, inner_ok = m_step(R, S, channel, config, c)
        if not inner_ok and "inner_cap" not in flags:
            flags.append("inner_cap")
        diff = np.linalg.norm(S_new - S)
        ref = np.linalg.norm(S)
        S = S_new
        z = apply_time_domain(channel, S)
        trace.append(it, nll_from_z(z, obs), relative_step(diff, ref), 1e3 * (time.perf_counter() - t0))
        if diff <= config.rel_tol * ref:
            converged = True
            break
    if config.max_em_iters > 0 and not converged:
        flags.append("max_iters")
    return DetectionResult(
        symbols=hard_decision(S, c),
        relaxed=S,
        trace=trace,
        iterations=it,
        converged=converged or config.max_em_iters == 0,
        flags=tuple(flags),
    )


def detect(obs: ObservationBlock, channel: ChannelRealization, config: DetectorConfig, D) -> DetectionResult:
    """Dispatch on ``config.variant``."""
    if config.variant == "zf":
        return zf_detect(obs, channel, D, quantized=config.quantized)
    if config.variant == "onebox":
        S0 = initial_symbols(obs, channel, config, D)
        return onebox_detect(obs, channel, config, D, S0=S0)
    return em_detect(obs, channel, config, D)
