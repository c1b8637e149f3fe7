"""Detectors for one-bit MIMO-OFDM."""

from .baselines import geometric_schedule, onebox_detect, zf_detect, zf_equalize
from .config import ConvergenceTrace, DetectionResult, DetectorConfig, parse_detector
from .em import detect, em_detect
from .likelihood import e_step, nll, nll_from_z, nll_gradient, posterior_means, pseudo_measurements, truncated_gaussian_mean
from .mstep import BoxQP, fista_momentum, m_step_apg, m_step_exact, m_step_pg1

__all__ = [
    "BoxQP",
    "ConvergenceTrace",
    "DetectionResult",
    "DetectorConfig",
    "detect",
    "e_step",
    "em_detect",
    "fista_momentum",
    "geometric_schedule",
    "m_step_apg",
    "m_step_exact",
    "m_step_pg1",
    "nll",
    "nll_from_z",
    "nll_gradient",
    "onebox_detect",
    "parse_detector",
    "posterior_means",
    "pseudo_measurements",
    "truncated_gaussian_mean",
    "zf_detect",
    "zf_equalize",
]
