"""One-bit MIMO-OFDM detection by exact and inexact EM on the box relaxation."""

__version__ = "0.1.0"

from .channel import ChannelParams, ChannelRealization, apply_time_domain, generate_channel  # noqa: E402
from .detectors import DetectorConfig, detect, em_detect, nll, onebox_detect, parse_detector, zf_detect  # noqa: E402
from .ofdm import Constellation, ObservationBlock, demap_bits, hard_decision, map_bits, quantize, transmit  # noqa: E402

__all__ = [
    "ChannelParams",
    "ChannelRealization",
    "Constellation",
    "DetectorConfig",
    "ObservationBlock",
    "apply_time_domain",
    "demap_bits",
    "detect",
    "em_detect",
    "generate_channel",
    "hard_decision",
    "map_bits",
    "nll",
    "onebox_detect",
    "parse_detector",
    "quantize",
    "transmit",
    "zf_detect",
]
