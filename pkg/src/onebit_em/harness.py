"""Monte-Carlo BER sweeps and convergence traces.

Every trial draws its randomness from streams keyed on ``(base_seed, trial)``:
one channel, one bit payload, and one noise draw per SNR point. All detectors
in a run see exactly the same realizations, and results do not depend on the
number of worker threads or on scheduling order.

SNR is the average received power per antenna sample over the noise power,
``SNR = K * E_s * g / sigma_c^2`` where ``g`` is the mean per-user gain
``sum_l ||h_{l,k}||^2 / N`` of the drawn channel. ``sigma_c^2`` is therefore
solved per realization.
"""

from __future__ import annotations

import csv
import logging
import re
import subprocess
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from .channel import ChannelParams, ChannelRealization, generate_channel
from .detectors import ConvergenceTrace, DetectorConfig, detect, parse_detector
from .ofdm import Constellation, demap_bits, map_bits, random_bits, transmit

__all__ = [
    "ExperimentConfig",
    "BerCurve",
    "TrialRealization",
    "draw_trial",
    "noise_variance",
    "run_ber_experiment",
    "run_convergence_trace",
    "load_config",
    "write_ber_csv",
    "write_manifest",
    "version_string",
]

log = logging.getLogger(__name__)

BER_COLUMNS = ["detector", "snr_db", "trials", "bit_errors", "bits_total", "ber", "em_iters_mean", "wall_ms"]


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    N: int = 64
    K: int = 4
    W: int = 64
    D: int = 1
    L: int = 16
    eta: int = 4
    d_over_lambda: float = 0.5
    normalize_channel: bool = False
    snr_db_grid: list = field(default_factory=lambda: [-10.0, -5.0, 0.0, 5.0, 10.0])
    trials: int = 10
    base_seed: int = 0
    detectors: list = field(default_factory=lambda: ["zf_full", "em_apg(5)", "zf_onebit"])
    workers: int = 1
    timing: bool = False
    out_dir: str = "results"

    def __post_init__(self):
        try:
            self.detectors = [parse_detector(d) for d in self.detectors]
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad detector entry: {exc}") from None
        self.snr_db_grid = [float(s) for s in self.snr_db_grid]
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if not self.snr_db_grid:
            raise ConfigError("snr_db_grid must not be empty")
        if not self.detectors:
            raise ConfigError("detector list must not be empty")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if not 0 <= self.base_seed < 2**64:
            raise ConfigError("base_seed must be a 64-bit unsigned integer")
        self.channel_params  # validates N, K, W, L, eta
        try:
            Constellation(self.D)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    @property
    def channel_params(self) -> ChannelParams:
        try:
            return ChannelParams(
                N=self.N,
                K=self.K,
                W=self.W,
                L=self.L,
                eta=self.eta,
                antenna_spacing_ratio=self.d_over_lambda,
                normalize=self.normalize_channel,
            )
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    @property
    def constellation(self) -> Constellation:
        return Constellation(self.D)

    @property
    def bits_per_trial(self) -> int:
        return self.W * self.K * self.constellation.bits_per_symbol

    def to_dict(self) -> dict:
        d = asdict(self)
        d["detectors"] = [det.to_dict() for det in self.detectors]
        return d


def load_config(path, **overrides) -> ExperimentConfig:
    """Read a YAML config whose keys mirror :class:`ExperimentConfig` fields.

    ``None``-valued overrides are ignored.
    """
    path = Path(path)
    try:
        text = path.read_text()
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from None
    try:
        raw = yaml.safe_load(text) or {}
    except yaml.YAMLError as exc:
        raise ConfigError(f"malformed config {path}: {exc}") from None
    if not isinstance(raw, dict):
        raise ConfigError(f"malformed config {path}: expected a mapping at top level")
    known = set(ExperimentConfig.__dataclass_fields__)
    unknown = sorted(set(raw) - known)
    if unknown:
        raise ConfigError(f"unknown config keys in {path}: {', '.join(unknown)}")
    raw.update({k: v for k, v in overrides.items() if v is not None})
    try:
        return ExperimentConfig(**raw)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid config {path}: {exc}") from None


def noise_variance(channel: ChannelRealization, D, snr_db: float) -> float:
    """``sigma_c^2`` giving the requested per-sample SNR on this channel."""
    c = D if isinstance(D, Constellation) else Constellation(int(D))
    signal_power = c.average_energy * float(np.sum(channel.user_gains()))
    return signal_power / 10.0 ** (snr_db / 10.0)


def _stream(base_seed: int, *key: int) -> np.random.Generator:
    return np.random.default_rng([int(base_seed), *map(int, key)])


@dataclass
class TrialRealization:
    channel: ChannelRealization
    bits: np.ndarray
    symbols: np.ndarray


def draw_trial(config: ExperimentConfig, trial: int) -> TrialRealization:
    channel = generate_channel(config.channel_params, _stream(config.base_seed, trial, 0))
    bits = random_bits(_stream(config.base_seed, trial, 1), config.W, config.K, config.D)
    return TrialRealization(channel, bits, map_bits(bits, config.D, (config.W, config.K)))


def observe(config: ExperimentConfig, real: TrialRealization, trial: int, snr_index: int):
    s2 = noise_variance(real.channel, config.D, config.snr_db_grid[snr_index])
    obs = transmit(real.symbols, real.channel, s2, _stream(config.base_seed, trial, 2, snr_index))
    return obs, s2


@dataclass
class BerCurve:
    """Aggregated results; arrays are indexed ``[detector, snr]``."""

    labels: list
    snr_db: list
    trials: int
    bits_per_trial: int
    bit_errors: np.ndarray
    em_iters_sum: np.ndarray
    wall_ms: np.ndarray
    trial_errors: np.ndarray  # [trial, detector, snr]
    sigma_c_sq: np.ndarray  # [trial, snr]

    @property
    def bits_total(self) -> int:
        return self.trials * self.bits_per_trial

    @property
    def ber(self) -> np.ndarray:
        return self.bit_errors / self.bits_total

    def ber_of(self, label: str) -> np.ndarray:
        return self.ber[self.labels.index(label)]

    def rows(self):
        for d, label in enumerate(self.labels):
            for s, snr in enumerate(self.snr_db):
                yield {
                    "detector": label,
                    "snr_db": snr,
                    "trials": self.trials,
                    "bit_errors": int(self.bit_errors[d, s]),
                    "bits_total": self.bits_total,
                    "ber": self.bit_errors[d, s] / self.bits_total,
                    "em_iters_mean": self.em_iters_sum[d, s] / self.trials,
                    "wall_ms": float(self.wall_ms[d, s]),
                }


def _run_trial(config: ExperimentConfig, trial: int):
    real = draw_trial(config, trial)
    nd, ns = len(config.detectors), len(config.snr_db_grid)
    errors = np.zeros((nd, ns), dtype=np.int64)
    iters = np.zeros((nd, ns), dtype=np.int64)
    wall = np.zeros((nd, ns))
    s2 = np.zeros(ns)
    for s in range(ns):
        obs, s2[s] = observe(config, real, trial, s)
        for d, det in enumerate(config.detectors):
            t0 = time.perf_counter()
            res = detect(obs, real.channel, det, config.D)
            wall[d, s] = 1e3 * (time.perf_counter() - t0)
            errors[d, s] = np.count_nonzero(demap_bits(res.symbols, config.D) != real.bits)
            iters[d, s] = res.iterations
    return errors, iters, wall, s2


def run_ber_experiment(config: ExperimentConfig, workers: int | None = None) -> BerCurve:
    """Paired Monte-Carlo BER over the SNR grid for every configured detector."""
    workers = config.workers if workers is None else workers
    trials = range(config.trials)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda t: _run_trial(config, t), trials))
    else:
        results = [_run_trial(config, t) for t in trials]
    trial_errors = np.stack([r[0] for r in results])
    curve = BerCurve(
        labels=[d.label for d in config.detectors],
        snr_db=list(config.snr_db_grid),
        trials=config.trials,
        bits_per_trial=config.bits_per_trial,
        bit_errors=trial_errors.sum(axis=0),
        em_iters_sum=np.sum([r[1] for r in results], axis=0),
        wall_ms=np.sum([r[2] for r in results], axis=0),
        trial_errors=trial_errors,
        sigma_c_sq=np.stack([r[3] for r in results]),
    )
    for row in curve.rows():
        log.info("%s snr=%g ber=%.3e", row["detector"], row["snr_db"], row["ber"])
    return curve


def run_convergence_trace(config: ExperimentConfig, snr_db: float, trial: int = 0) -> dict:
    """Trace every configured detector on a single realization.

    Returns ``{label: ConvergenceTrace}`` in detector order (duplicate labels
    get a numeric suffix).
    """
    real = draw_trial(config, trial)
    s2 = noise_variance(real.channel, config.D, snr_db)
    obs = transmit(real.symbols, real.channel, s2, _stream(config.base_seed, trial, 3))
    traces = {}
    for det in config.detectors:
        label = det.label
        n = 2
        while label in traces:
            label = f"{det.label}_{n}"
            n += 1
        traces[label] = detect(obs, real.channel, det, config.D).trace
    return traces


def _fmt(x) -> str:
    return repr(float(x))


def write_ber_csv(curve: BerCurve, path, timing: bool = False) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(BER_COLUMNS)
        for row in curve.rows():
            w.writerow([
                row["detector"],
                _fmt(row["snr_db"]),
                row["trials"],
                row["bit_errors"],
                row["bits_total"],
                _fmt(row["ber"]),
                _fmt(row["em_iters_mean"]),
                f"{row['wall_ms']:.3f}" if timing else "",
            ])


def trace_filename(label: str) -> str:
    return "trace_" + re.sub(r"[^A-Za-z0-9_.-]+", "_", label).strip("_") + ".csv"


def write_traces(traces: dict, out_dir, timing: bool = False) -> list:
    out_dir = Path(out_dir)
    paths = []
    for label, trace in traces.items():
        p = out_dir / trace_filename(label)
        trace.write_csv(p, timing=timing)
        paths.append(p)
    return paths


def version_string() -> str:
    """``<version>[-g<sha>[-dirty]]``, git-describe style when a checkout is available."""
    try:
        out = subprocess.run(
            ["git", "describe", "--always", "--dirty", "--abbrev=12"],
            cwd=Path(__file__).resolve().parent,
            capture_output=True,
            text=True,
            timeout=5,
        )
        if out.returncode == 0 and out.stdout.strip():
            return f"{__version__}-g{out.stdout.strip()}"
    except (OSError, subprocess.SubprocessError):
        pass
    return __version__


def write_manifest(path, config: ExperimentConfig, command: str, outputs, extra: dict | None = None) -> None:
    doc = {
        "command": command,
        "version": version_string(),
        "base_seed": config.base_seed,
        "snr_definition": "K * E_s * mean_k(sum_l ||h_lk||^2 / N) / sigma_c^2",
        "config": config.to_dict(),
        "outputs": [str(Path(p).name) for p in outputs],
    }
    if extra:
        doc.update(extra)
    Path(path).write_text(yaml.safe_dump(doc, sort_keys=False))
