from __future__ import annotations

import csv
import math
import re
from dataclasses import asdict, dataclass, field

import numpy as np

__all__ = ["DetectorConfig", "ConvergenceTrace", "DetectionResult", "parse_detector"]

VARIANTS = ("em_exact", "em_pg1", "em_apg", "onebox", "zf")
DEFAULT_ONEBOX_SCHEDULE = (math.sqrt(2.0) / 64.0, 1.0 / 512.0, 200)


@dataclass(frozen=True)
class DetectorConfig:
    """Detector selection and its knobs.

    ``quantized`` only matters for ``zf``: False runs the full-resolution
    baseline on the unquantized samples. ``momentum`` picks the APG ``xi``
    recursion (``standard`` or ``printed``).
    """

    variant: str = "em_apg"
    B: int = 5
    max_em_iters: int = 200
    rel_tol: float = 2e-4
    init: str = "zero"
    exact_inner_tol: float = 1e-8
    exact_inner_cap: int = 500
    onebox_step_schedule: tuple = DEFAULT_ONEBOX_SCHEDULE
    quantized: bool = True
    momentum: str = "standard"
    name: str | None = None

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown detector variant {self.variant!r}; expected one of {VARIANTS}")
        if self.variant == "em_apg" and self.B < 1:
            raise ValueError("em_apg needs B >= 1")
        if self.max_em_iters < 0:
            raise ValueError("max_em_iters must be >= 0")
        if not (self.rel_tol > 0 and self.exact_inner_tol > 0):
            raise ValueError("tolerances must be positive")
        if self.exact_inner_cap < 1:
            raise ValueError("exact_inner_cap must be >= 1")
        if self.init not in ("zero", "zf"):
            raise ValueError("init must be 'zero' or 'zf'")
        if self.momentum not in ("standard", "printed"):
            raise ValueError("momentum must be 'standard' or 'printed'")
        start, stop, iters = self.onebox_step_schedule
        if start < 0 or stop < 0 or int(iters) < 1:
            raise ValueError("onebox schedule needs non-negative steps and >= 1 iteration")
        object.__setattr__(self, "onebox_step_schedule", (float(start), float(stop), int(iters)))

    @property
    def label(self) -> str:
        if self.name:
            return self.name
        if self.variant == "em_apg":
            return f"em_apg({self.B})"
        if self.variant == "zf":
            return "zf_onebit" if self.quantized else "zf_full"
        return self.variant

    def to_dict(self) -> dict:
        d = asdict(self)
        d["onebox_step_schedule"] = list(self.onebox_step_schedule)
        return d


_SHORTHAND = re.compile(r"^\s*(em_apg)\s*\(\s*(\d+)\s*\)\s*$")


def parse_detector(entry) -> DetectorConfig:
    """Build a config from a shorthand string or a mapping.

    Strings: ``em_exact``, ``em_pg1``, ``em_apg`` / ``em_apg(B)``, ``onebox``,
    ``zf_onebit``, ``zf_full``.
    """
    if isinstance(entry, DetectorConfig):
        return entry
    if isinstance(entry, dict):
        kw = dict(entry)
        if "variant" in kw and isinstance(kw["variant"], str):
            base = parse_detector(kw.pop("variant"))
            merged = base.to_dict()
            merged.update(kw)
            merged["onebox_step_schedule"] = tuple(merged["onebox_step_schedule"])
            return DetectorConfig(**merged)
        return DetectorConfig(**kw)
    if not isinstance(entry, str):
        raise ValueError(f"cannot interpret detector entry {entry!r}")
    m = _SHORTHAND.match(entry)
    if m:
        return DetectorConfig(variant="em_apg", B=int(m.group(2)))
    s = entry.strip()
    if s == "zf_onebit":
        return DetectorConfig(variant="zf", quantized=True)
    if s == "zf_full":
        return DetectorConfig(variant="zf", quantized=False)
    return DetectorConfig(variant=s)


def relative_step(diff: float, ref: float) -> float:
    if ref > 0:
        return diff / ref
    return 0.0 if diff == 0 else np.inf


@dataclass
class ConvergenceTrace:
    """NLL per iteration. Row 0 is the initial point (no step norm)."""

    iters: list = field(default_factory=list)
    nll: list = field(default_factory=list)
    rel_step_norm: list = field(default_factory=list)
    ms_elapsed: list = field(default_factory=list)

    def append(self, it, value, rel_step, ms):
        self.iters.append(int(it))
        self.nll.append(float(value))
        self.rel_step_norm.append(float(rel_step))
        self.ms_elapsed.append(float(ms))

    def __len__(self):
        return len(self.iters)

    @property
    def final_nll(self) -> float:
        return self.nll[-1]

    def write_csv(self, path, timing: bool = False) -> None:
        """Columns ``iter, nll, rel_step_norm, ms_elapsed``.

        Timing is left blank unless ``timing`` is set so that reruns are
        byte-identical.
        """
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["iter", "nll", "rel_step_norm", "ms_elapsed"])
            for it, f, st, ms in zip(self.iters, self.nll, self.rel_step_norm, self.ms_elapsed):
                w.writerow([it, repr(f), "" if np.isnan(st) else repr(st), f"{ms:.3f}" if timing else ""])


@dataclass
class DetectionResult:
    symbols: np.ndarray
    relaxed: np.ndarray
    trace: ConvergenceTrace
    iterations: int = 0
    converged: bool = True
    flags: tuple = ()
