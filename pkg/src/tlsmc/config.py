"""Run configuration and prior ranges.

Priors are specified the way a measurement config file reads: frequencies in
MHz, times in us.  Internally everything frequency-like is angular (rad/us),
so the accessors multiply by 2*pi.  Keeping the MHz numbers as the stored
source of truth makes a run reproducible bit-for-bit from its own embedded
config echo: the conversion is applied the same way every time.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, fields

from .errors import ConfigError

TWO_PI = 2.0 * math.pi


def _check_interval(name, lo, hi, positive=False):
    if not (math.isfinite(lo) and math.isfinite(hi) and lo <= hi):
        raise ConfigError(f"{name} range must be finite with low <= high, got ({lo}, {hi})")
    if positive and lo <= 0:
        raise ConfigError(f"{name} range must be strictly positive, got ({lo}, {hi})")


@dataclass(frozen=True)
class PriorRanges:
    """Uniform prior box, plus the relative prior mass per defect count.

    A degenerate range (low == high) pins that parameter.  ``model_weights``
    need not be normalized; a zero entry excludes that defect count entirely.
    """

    g_mhz: tuple[float, float] = (0.34, 0.46)
    freq_mhz: tuple[float, float] = (-60.0, 60.0)
    t2d_us: tuple[float, float] = (0.05, 0.1)
    t1q_us: tuple[float, float] = (30.0, 44.0)
    model_weights: tuple[float, float, float] = (1.0, 1.0, 1.0)

    def __post_init__(self):
        _check_interval("g_mhz", *self.g_mhz, positive=True)
        _check_interval("freq_mhz", *self.freq_mhz)
        _check_interval("t2d_us", *self.t2d_us, positive=True)
        _check_interval("t1q_us", *self.t1q_us, positive=True)
        w = self.model_weights
        if len(w) != 3 or any(not math.isfinite(x) or x < 0 for x in w) or sum(w) <= 0:
            raise ConfigError(f"model_weights must be 3 nonnegative numbers with positive sum, got {w}")

    # angular-unit views used by the inference code
    @property
    def g(self) -> tuple[float, float]:
        return (TWO_PI * self.g_mhz[0], TWO_PI * self.g_mhz[1])

    @property
    def wd(self) -> tuple[float, float]:
        return (TWO_PI * self.freq_mhz[0], TWO_PI * self.freq_mhz[1])

    @property
    def t2d(self) -> tuple[float, float]:
        return self.t2d_us

    @property
    def t1q(self) -> tuple[float, float]:
        return self.t1q_us

    @property
    def model_probs(self) -> tuple[float, float, float]:
        tot = sum(self.model_weights)
        return tuple(w / tot for w in self.model_weights)

    def variance(self, name: str) -> float:
        """Prior variance of one parameter (uniform: (b-a)^2 / 12), in the
        internal units used by particle vectors."""
        rng = {"g": self.g, "wd": self.wd, "t2d": self.t2d, "t1q": self.t1q}[name]
        return (rng[1] - rng[0]) ** 2 / 12.0


@dataclass(frozen=True)
class RunConfig:
    """Everything needed to reproduce one characterization run or ensemble."""

    particles: int = 40_000
    shrinkage: float = 0.995
    shots_per_setting: int = 200
    estimates: int = 1_000  # parameter estimates recorded, including the prior one
    gamma: float = 0.0
    resample_threshold: float = 0.5
    true_defects: int = 2
    seed: int = 0
    order_defects: bool = True
    error_normalization: str = "prior_variance"
    prior: PriorRanges = field(default_factory=PriorRanges)

    def __post_init__(self):
        if self.particles < 3:
            raise ConfigError(f"need at least 3 particles, got {self.particles}")
        if not 0.0 < self.shrinkage <= 1.0:
            raise ConfigError(f"shrinkage must lie in (0, 1], got {self.shrinkage}")
        if self.shots_per_setting < 1:
            raise ConfigError(f"shots_per_setting must be >= 1, got {self.shots_per_setting}")
        if self.estimates < 1:
            raise ConfigError(f"estimates must be >= 1, got {self.estimates}")
        if not 0.0 <= self.gamma < 0.5:
            raise ConfigError(f"gamma must lie in [0, 0.5), got {self.gamma}")
        if not 0.0 <= self.resample_threshold <= 1.0:
            raise ConfigError(f"resample_threshold must lie in [0, 1], got {self.resample_threshold}")
        if self.true_defects not in (0, 1, 2):
            raise ConfigError(f"true_defects must be 0, 1, or 2, got {self.true_defects}")
        if not 0 <= self.seed < 2**64:
            raise ConfigError(f"seed must be a u64, got {self.seed}")
        if self.error_normalization not in ("prior_variance", "none"):
            raise ConfigError(
                f"error_normalization must be 'prior_variance' or 'none', got {self.error_normalization!r}"
            )

    @property
    def total_shots(self) -> int:
        """Measurement budget: settings are chosen between estimates."""
        return self.shots_per_setting * (self.estimates - 1)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        d = dict(d)
        prior_d = d.pop("prior", {})
        known = {f.name for f in fields(cls)} - {"prior"}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        pknown = {f.name for f in fields(PriorRanges)}
        punknown = set(prior_d) - pknown
        if punknown:
            raise ConfigError(f"unknown prior keys: {sorted(punknown)}")
        try:
            prior = PriorRanges(
                **{k: tuple(v) if isinstance(v, list) else v for k, v in prior_d.items()}
            )
            return cls(prior=prior, **d)
        except TypeError as e:
            raise ConfigError(str(e)) from e
