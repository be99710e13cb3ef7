"""Adaptive choice of the next probe frequency and wait time.

The frequency is aimed at where the posterior thinks a defect sits: draw
from a mixture of the two defect-detuning marginals, with mixture weights
proportional to the presence probabilities P(n >= 1) and P(n = 2).  The
second branch keeps probing the weaker-evidence defect even while it carries
less posterior mass.  The wait time is a uniform fraction of the current
posterior-mean T1 at the chosen frequency, which scans the decay curve where
it actually bends.

When no defect is believed present (both presence probabilities ~0), the
frequency falls back to a uniform draw over the prior window: the data carry
no frequency information, and any fixed choice would bias a later defect
search.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .physics import WD1, WD2, MeasurementSetting
from .smc import ParticleCloud, expected_t1, model_probabilities

PRESENCE_FLOOR = 1e-12


@dataclass(frozen=True)
class PolicyConfig:
    """Frequency window (rad/us) used by the no-defect fallback draw."""

    freq_window: tuple[float, float]

    def __post_init__(self):
        if not self.freq_window[0] <= self.freq_window[1]:
            raise ValueError(f"empty frequency window {self.freq_window}")


def _weighted_pick(weights: np.ndarray, rng: np.random.Generator) -> int:
    """Index drawn in proportion to (unnormalized) nonnegative weights."""
    cdf = np.cumsum(weights)
    return int(np.searchsorted(cdf, rng.random() * cdf[-1], side="right"))


def choose_frequency(cloud: ParticleCloud, cfg: PolicyConfig, rng: np.random.Generator) -> float:
    """Draw the next probe frequency from the posterior detuning mixture.

    Branch to the first detuning's marginal (particles with at least one
    defect) with probability P(n >= 1) / (P(n >= 1) + P(n = 2)), else to the
    second's (two-defect particles only).  Draw order: one uniform for the
    branch, one for the particle pick; the fallback consumes a single uniform.
    """
    probs = model_probabilities(cloud)
    branch_mass = np.array([probs.p1_present, probs.p2_present])
    if branch_mass.sum() <= PRESENCE_FLOOR:
        return rng.uniform(*cfg.freq_window)
    if _weighted_pick(branch_mass, rng) == 0:
        mask, slot = cloud.strata >= 1, WD1
    else:
        mask, slot = cloud.strata == 2, WD2
    idx = np.flatnonzero(mask)
    pick = idx[_weighted_pick(cloud.weights[idx], rng)]
    return float(cloud.positions[pick, slot])


def choose_time(cloud: ParticleCloud, wq: float, rng: np.random.Generator) -> float:
    """Wait time r * E[T1(wq)] with r uniform on (0, 1]."""
    return (1.0 - rng.random()) * expected_t1(cloud, wq)


def choose_setting(cloud: ParticleCloud, cfg: PolicyConfig, rng: np.random.Generator) -> MeasurementSetting:
    """Frequency first, then time (fixed draw order for reproducibility)."""
    wq = choose_frequency(cloud, cfg, rng)
    return MeasurementSetting(wq=wq, t=choose_time(cloud, wq, rng))
