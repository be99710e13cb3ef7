"""Exact discrete Bayes on a fixed grid, for checking the particle engine.

The scenario is deliberately reduced: either no defect, or one defect whose
coupling and detuning live on a regular grid with coherence time and qubit
lifetime pinned.  With the hypothesis set finite and fixed, posterior updates
are exact arithmetic - no resampling, no kernel approximation - so any
disagreement with a particle filter initialized on the same nodes is a bug in
the filter.

This module is an independent route on purpose: the excited-state probability
is written out inline rather than imported from the model module, and the
binomial likelihood comes from scipy in linear space rather than the engine's
hand-rolled log-space accumulation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats

from .config import PriorRanges
from .errors import DegenerateUpdateError
from .smc import MeasurementRecord

_WEIGHT_TOL = 1e-9


@dataclass(frozen=True)
class GridPosterior:
    """Probability mass over a fixed set of parameter-space nodes."""

    positions: np.ndarray  # (m, 7)
    probs: np.ndarray  # (m,)
    strata: np.ndarray  # (m,) defect count of each node

    def __post_init__(self):
        if (self.probs < 0).any() or abs(self.probs.sum() - 1.0) > _WEIGHT_TOL:
            raise ValueError("grid probabilities must be nonnegative and normalized")

    def stratum_weights(self) -> np.ndarray:
        return np.bincount(self.strata, weights=self.probs, minlength=3)


def reduced_scenario_grid(
    prior: PriorRanges,
    points: int = 101,
    t2d: float = 0.075,
    t1q: float = 37.0,
    no_defect_mass: float = 0.5,
) -> GridPosterior:
    """No-defect node plus a points x points (coupling, detuning) grid.

    The no-defect hypothesis gets ``no_defect_mass`` up front; the rest is
    spread uniformly over the grid nodes.  Grid axes span the prior box.
    """
    if not 0.0 <= no_defect_mass < 1.0:
        raise ValueError(f"no_defect_mass must lie in [0, 1), got {no_defect_mass}")
    g_axis = np.linspace(*prior.g, points)
    wd_axis = np.linspace(*prior.wd, points)
    gg, ww = np.meshgrid(g_axis, wd_axis, indexing="ij")
    m = points * points
    positions = np.zeros((1 + m, 7))
    positions[:, 6] = t1q
    positions[1:, 0] = gg.ravel()
    positions[1:, 2] = ww.ravel()
    positions[1:, 4] = t2d
    probs = np.full(1 + m, (1.0 - no_defect_mass) / m)
    probs[0] = no_defect_mass
    strata = np.ones(1 + m, dtype=np.uint8)
    strata[0] = 0
    return GridPosterior(positions=positions, probs=probs, strata=strata)


def _excited_probability(positions: np.ndarray, wq: float, t: float, gamma: float) -> np.ndarray:
    """Survival probability per node, written out from the rate formula."""
    g1, g2 = positions[:, 0], positions[:, 1]
    t2d1, t2d2 = positions[:, 4], positions[:, 5]
    d1 = wq - positions[:, 2]
    d2 = wq - positions[:, 3]
    with np.errstate(divide="ignore"):
        rate = (
            1.0 / positions[:, 6]
            + 2.0 * g1 * g1 / (1.0 / t2d1 + t2d1 * d1 * d1)
            + 2.0 * g2 * g2 / (1.0 / t2d2 + t2d2 * d2 * d2)
        )
    return (1.0 - 2.0 * gamma) * np.exp(-t * rate) + gamma


def oracle_update(grid: GridPosterior, record: MeasurementRecord, gamma: float = 0.0) -> GridPosterior:
    """One exact Bayes step: multiply by the binomial pmf and renormalize."""
    pe = _excited_probability(grid.positions, record.setting.wq, record.setting.t, gamma)
    like = stats.binom.pmf(record.excited, record.shots, pe)
    post = grid.probs * like
    total = post.sum()
    if not (total > 0 and np.isfinite(total)):
        raise DegenerateUpdateError("grid posterior vanished in update")
    return GridPosterior(positions=grid.positions, probs=post / total, strata=grid.strata)


def oracle_sequential_update(grid: GridPosterior, records, gamma: float = 0.0) -> GridPosterior:
    for record in records:
        grid = oracle_update(grid, record, gamma)
    return grid


@dataclass(frozen=True)
class OracleMoments:
    mean: np.ndarray  # (7,)
    cov: np.ndarray  # (7, 7)
    stratum_weights: np.ndarray  # (3,)


def oracle_moments(grid: GridPosterior) -> OracleMoments:
    """Model-averaged mean and covariance over all nodes."""
    mean = grid.probs @ grid.positions
    xc = grid.positions - mean
    cov = (xc * grid.probs[:, None]).T @ xc
    return OracleMoments(mean=mean, cov=(cov + cov.T) / 2.0, stratum_weights=grid.stratum_weights())
