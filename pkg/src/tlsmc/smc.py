"""Model-stratified sequential Monte Carlo over the defect parameter space.

A single weighted particle cloud carries the joint posterior over the defect
count and the continuous parameters: the defect count of a particle is encoded
in its zero pattern, and the posterior probability of "k defects present" is
simply the total weight of stratum k.

Particles never change stratum.  Bayes updates only reweight, and resampling
regenerates each offspring inside its ancestor's stratum using that stratum's
own mean and covariance: shrink toward the stratum mean by the factor ``a``
and add Gaussian jitter with covariance ``(1 - a^2)`` times the stratum
covariance, so each stratum's mean and covariance are preserved in
expectation.  Pooling all particles into one kernel would instead drag the
zero-encoded components of low-dimensional particles off zero, silently
promoting every hypothesis to the two-defect model.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .config import PriorRanges
from .errors import DegenerateUpdateError
from .physics import (
    ENCODED_COORDS,
    G1,
    G2,
    MODEL_CLASSES,
    N_FIELDS,
    POSITIVE_COORDS,
    T1Q,
    T2D1,
    T2D2,
    WD1,
    WD2,
    MeasurementSetting,
    excited_prob,
    relaxation_time,
    strata_of,
)

WEIGHT_NORMALIZATION_TOL = 1e-9
DEGENERATE_WEIGHT_TOL = 1e-12
MAX_JITTER_REDRAWS = 100

# column order that exchanges the two defect slots
_SWAPPED = np.array([G2, G1, WD2, WD1, T2D2, T2D1, T1Q])


@dataclass(frozen=True)
class MeasurementRecord:
    """Outcome of repeating one setting for a fixed number of shots."""

    setting: MeasurementSetting
    shots: int
    excited: int

    def __post_init__(self):
        if self.shots < 1:
            raise ValueError(f"shots must be >= 1, got {self.shots}")
        if not 0 <= self.excited <= self.shots:
            raise ValueError(f"excited count {self.excited} outside [0, {self.shots}]")


class ParticleCloud:
    """Weighted particles with cached per-particle defect counts.

    ``strata`` is derived (and the zero encoding validated) when not supplied;
    internal operations that provably preserve membership pass it through.
    """

    __slots__ = ("positions", "weights", "strata")

    def __init__(self, positions, weights, strata=None):
        positions = np.asarray(positions, dtype=float)
        weights = np.asarray(weights, dtype=float)
        if positions.ndim != 2 or positions.shape[1] != N_FIELDS:
            raise ValueError(f"positions must be (n, {N_FIELDS}), got {positions.shape}")
        if weights.shape != (positions.shape[0],):
            raise ValueError("weights must be one per particle")
        if (weights < 0).any():
            raise ValueError("weights must be nonnegative")
        if abs(weights.sum() - 1.0) > WEIGHT_NORMALIZATION_TOL:
            raise ValueError(f"weights must sum to 1 within {WEIGHT_NORMALIZATION_TOL}")
        if strata is None:
            strata = strata_of(positions)
        self.positions = positions
        self.weights = weights
        self.strata = np.asarray(strata, dtype=np.uint8)

    def __len__(self) -> int:
        return self.positions.shape[0]

    def stratum_weights(self) -> np.ndarray:
        """Total weight per defect count, shape (3,)."""
        return np.bincount(self.strata, weights=self.weights, minlength=3)


@dataclass(frozen=True)
class StratumMoments:
    """Weighted mean and covariance of each stratum.

    ``mean`` rows are NaN and ``cov`` entries None for empty strata.  Each
    covariance covers only that stratum's encoded coordinates (absent-defect
    components are exact zeros with no spread), and is symmetrized.
    """

    weights: np.ndarray  # (3,)
    mean: np.ndarray  # (3, 7)
    cov: tuple[Optional[np.ndarray], ...]  # encoded-coordinate submatrices


@dataclass(frozen=True)
class ModelProbabilities:
    """Posterior presence/absence probabilities for each defect slot.

    Complements are formed by subtraction, so each present/absent pair sums
    to exactly 1.0.
    """

    p1_present: float
    p2_present: float
    p1_absent: float
    p2_absent: float


def init_cloud(
    prior: PriorRanges,
    n_particles: int,
    rng: np.random.Generator,
    order_defects: bool = True,
) -> ParticleCloud:
    """Draw an equal-weight cloud from the prior.

    Particle counts per stratum are floor(p_k * n); the remainder goes to the
    highest defect count with nonzero prior mass.  Within each stratum block
    the encoded columns are drawn in field order; for two-defect particles the
    coupling pair is drawn jointly and sorted descending when ``order_defects``
    (detunings and coherence times are i.i.d., so sorting only the couplings
    leaves the joint law unchanged).
    """
    probs = prior.model_probs
    counts = [int(probs[k] * n_particles) for k in MODEL_CLASSES]
    spill = max(k for k in MODEL_CLASSES if probs[k] > 0)
    counts[spill] += n_particles - sum(counts)

    positions = np.zeros((n_particles, N_FIELDS))
    strata = np.repeat(np.arange(3, dtype=np.uint8), counts)
    lo = 0
    for k, nk in enumerate(counts):
        block = slice(lo, lo + nk)
        lo += nk
        if nk == 0:
            continue
        if k == 1:
            positions[block, G1] = rng.uniform(*prior.g, nk)
            positions[block, WD1] = rng.uniform(*prior.wd, nk)
            positions[block, T2D1] = rng.uniform(*prior.t2d, nk)
        elif k == 2:
            g = rng.uniform(*prior.g, (nk, 2))
            if order_defects:
                g = -np.sort(-g, axis=1)
            positions[block, G1:G2 + 1] = g
            positions[block, WD1:WD2 + 1] = rng.uniform(*prior.wd, (nk, 2))
            positions[block, T2D1:T2D2 + 1] = rng.uniform(*prior.t2d, (nk, 2))
        positions[block, T1Q] = rng.uniform(*prior.t1q, nk)
    weights = np.full(n_particles, 1.0 / n_particles)
    return ParticleCloud(positions, weights, strata)


def _log_likelihood(positions: np.ndarray, record: MeasurementRecord, gamma: float) -> np.ndarray:
    """Per-particle binomial log-likelihood (combinatorial factor dropped:
    it is shared by all particles and cancels on normalization)."""
    pe = excited_prob(positions, record.setting, gamma)
    ll = np.zeros(positions.shape[0])
    misses = record.shots - record.excited
    with np.errstate(divide="ignore"):
        if record.excited:
            ll += record.excited * np.log(pe)
        if misses:
            ll += misses * np.log1p(-pe)
    return ll


def bayes_update(cloud: ParticleCloud, record: MeasurementRecord, gamma: float = 0.0) -> ParticleCloud:
    """Reweight by the binomial likelihood of the observed record.

    Accumulates in log space and rescales by the maximum before
    exponentiating, so many-shot records cannot underflow every weight at
    once.  Raises DegenerateUpdateError if the posterior mass is identically
    zero (every particle assigns probability 0 to the outcome).
    """
    ll = _log_likelihood(cloud.positions, record, gamma)
    shift = ll.max()
    if not np.isfinite(shift):
        raise DegenerateUpdateError("all particles have zero likelihood")
    w = cloud.weights * np.exp(ll - shift)
    total = w.sum()
    if not (total > 0 and np.isfinite(total)):
        raise DegenerateUpdateError("posterior weight vanished in update")
    return ParticleCloud(cloud.positions, w / total, cloud.strata)


def sequential_update(
    cloud: ParticleCloud, records, gamma: float = 0.0
) -> ParticleCloud:
    """Fold a sequence of records into the cloud, one Bayes update each."""
    for record in records:
        cloud = bayes_update(cloud, record, gamma)
    return cloud


def effective_sample_size(cloud: ParticleCloud) -> float:
    """Kish effective sample size 1 / sum(w^2)."""
    return 1.0 / float(np.dot(cloud.weights, cloud.weights))


def stratum_means(cloud: ParticleCloud) -> np.ndarray:
    """Per-stratum weighted means, shape (3, 7); NaN rows for empty strata."""
    mean = np.full((3, N_FIELDS), np.nan)
    for k in MODEL_CLASSES:
        mask = cloud.strata == k
        wk = cloud.weights[mask]
        total = wk.sum()
        if total <= 0.0:
            continue
        mean[k] = (wk / total) @ cloud.positions[mask]
    return mean


def stratum_moments(cloud: ParticleCloud) -> StratumMoments:
    """Weighted mean and encoded-coordinate covariance of each stratum."""
    weights = cloud.stratum_weights()
    mean = np.full((3, N_FIELDS), np.nan)
    covs: list[Optional[np.ndarray]] = [None, None, None]
    for k in MODEL_CLASSES:
        if weights[k] <= 0.0:
            continue
        mask = cloud.strata == k
        v = cloud.weights[mask] / weights[k]
        coords = list(ENCODED_COORDS[k])
        x = cloud.positions[np.ix_(mask, coords)]
        mu = v @ x
        row = np.zeros(N_FIELDS)
        row[coords] = mu
        mean[k] = row
        xc = x - mu
        c = (xc * v[:, None]).T @ xc
        covs[k] = (c + c.T) / 2.0
    return StratumMoments(weights=weights, mean=mean, cov=tuple(covs))


def model_probabilities(cloud: ParticleCloud) -> ModelProbabilities:
    sw = cloud.stratum_weights()
    p1 = min(1.0, float(sw[1] + sw[2]))
    p2 = min(1.0, float(sw[2]))
    return ModelProbabilities(p1, p2, 1.0 - p1, 1.0 - p2)


def posterior_estimate(cloud: ParticleCloud) -> np.ndarray:
    """Model-averaged posterior mean, shape (7,).

    Absent-defect zeros participate in the average, so e.g. the g1 component
    mixes stratum-1 and stratum-2 couplings with stratum-0 zeros.
    """
    return cloud.weights @ cloud.positions


def expected_t1(cloud: ParticleCloud, wq: float) -> float:
    """Posterior-mean relaxation time at probe frequency ``wq``."""
    return float(cloud.weights @ relaxation_time(cloud.positions, wq))


def _shrink_stratum(
    anc: np.ndarray,
    mu: np.ndarray,
    cov: np.ndarray,
    shrinkage: float,
    k: int,
    rng: np.random.Generator,
) -> np.ndarray:
    """Liu-West offspring on one stratum's encoded coordinates.

    Negative covariance eigenvalues (symmetrization residue) are clipped to
    zero before sampling.  Rows that violate positivity are redrawn a bounded
    number of times, then fall back to copying their ancestor.
    """
    a = shrinkage
    lam, vecs = np.linalg.eigh((1.0 - a * a) * cov)
    transform = vecs * np.sqrt(np.clip(lam, 0.0, None))
    center = a * anc + (1.0 - a) * mu
    coords = ENCODED_COORDS[k]
    pos_within = [coords.index(c) for c in POSITIVE_COORDS[k]]
    out = center + rng.standard_normal(anc.shape) @ transform.T
    bad = ~(out[:, pos_within] > 0).all(axis=1)
    for _ in range(MAX_JITTER_REDRAWS):
        if not bad.any():
            break
        n_bad = int(bad.sum())
        out[bad] = center[bad] + rng.standard_normal((n_bad, len(coords))) @ transform.T
        bad[bad] = ~(out[bad][:, pos_within] > 0).all(axis=1)
    if bad.any():
        out[bad] = anc[bad]
    return out


def resample(
    cloud: ParticleCloud,
    shrinkage: float,
    rng: np.random.Generator,
    order_defects: bool = True,
) -> ParticleCloud:
    """Multinomial resampling with stratum-local kernel shrinkage.

    Three steps, with a fixed random-draw order for reproducibility:

    1. Draw n ancestors from the full cloud in proportion to weight
       (one uniform per offspring against the cumulative weights).
    2. For each stratum in increasing defect count, move its offspring toward
       the ancestor cloud's stratum mean by the shrinkage factor ``a`` and add
       Gaussian jitter with covariance (1 - a^2) times the stratum covariance,
       on the encoded coordinates only; absent-defect components stay exactly
       zero, so no offspring changes stratum.  A stratum whose total ancestor
       weight is below 1e-12, or whose positive-weight members coincide at a
       single point, copies ancestors verbatim rather than sampling a
       singular Gaussian.
    3. Restore the canonical coupling order (g1 >= g2) for two-defect
       offspring by swapping defect slots where needed.

    Offspring weights are uniform.
    """
    n = len(cloud)
    cdf = np.cumsum(cloud.weights)
    cdf[-1] = 1.0
    ancestors = np.searchsorted(cdf, rng.random(n), side="right")
    new_pos = np.zeros((n, N_FIELDS))
    new_strata = cloud.strata[ancestors]
    moments = stratum_moments(cloud)
    for k in MODEL_CLASSES:
        rows = np.flatnonzero(new_strata == k)
        if rows.size == 0:
            continue
        coords = list(ENCODED_COORDS[k])
        anc = cloud.positions[np.ix_(ancestors[rows], coords)]
        members = (cloud.strata == k) & (cloud.weights > 0)
        degenerate = moments.weights[k] < DEGENERATE_WEIGHT_TOL or not np.ptp(
            cloud.positions[np.ix_(members, coords)], axis=0
        ).any()
        if degenerate:
            new_pos[np.ix_(rows, coords)] = anc
        else:
            new_pos[np.ix_(rows, coords)] = _shrink_stratum(
                anc, moments.mean[k, coords], moments.cov[k], shrinkage, k, rng
            )
    if order_defects:
        two = np.flatnonzero(new_strata == 2)
        flip = two[new_pos[two, G1] < new_pos[two, G2]]
        if flip.size:
            new_pos[flip] = new_pos[np.ix_(flip, _SWAPPED)]
    return ParticleCloud(new_pos, np.full(n, 1.0 / n), new_strata)
