"""Synthetic experiment: ground truths, binomial shot noise, swap spectra."""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np

from .config import PriorRanges
from .physics import MeasurementSetting, ParticleVector, excited_prob, relaxation_rate
from .smc import MeasurementRecord


@dataclass(frozen=True)
class GroundTruth:
    """True device parameters used to generate data."""

    x: ParticleVector

    @property
    def n_defects(self) -> int:
        return self.x.n_defects


def sample_ground_truth(
    n_defects: int, prior: PriorRanges, rng: np.random.Generator
) -> GroundTruth:
    """Draw a truth with exactly ``n_defects`` defects from the prior box.

    Draw order (fixed for reproducibility): couplings, detunings, coherence
    times, qubit lifetime; couplings sorted descending when two defects are
    drawn.  The model-weight part of the prior is ignored here - the defect
    count is an input, so truths can be generated stratum by stratum.
    """
    if n_defects not in (0, 1, 2):
        raise ValueError(f"n_defects must be 0, 1, or 2, got {n_defects}")
    g = sorted(rng.uniform(*prior.g, n_defects), reverse=True)
    wd = rng.uniform(*prior.wd, n_defects)
    t2d = rng.uniform(*prior.t2d, n_defects)
    fields = dict(t1q=float(rng.uniform(*prior.t1q)))
    for j in range(n_defects):
        fields[f"g{j + 1}"] = float(g[j])
        fields[f"wd{j + 1}"] = float(wd[j])
        fields[f"t2d{j + 1}"] = float(t2d[j])
    return GroundTruth(x=ParticleVector(**fields))


def simulate_measurement(
    truth: GroundTruth,
    setting: MeasurementSetting,
    shots: int,
    gamma: float,
    rng: np.random.Generator,
) -> MeasurementRecord:
    """Repeat one setting ``shots`` times; excited count is binomial."""
    pe = float(excited_prob(truth.x.to_array(), setting, gamma))
    excited = int(rng.binomial(shots, pe))
    return MeasurementRecord(setting=setting, shots=shots, excited=excited)


@dataclass(frozen=True)
class SpectrumGrid:
    """Excited-state survival probability over a frequency x time grid."""

    freqs: np.ndarray  # (F,) probe frequencies, rad/us
    times: np.ndarray  # (T,) wait times, us
    prob: np.ndarray  # (F, T)

    def write_csv(self, path) -> None:
        """Header row carries the wait times; first column the frequencies."""
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            self.to_csv(f)

    def to_csv(self, f: io.TextIOBase) -> None:
        f.write("freq_rad_per_us," + ",".join(repr(t) for t in self.times.tolist()) + "\n")
        for freq, row in zip(self.freqs.tolist(), self.prob.tolist()):
            f.write(repr(freq) + "," + ",".join(repr(p) for p in row) + "\n")


def swap_spectrum(truth: GroundTruth, freqs, times, gamma: float = 0.0) -> SpectrumGrid:
    """Noise-free P_e surface of a truth: defects appear as dips that deepen
    with wait time.  Deterministic - no RNG is consumed."""
    freqs = np.asarray(freqs, dtype=float)
    times = np.asarray(times, dtype=float)
    if not 0.0 <= gamma < 0.5:
        raise ValueError(f"readout error rate must lie in [0, 0.5), got {gamma}")
    rate = relaxation_rate(truth.x.to_array(), freqs)  # (F,)
    decay = np.exp(-times[None, :] * rate[:, None])
    return SpectrumGrid(freqs=freqs, times=times, prob=(1.0 - 2.0 * gamma) * decay + gamma)


def default_freq_grid(prior: PriorRanges, points: int = 241) -> np.ndarray:
    """Evenly spaced probe frequencies covering the prior detuning window."""
    return np.linspace(*prior.wd, points)


def default_time_grid(points: int = 60, t_min: float = 0.01, t_max: float = 50.0) -> np.ndarray:
    """Log-spaced wait times (decay features spread evenly in log time)."""
    if not 0 < t_min < t_max:
        raise ValueError(f"need 0 < t_min < t_max, got ({t_min}, {t_max})")
    return np.geomspace(t_min, t_max, points)
