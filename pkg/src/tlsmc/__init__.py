"""Adaptive Bayesian characterization of qubit relaxation defects.

A qubit's energy relaxation is probed shot by shot; lossy two-level defects
near resonance show up as Lorentzian dips in the relaxation time.  A
model-stratified particle filter infers, simultaneously, how many defects are
present (0, 1, or 2) and their couplings, frequencies, and coherence times,
while an adaptive policy steers each next measurement toward the current
posterior's best guesses.
"""

from .config import PriorRanges, RunConfig
from .errors import ConfigError, DegenerateUpdateError, EncodingError
from .experiment import (
    GroundTruth,
    SpectrumGrid,
    default_freq_grid,
    default_time_grid,
    sample_ground_truth,
    simulate_measurement,
    swap_spectrum,
)
from .harness import (
    EnsembleSummary,
    RunTrace,
    lower_median,
    run_characterization,
    run_ensemble,
    run_oracle_comparison,
    run_streams,
    squared_error,
    write_trace_jsonl,
)
from .oracle import GridPosterior, oracle_moments, oracle_update, reduced_scenario_grid
from .physics import (
    MeasurementSetting,
    ParticleVector,
    excited_prob,
    regime_check,
    relaxation_time,
    stratum_of,
)
from .policy import PolicyConfig, choose_frequency, choose_setting, choose_time
from .smc import (
    MeasurementRecord,
    ModelProbabilities,
    ParticleCloud,
    StratumMoments,
    bayes_update,
    effective_sample_size,
    init_cloud,
    model_probabilities,
    posterior_estimate,
    resample,
    sequential_update,
    stratum_moments,
)

__version__ = "0.1.0"
