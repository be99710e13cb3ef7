"""Characterization runs, ensembles, and figure-of-merit reduction.

Reproducibility scheme: a master seed plus a run index determine two
independent RNG streams via spawn keys - ``(run_index, 0)`` drives the
simulated device (ground truth and shot noise), ``(run_index, 1)`` drives
inference (cloud initialization, policy draws, resampling).  Ensembles
enumerate run indices, so results are independent of execution order and of
how many workers processed them, and re-running with the same master seed
reproduces every number bit-exactly.
"""

from __future__ import annotations

import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .config import PriorRanges, RunConfig
from .errors import DegenerateUpdateError
from .experiment import GroundTruth, sample_ground_truth, simulate_measurement
from .oracle import oracle_moments, oracle_update, reduced_scenario_grid
from .physics import ENCODED_COORDS, FIELD_NAMES, G1, N_FIELDS, WD1, MeasurementSetting
from .policy import PolicyConfig, choose_setting
from .smc import (
    ParticleCloud,
    bayes_update,
    effective_sample_size,
    init_cloud,
    model_probabilities,
    posterior_estimate,
    resample,
    stratum_means,
)

SCHEMA_VERSION = 1

PROBABILITY_NAMES = ("p1_present", "p2_present", "p1_absent", "p2_absent")

# which of the four belief probabilities are "correct" for a given truth
CORRECT_BELIEFS = {
    0: ("p1_absent", "p2_absent"),
    1: ("p1_present", "p2_absent"),
    2: ("p1_present", "p2_present"),
}


def run_streams(seed: int, run_index: int) -> tuple[np.random.Generator, np.random.Generator]:
    """(device stream, inference stream) for one run of an ensemble."""
    device = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(run_index, 0)))
    infer = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(run_index, 1)))
    return device, infer


def encoded_params(n_defects: int) -> tuple[str, ...]:
    """Names of the parameters a truth with ``n_defects`` actually has."""
    return tuple(FIELD_NAMES[c] for c in ENCODED_COORDS[n_defects])


@dataclass
class RunTrace:
    """Everything recorded during one characterization run.

    Index 0 of each per-estimate array reflects the initial prior; entry i
    (i >= 1) is the state after folding in setting i.  ``ess`` holds the
    post-update, pre-resample effective sample size (the quantity the
    resample trigger saw); estimates and probabilities describe the cloud as
    carried forward (post-resample when one fired).
    """

    config: RunConfig
    run_index: int
    truth: GroundTruth
    estimates: np.ndarray  # (n_est, 7) model-averaged posterior means
    conditional_means: np.ndarray  # (n_est, 3, 7); NaN rows for empty strata
    probabilities: np.ndarray  # (n_est, 4) in PROBABILITY_NAMES order
    ess: np.ndarray  # (n_est,)
    settings: np.ndarray  # (n_est - 1, 2): probe frequency, wait time
    excited: np.ndarray  # (n_est - 1,)
    resampled: np.ndarray  # (n_est - 1,) bool
    final_cloud: Optional[ParticleCloud] = None

    def __len__(self) -> int:
        return self.estimates.shape[0]


def run_characterization(
    cfg: RunConfig,
    run_index: int = 0,
    truth: Optional[GroundTruth] = None,
    keep_cloud: bool = False,
) -> RunTrace:
    """One adaptive run: choose setting, measure a batch, update, maybe resample.

    The trace holds cfg.estimates entries, the first being the prior itself.
    A supplied ``truth`` overrides the device stream's draw (the stream is
    then used for shot noise only).
    """
    device_rng, infer_rng = run_streams(cfg.seed, run_index)
    if truth is None:
        truth = sample_ground_truth(cfg.true_defects, cfg.prior, device_rng)
    cloud = init_cloud(cfg.prior, cfg.particles, infer_rng, cfg.order_defects)
    pol = PolicyConfig(freq_window=cfg.prior.wd)

    n_est = cfg.estimates
    estimates = np.empty((n_est, N_FIELDS))
    cond = np.empty((n_est, 3, N_FIELDS))
    probs = np.empty((n_est, 4))
    ess = np.empty(n_est)
    settings = np.empty((n_est - 1, 2))
    excited = np.zeros(n_est - 1, dtype=np.int64)
    resampled = np.zeros(n_est - 1, dtype=bool)

    def snapshot(i: int, current_ess: float) -> None:
        estimates[i] = posterior_estimate(cloud)
        cond[i] = stratum_means(cloud)
        mp = model_probabilities(cloud)
        probs[i] = (mp.p1_present, mp.p2_present, mp.p1_absent, mp.p2_absent)
        ess[i] = current_ess

    snapshot(0, float(len(cloud)))
    for i in range(1, n_est):
        setting = choose_setting(cloud, pol, infer_rng)
        record = simulate_measurement(truth, setting, cfg.shots_per_setting, cfg.gamma, device_rng)
        try:
            cloud = bayes_update(cloud, record, cfg.gamma)
        except DegenerateUpdateError as e:
            raise DegenerateUpdateError(f"run {run_index}, setting {i}: {e}") from e
        current_ess = effective_sample_size(cloud)
        if current_ess < cfg.resample_threshold * len(cloud):
            cloud = resample(cloud, cfg.shrinkage, infer_rng, cfg.order_defects)
            resampled[i - 1] = True
        settings[i - 1] = (setting.wq, setting.t)
        excited[i - 1] = record.excited
        snapshot(i, current_ess)

    return RunTrace(
        config=cfg,
        run_index=run_index,
        truth=truth,
        estimates=estimates,
        conditional_means=cond,
        probabilities=probs,
        ess=ess,
        settings=settings,
        excited=excited,
        resampled=resampled,
        final_cloud=cloud if keep_cloud else None,
    )


def squared_error(
    trace: RunTrace,
    truth: Optional[GroundTruth] = None,
    labeling: str = "model_averaged",
    normalization: Optional[str] = None,
) -> dict[str, np.ndarray]:
    """Per-parameter squared-error series against the run's ground truth.

    Only parameters the truth actually has are reported (an n_d=0 run has no
    defect parameters to be wrong about).  Defects are matched index-wise:
    both the truth and the estimate keep couplings in descending order, so
    slot j compares like with like.  ``labeling`` selects the model-averaged
    estimate or the mean conditioned on the truth's own stratum; the latter
    is NaN wherever that stratum carries no weight.  Normalization divides by
    the prior variance of the parameter ("prior_variance", default) or not at
    all ("none").
    """
    if truth is None:
        truth = trace.truth
    if labeling == "model_averaged":
        est = trace.estimates
    elif labeling == "conditional":
        est = trace.conditional_means[:, truth.n_defects, :]
    else:
        raise ValueError(f"unknown labeling {labeling!r}")
    if normalization is None:
        normalization = trace.config.error_normalization
    if normalization not in ("prior_variance", "none"):
        raise ValueError(f"unknown normalization {normalization!r}")
    x_true = truth.x.to_array()
    out = {}
    for c in ENCODED_COORDS[truth.n_defects]:
        name = FIELD_NAMES[c]
        err = (est[:, c] - x_true[c]) ** 2
        if normalization == "prior_variance":
            err = err / trace.config.prior.variance(name.rstrip("12"))
        out[name] = err
    return out


def lower_median(a: np.ndarray, axis: int = 0) -> np.ndarray:
    """Median with ties broken downward: element (n-1)//2 of the sorted axis."""
    a = np.asarray(a)
    k = (a.shape[axis] - 1) // 2
    return np.partition(a, k, axis=axis).take(k, axis=axis)


@dataclass
class EnsembleSummary:
    """Lower-medians across an ensemble of independent runs."""

    config: RunConfig
    n_samples: int
    sample_count: int  # runs that completed; medians use only these
    failures: tuple[tuple[int, str], ...]
    param_names: tuple[str, ...]
    median_error: dict[str, np.ndarray]  # (n_est,) per parameter
    median_probability: np.ndarray  # (n_est, 4) in PROBABILITY_NAMES order

    @property
    def shots(self) -> np.ndarray:
        """Cumulative measurement shots at each estimate index."""
        n_est = self.median_probability.shape[0]
        return np.arange(n_est) * self.config.shots_per_setting


def _reduced_run(args: tuple[RunConfig, int]):
    """Worker: run one index and keep only what the ensemble aggregates."""
    cfg, run_index = args
    try:
        trace = run_characterization(cfg, run_index)
    except DegenerateUpdateError as e:
        return run_index, None, None, str(e)
    errors = squared_error(trace)
    stacked = np.stack([errors[p] for p in encoded_params(cfg.true_defects)])
    return run_index, stacked, trace.probabilities, None


def run_ensemble(cfg: RunConfig, n_samples: int, workers: int = 1) -> EnsembleSummary:
    """Medians of error and belief series over independent runs.

    Each run gets its own ground truth and RNG streams from the master seed
    and its run index, so the summary is a pure function of (cfg, n_samples).
    Failed runs (degenerate updates) are excluded from the medians and
    reported with their run index.
    """
    if n_samples < 1:
        raise ValueError(f"need n_samples >= 1, got {n_samples}")
    jobs = [(cfg, i) for i in range(n_samples)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_reduced_run, jobs, chunksize=8))
    else:
        results = [_reduced_run(job) for job in jobs]
    results.sort(key=lambda r: r[0])

    params = encoded_params(cfg.true_defects)
    error_stack = [r[1] for r in results if r[1] is not None]
    prob_stack = [r[2] for r in results if r[2] is not None]
    failures = tuple((r[0], r[3]) for r in results if r[3] is not None)
    if not error_stack:
        raise DegenerateUpdateError(f"all {n_samples} runs failed; first: {failures[0][1]}")
    med_err_matrix = lower_median(np.stack(error_stack), axis=0)
    return EnsembleSummary(
        config=cfg,
        n_samples=n_samples,
        sample_count=len(error_stack),
        failures=failures,
        param_names=params,
        median_error={p: med_err_matrix[j] for j, p in enumerate(params)},
        median_probability=lower_median(np.stack(prob_stack), axis=0),
    )


# ---------------------------------------------------------------------------
# oracle cross-check


@dataclass(frozen=True)
class OracleComparisonRow:
    """Final-posterior discrepancies between the particle engine and the
    exact grid reference, for one record stream."""

    stream: int
    n_records: int
    smc_mean_g1: float
    oracle_mean_g1: float
    oracle_std_g1: float
    smc_mean_wd1: float
    oracle_mean_wd1: float
    oracle_std_wd1: float
    smc_p1_present: float
    oracle_p1_present: float


def reduced_scenario_prior(t2d: float = 0.075, t1q: float = 37.0) -> PriorRanges:
    """Continuous prior matching the grid reference: one defect at most,
    coherence time and qubit lifetime pinned."""
    return PriorRanges(
        t2d_us=(t2d, t2d), t1q_us=(t1q, t1q), model_weights=(1.0, 1.0, 0.0)
    )


def run_oracle_comparison(
    seed: int,
    streams: int = 20,
    n_records: int = 50,
    shots: int = 1,
    particles: int = 80_000,
    grid_points: int = 101,
    t_range: tuple[float, float] = (0.1, 50.0),
) -> list[OracleComparisonRow]:
    """Feed identical record streams to the particle engine and the grid.

    Per stream: the device RNG draws a truth from the reduced scenario (a
    fair coin for defect presence), then ``n_records`` settings with uniform
    probe frequency and log-uniform wait time; the inference RNG drives the
    particle engine's usual update/conditional-resample loop.
    """
    prior = reduced_scenario_prior()
    cfg = RunConfig(particles=particles, prior=prior, seed=seed)
    rows = []
    for s in range(streams):
        device_rng, infer_rng = run_streams(seed, s)
        n_d = int(device_rng.random() < 0.5)
        truth = sample_ground_truth(n_d, prior, device_rng)
        cloud = init_cloud(prior, particles, infer_rng)
        grid = reduced_scenario_grid(prior, points=grid_points)
        for _ in range(n_records):
            wq = device_rng.uniform(*prior.wd)
            t = float(np.exp(device_rng.uniform(*np.log(t_range))))
            record = simulate_measurement(truth, MeasurementSetting(wq, t), shots, 0.0, device_rng)
            cloud = bayes_update(cloud, record)
            if effective_sample_size(cloud) < cfg.resample_threshold * len(cloud):
                cloud = resample(cloud, cfg.shrinkage, infer_rng)
            grid = oracle_update(grid, record)
        est = posterior_estimate(cloud)
        ref = oracle_moments(grid)
        rows.append(
            OracleComparisonRow(
                stream=s,
                n_records=n_records,
                smc_mean_g1=float(est[G1]),
                oracle_mean_g1=float(ref.mean[G1]),
                oracle_std_g1=float(np.sqrt(ref.cov[G1, G1])),
                smc_mean_wd1=float(est[WD1]),
                oracle_mean_wd1=float(ref.mean[WD1]),
                oracle_std_wd1=float(np.sqrt(ref.cov[WD1, WD1])),
                smc_p1_present=model_probabilities(cloud).p1_present,
                oracle_p1_present=float(ref.stratum_weights[1] + ref.stratum_weights[2]),
            )
        )
    return rows


# ---------------------------------------------------------------------------
# serialization: JSON-lines traces, CSV summaries


def _meta(cfg: RunConfig, **extra) -> dict:
    return {"schema": SCHEMA_VERSION, "seed": cfg.seed, "config": cfg.to_dict(), **extra}


def _clean(row: np.ndarray):
    """NaN-free JSON value for a vector: null when the whole row is unset."""
    return None if np.isnan(row).all() else [float(v) for v in row]


def write_trace_jsonl(trace: RunTrace, path) -> None:
    """One JSON object per line: header, one line per estimate index
    (1-based, index 1 = prior), and a final cloud summary."""
    cfg = trace.config
    truth = {
        "n_defects": trace.truth.n_defects,
        "params": dict(zip(FIELD_NAMES, trace.truth.x.to_array().tolist())),
    }
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        head = _meta(cfg, kind="header", run_index=trace.run_index, truth=truth)
        f.write(json.dumps(head, allow_nan=False) + "\n")
        for i in range(len(trace)):
            line = {
                "kind": "estimate",
                "index": i + 1,
                "shots": i * cfg.shots_per_setting,
                "setting": None
                if i == 0
                else {"wq": float(trace.settings[i - 1, 0]), "t": float(trace.settings[i - 1, 1])},
                "excited": None if i == 0 else int(trace.excited[i - 1]),
                "resampled": False if i == 0 else bool(trace.resampled[i - 1]),
                "ess": float(trace.ess[i]),
                "estimate": [float(v) for v in trace.estimates[i]],
                "conditional": [_clean(trace.conditional_means[i, k]) for k in range(3)],
                "probabilities": dict(zip(PROBABILITY_NAMES, trace.probabilities[i].tolist())),
            }
            f.write(json.dumps(line, allow_nan=False) + "\n")
        final = {
            "kind": "final",
            "probabilities": dict(zip(PROBABILITY_NAMES, trace.probabilities[-1].tolist())),
            "conditional": [_clean(trace.conditional_means[-1, k]) for k in range(3)],
        }
        f.write(json.dumps(final, allow_nan=False) + "\n")


def load_trace_jsonl(path) -> list[dict]:
    with open(path, encoding="utf-8") as f:
        return [json.loads(line) for line in f if line.strip()]


def write_ensemble_csv(summary: EnsembleSummary, path) -> None:
    """Long-format medians: one row per (estimate index, series name).

    Estimate indices are 1-based (index 1 = prior); the shot count at index i
    is (i - 1) * shots_per_setting.  The first line is a `#` comment holding
    the full config and ensemble bookkeeping as JSON.
    """
    meta = _meta(
        summary.config,
        n_samples=summary.n_samples,
        sample_count=summary.sample_count,
        failures=list(summary.failures),
    )
    n_est = summary.median_probability.shape[0]
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write("# " + json.dumps(meta, allow_nan=False) + "\n")
        f.write("index,name,median,samples\n")
        for i in range(n_est):
            for p in summary.param_names:
                value = repr(float(summary.median_error[p][i]))
                f.write(f"{i + 1},{p}_error,{value},{summary.sample_count}\n")
            for j, name in enumerate(PROBABILITY_NAMES):
                value = repr(float(summary.median_probability[i, j]))
                f.write(f"{i + 1},{name},{value},{summary.sample_count}\n")


def write_error_series_csv(summary: EnsembleSummary, path) -> None:
    """Wide, plot-ready median error trajectories (x = estimate index)."""
    meta = _meta(summary.config, n_samples=summary.n_samples, sample_count=summary.sample_count)
    names = summary.param_names
    n_est = next(iter(summary.median_error.values())).shape[0]
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write("# " + json.dumps(meta, allow_nan=False) + "\n")
        f.write("index," + ",".join(f"{p}_error" for p in names) + "\n")
        for i in range(n_est):
            row = ",".join(repr(float(summary.median_error[p][i])) for p in names)
            f.write(f"{i + 1},{row}\n")


def write_probability_series_csv(summary: EnsembleSummary, path) -> None:
    """Wide, plot-ready median belief trajectories (x = cumulative shots)."""
    meta = _meta(summary.config, n_samples=summary.n_samples, sample_count=summary.sample_count)
    shots = summary.shots
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write("# " + json.dumps(meta, allow_nan=False) + "\n")
        f.write("shots," + ",".join(PROBABILITY_NAMES) + "\n")
        for i in range(summary.median_probability.shape[0]):
            row = ",".join(repr(float(v)) for v in summary.median_probability[i])
            f.write(f"{int(shots[i])},{row}\n")


def write_oracle_comparison_csv(rows: list[OracleComparisonRow], cfg_meta: dict, path) -> None:
    cols = (
        "stream,n_records,smc_mean_g1,oracle_mean_g1,oracle_std_g1,"
        "smc_mean_wd1,oracle_mean_wd1,oracle_std_wd1,smc_p1_present,oracle_p1_present"
    )
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write("# " + json.dumps({"schema": SCHEMA_VERSION, **cfg_meta}, allow_nan=False) + "\n")
        f.write(cols + "\n")
        for r in rows:
            f.write(
                f"{r.stream},{r.n_records},{r.smc_mean_g1!r},{r.oracle_mean_g1!r},"
                f"{r.oracle_std_g1!r},{r.smc_mean_wd1!r},{r.oracle_mean_wd1!r},"
                f"{r.oracle_std_wd1!r},{r.smc_p1_present!r},{r.oracle_p1_present!r}\n"
            )
