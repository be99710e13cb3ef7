"""Command-line entry point.

Subcommands: ``spectrum`` (noise-free survival-probability grid of a sampled
truth), ``run`` (one adaptive characterization, JSON-lines trace),
``ensemble`` (median error/belief trajectories over many runs, CSV), and
``oracle-compare`` (particle engine vs exact grid reference, CSV).

Configuration is TOML with frequencies in MHz and times in us; flags override
file values, and every artifact embeds the fully resolved config plus the
master seed, so it can be regenerated bit-exactly.  Exit codes: 0 success,
2 configuration problems, 3 runtime inference failure; failures also print a
one-line JSON error report to stderr.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from .config import RunConfig
from .errors import ConfigError, DegenerateUpdateError, EncodingError
from .experiment import default_freq_grid, default_time_grid, sample_ground_truth, swap_spectrum
from .harness import (
    SCHEMA_VERSION,
    run_characterization,
    run_ensemble,
    run_oracle_comparison,
    run_streams,
    write_ensemble_csv,
    write_error_series_csv,
    write_oracle_comparison_csv,
    write_probability_series_csv,
    write_trace_jsonl,
)
from .physics import FIELD_NAMES

_TABLES = {"run", "prior", "ensemble", "spectrum", "oracle"}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tlsmc",
        description="Adaptive Bayesian characterization of qubit relaxation defects",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)
    specs = {
        "spectrum": "write the noise-free excited-probability grid of a sampled truth",
        "run": "run one adaptive characterization and write its trace",
        "ensemble": "run many independent characterizations and write median series",
        "oracle-compare": "compare the particle engine against the exact grid reference",
    }
    for name, help_text in specs.items():
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", type=Path, help="TOML config file (MHz / us units)")
        p.add_argument("--seed", type=int, help="master seed (u64)")
        p.add_argument("--samples", type=int, help="ensemble size / comparison streams")
        p.add_argument("--nd", type=int, choices=(0, 1, 2), help="true defect count")
        p.add_argument("--shots-per-setting", type=int, help="shot repetitions per setting")
        p.add_argument(
            "--settings", type=int, help="number of measurement settings (estimates - 1)"
        )
        p.add_argument("--gamma", type=float, help="readout error rate in [0, 0.5)")
        p.add_argument("--threads", type=int, help="worker processes for ensembles")
        p.add_argument("--out", type=Path, required=True, help="output directory")
    return parser


def _load_file(path: Path | None) -> dict:
    if path is None:
        return {}
    try:
        with open(path, "rb") as f:
            data = tomllib.load(f)
    except OSError as e:
        raise ConfigError(f"cannot read config file: {e}") from e
    except tomllib.TOMLDecodeError as e:
        raise ConfigError(f"config parse error: {e}") from e
    unknown = set(data) - _TABLES - {"schema"}
    if unknown:
        raise ConfigError(f"unknown config tables: {sorted(unknown)}")
    return data


def resolve_config(args: argparse.Namespace) -> tuple[RunConfig, dict]:
    """Defaults <- config file <- flags; returns (RunConfig, file tables)."""
    data = _load_file(args.config)
    run_tbl = dict(data.get("run", {}))
    overrides = {
        "seed": args.seed,
        "true_defects": args.nd,
        "shots_per_setting": args.shots_per_setting,
        "gamma": args.gamma,
    }
    if args.settings is not None:
        if args.settings < 0:
            raise ConfigError(f"--settings must be >= 0, got {args.settings}")
        overrides["estimates"] = args.settings + 1
    run_tbl.update({k: v for k, v in overrides.items() if v is not None})
    run_tbl["prior"] = data.get("prior", {})
    return RunConfig.from_dict(run_tbl), data


def _table(data: dict, name: str, defaults: dict, args_over: dict) -> dict:
    tbl = dict(defaults)
    file_tbl = data.get(name, {})
    unknown = set(file_tbl) - set(defaults)
    if unknown:
        raise ConfigError(f"unknown keys in [{name}]: {sorted(unknown)}")
    tbl.update(file_tbl)
    tbl.update({k: v for k, v in args_over.items() if v is not None})
    return tbl


def cmd_spectrum(cfg: RunConfig, data: dict, args) -> None:
    opts = _table(
        data,
        "spectrum",
        {"freq_points": 241, "time_points": 60, "t_min": 0.01, "t_max": 50.0},
        {},
    )
    device_rng, _ = run_streams(cfg.seed, 0)
    truth = sample_ground_truth(cfg.true_defects, cfg.prior, device_rng)
    grid = swap_spectrum(
        truth,
        default_freq_grid(cfg.prior, int(opts["freq_points"])),
        default_time_grid(int(opts["time_points"]), opts["t_min"], opts["t_max"]),
        cfg.gamma,
    )
    meta = {
        "schema": SCHEMA_VERSION,
        "subcommand": "spectrum",
        "seed": cfg.seed,
        "config": cfg.to_dict(),
        "truth": dict(zip(FIELD_NAMES, truth.x.to_array().tolist())),
    }
    with open(args.out / "spectrum.csv", "w", encoding="utf-8", newline="\n") as f:
        f.write("# " + json.dumps(meta, allow_nan=False) + "\n")
        grid.to_csv(f)


def cmd_run(cfg: RunConfig, data: dict, args) -> None:
    trace = run_characterization(cfg, run_index=0)
    write_trace_jsonl(trace, args.out / "trace.jsonl")


def cmd_ensemble(cfg: RunConfig, data: dict, args) -> None:
    opts = _table(
        data,
        "ensemble",
        {"samples": 100, "threads": 1},
        {"samples": args.samples, "threads": args.threads},
    )
    if opts["samples"] < 1 or opts["threads"] < 1:
        raise ConfigError(f"ensemble samples and threads must be >= 1, got {opts}")
    summary = run_ensemble(cfg, int(opts["samples"]), workers=int(opts["threads"]))
    write_ensemble_csv(summary, args.out / "ensemble_summary.csv")
    write_error_series_csv(summary, args.out / "error_series.csv")
    write_probability_series_csv(summary, args.out / "probability_series.csv")


def cmd_oracle_compare(cfg: RunConfig, data: dict, args) -> None:
    opts = _table(
        data,
        "oracle",
        {
            "streams": 20,
            "records": 50,
            "shots": 1,
            "particles": 80_000,
            "grid_points": 101,
            "t_min": 0.1,
            "t_max": 50.0,
        },
        {
            "streams": args.samples,
            "records": args.settings,
            "shots": args.shots_per_setting,
        },
    )
    rows = run_oracle_comparison(
        seed=cfg.seed,
        streams=int(opts["streams"]),
        n_records=int(opts["records"]),
        shots=int(opts["shots"]),
        particles=int(opts["particles"]),
        grid_points=int(opts["grid_points"]),
        t_range=(opts["t_min"], opts["t_max"]),
    )
    meta = {"subcommand": "oracle-compare", "seed": cfg.seed, "options": opts}
    write_oracle_comparison_csv(rows, meta, args.out / "oracle_compare.csv")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handlers = {
        "spectrum": cmd_spectrum,
        "run": cmd_run,
        "ensemble": cmd_ensemble,
        "oracle-compare": cmd_oracle_compare,
    }
    try:
        cfg, data = resolve_config(args)
        args.out.mkdir(parents=True, exist_ok=True)
        handlers[args.subcommand](cfg, data, args)
    except (ConfigError, OSError) as e:
        return _fail(2, e)
    except (DegenerateUpdateError, EncodingError, ValueError) as e:
        return _fail(3, e)
    return 0


def _fail(code: int, exc: Exception) -> int:
    report = {"error": {"type": type(exc).__name__, "message": str(exc), "exit_code": code}}
    print(json.dumps(report), file=sys.stderr)
    return code


if __name__ == "__main__":
    raise SystemExit(main())
