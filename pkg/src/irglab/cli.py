"""Command-line entry points.

Exit codes: 0 when the run succeeds and every verdict passes, 1 when any
verdict fails, 2 for configuration problems.  Thread count is controlled
only by the IRG_THREADS environment variable.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path
from typing import Optional

from . import analytics
from .connection import Constant
from .errors import CalibrationError, CapabilityError, ConfigurationError, DomainError
from .harness import (
    ExperimentConfig,
    RunResult,
    load_config,
    parse_statistic,
    run_experiment,
    sweep,
    write_pmf_plot_data,
    write_records_csv,
    write_records_jsonl,
    write_summary_json,
    write_sweep_outputs,
)
from .scenarios import run_scenario
from .statespace import build_measure


def _add_config_arg(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("-c", "--config", required=True, help="YAML experiment config")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="irg",
        description="Simulation and numerical checks for inhomogeneous random graphs",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="run replications from a config file")
    _add_config_arg(p_sim)
    p_sim.add_argument("--seed", type=int, help="override run.master_seed")
    p_sim.add_argument("--out", default="irg-out", help="output directory")
    p_sim.add_argument("--format", choices=("csv", "jsonl"), default="csv")
    p_sim.add_argument("--process", choices=("poisson", "binomial"))
    p_sim.add_argument("--intensity", type=float, help="poisson intensity override")
    p_sim.add_argument("--count", type=int, help="binomial point count override")
    p_sim.add_argument("--replications", type=int)
    p_sim.add_argument(
        "--dump-graphs",
        metavar="DIR",
        help="write every replication's graph as an edge-list text file",
    )

    p_exp = sub.add_parser("expect", help="expected value of one statistic")
    _add_config_arg(p_exp)
    p_exp.add_argument("--formula", required=True, help="D<j>, N<k> or H<k>")
    p_exp.add_argument("--outer", type=int, default=4000)
    p_exp.add_argument("--inner", type=int)

    p_bound = sub.add_parser("bound", help="Poisson-approximation error bounds")
    _add_config_arg(p_bound)
    p_bound.add_argument("--kind", choices=("edge", "ustat"), required=True)
    p_bound.add_argument("--outer", type=int, default=4000)
    p_bound.add_argument("--inner", type=int)

    p_cal = sub.add_parser("calibrate", help="tune the kernel knob to a target mean")
    _add_config_arg(p_cal)
    p_cal.add_argument("--target-alpha", type=float, default=1.0)
    p_cal.add_argument("--statistic", default="D0")
    p_cal.add_argument("--tolerance", type=float, default=1e-9)

    p_sweep = sub.add_parser("sweep", help="rerun over an ascending intensity grid")
    _add_config_arg(p_sweep)
    p_sweep.add_argument(
        "--s-grid", required=True, help="comma-separated ascending intensities"
    )
    p_sweep.add_argument("--no-recalibrate", action="store_true")
    p_sweep.add_argument("--target-alpha", type=float, default=1.0)
    p_sweep.add_argument("--out", default="irg-out")

    p_ctr = sub.add_parser(
        "counterexample", help="run the non-Poisson partition-kernel scenario"
    )
    p_ctr.add_argument("--s", type=float, default=1000.0, help="intensity")
    p_ctr.add_argument("--replications", type=int, default=20000)
    p_ctr.add_argument("--seed", type=int, default=42)
    p_ctr.add_argument("--out", default="irg-out")
    return parser


def _model_from_config(config: ExperimentConfig):
    if config.scenario is not None:
        raise ConfigurationError(
            "this command needs a plain config (space/connection/process), "
            "not a scenario config"
        )
    if config.process_kind != "poisson":
        raise ConfigurationError(
            "analytic expectations and bounds are defined for the poisson process"
        )
    return config.size, config.phi, config.measure


def _print_record(value) -> None:
    if dataclasses.is_dataclass(value):
        value = dataclasses.asdict(value)
    print(json.dumps(value, indent=2, sort_keys=True))


def _record(value: float, std_error: float, samples: int, method: str, **extra) -> dict:
    # every query command answers with the same core record shape
    rec = {"value": value, "std_error": std_error, "samples": samples, "method": method}
    rec.update(extra)
    return rec


def _write_run_outputs(
    out_dir: Path, name: str, result: RunResult, fmt: str
) -> None:
    if fmt == "csv":
        write_records_csv(out_dir / f"records_{name}.csv", result)
    else:
        write_records_jsonl(out_dir / f"records_{name}.jsonl", result)
    write_pmf_plot_data(out_dir, result)


def _cmd_simulate(args) -> int:
    config = load_config(args.config)
    if args.seed is not None:
        config = dataclasses.replace(config, master_seed=args.seed)
    if args.replications is not None:
        config = dataclasses.replace(config, replications=args.replications)
    overrides = (args.process, args.intensity, args.count, args.dump_graphs)
    if config.scenario is not None:
        if any(v is not None for v in overrides):
            raise ConfigurationError(
                "process/intensity/count/dump-graphs overrides apply to plain "
                "configs; scenario parameters live in the scenario section"
            )
        return _run_scenario_config(args, config)
    if args.process is not None:
        config = dataclasses.replace(config, process_kind=args.process)
    if args.intensity is not None:
        if config.process_kind != "poisson":
            raise ConfigurationError("--intensity applies to the poisson process")
        config = dataclasses.replace(config, size=float(args.intensity))
    if args.count is not None:
        if config.process_kind != "binomial":
            raise ConfigurationError("--count applies to the binomial process")
        config = dataclasses.replace(config, size=int(args.count))
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    result = run_experiment(config, dump_graphs=args.dump_graphs)
    if args.format == "csv":
        write_records_csv(out_dir / "records.csv", result)
    else:
        write_records_jsonl(out_dir / "records.jsonl", result)
    write_summary_json(out_dir / "summary.json", result.summary)
    write_pmf_plot_data(out_dir, result)
    for name, stat in result.summary["statistics"].items():
        print(
            f"{name}: mean {stat['alpha_hat']:.6g} "
            f"(se {stat['alpha_hat_std_error']:.3g}), "
            f"d_TV to Poisson target {stat['dtv_poisson']:.6g}"
        )
    print(f"wrote {out_dir}")
    return 0


def _run_scenario_config(args, config: ExperimentConfig) -> int:
    report = run_scenario(config)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    for name, run in report.runs.items():
        _write_run_outputs(out_dir, name, run, args.format)
    write_summary_json(out_dir / "summary.json", report.summary_dict())
    for line in report.lines():
        print(line)
    print(f"wrote {out_dir}")
    return 0 if report.passed else 1


def _cmd_expect(args) -> int:
    config = load_config(args.config)
    s, phi, measure = _model_from_config(config)
    kind, index = parse_statistic(args.formula)
    kwargs = {"outer_samples": args.outer}
    if kind == "D":
        if args.inner is not None:
            kwargs["inner_samples"] = args.inner
        est = analytics.expected_degree_count(s, phi, measure, index, **kwargs)
    elif kind == "N":
        if args.inner is not None:
            kwargs["inner_samples"] = args.inner
        est = analytics.expected_k_components(s, phi, measure, index, **kwargs)
    elif index == 2:
        est = analytics.expected_edges(s, phi, measure, samples=args.outer)
    else:
        est = analytics.expected_connected_k(s, phi, measure, index, **kwargs)
    _print_record(est)
    return 0


def _cmd_bound(args) -> int:
    config = load_config(args.config)
    s, phi, measure = _model_from_config(config)
    if args.kind == "edge":
        kwargs = {"outer_samples": args.outer}
        if args.inner is not None:
            kwargs["inner_samples"] = args.inner
        bound = analytics.edge_stein_bound(s, phi, measure, **kwargs)
        extra = {}
    else:
        bound = analytics.ustat_gamma(
            2,
            analytics.edge_indicator_h(phi),
            s,
            measure,
            outer_samples=args.outer,
            inner_samples=args.inner if args.inner is not None else 256,
        )
        extra = {"k": bound.k, "gamma": bound.gamma, "gamma_std_error": bound.gamma_std_error}
    _print_record(
        _record(
            bound.tv_bound,
            bound.tv_std_error,
            args.outer,
            bound.method,
            alpha=bound.alpha,
            alpha_std_error=bound.alpha_std_error,
            w_bound=bound.w_bound,
            w_std_error=bound.w_std_error,
            **extra,
        )
    )
    return 0


def _cmd_calibrate(args) -> int:
    config = load_config(args.config)
    s, phi, measure = _model_from_config(config)
    cal = analytics.calibrate_parameter(
        phi, measure, s, args.target_alpha, args.statistic, tolerance=args.tolerance
    )
    _print_record(
        _record(
            cal.value,
            0.0,
            cal.iterations,
            "bisection",
            knob=cal.knob,
            achieved=cal.achieved,
            target=cal.target,
            statistic=cal.statistic,
        )
    )
    return 0


def _cmd_sweep(args) -> int:
    config = load_config(args.config)
    if config.scenario is not None:
        raise ConfigurationError("sweep takes a plain config; grid comes from --s-grid")
    try:
        grid = [float(v) for v in args.s_grid.split(",") if v.strip()]
    except ValueError:
        raise ConfigurationError(f"--s-grid is not a comma-separated number list: {args.s_grid!r}")
    result = sweep(
        config,
        grid,
        recalibrate=not args.no_recalibrate,
        target_alpha=args.target_alpha,
    )
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_sweep_outputs(out_dir, result)
    failed = [row for row in result.rows if row["status"] != "OK"]
    for row in result.rows:
        if row["status"] == "OK":
            print(
                f"s={row['s']:g}: alpha_hat {row['alpha_hat']:.6g}, "
                f"d_TV {row['dtv']:.6g}, d_W {row['dw']:.6g}"
            )
        else:
            print(f"s={row['s']:g}: FAILED ({row['error']})")
    print(f"wrote {out_dir}")
    return 1 if failed else 0


def _cmd_counterexample(args) -> int:
    config = ExperimentConfig(
        measure=build_measure("unit-cube", 1),
        phi=Constant(0.0),
        process_kind="poisson",
        size=args.s,
        replications=args.replications,
        master_seed=args.seed,
        statistics=("D0",),
        scenario={"name": "counterexample", "intensity": args.s},
    )
    report = run_scenario(config)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    for name, run in report.runs.items():
        _write_run_outputs(out_dir, name, run, "csv")
    write_summary_json(out_dir / "summary.json", report.summary_dict())
    for line in report.lines():
        print(line)
    print(f"wrote {out_dir}")
    return 0 if report.passed else 1


_COMMANDS = {
    "simulate": _cmd_simulate,
    "expect": _cmd_expect,
    "bound": _cmd_bound,
    "calibrate": _cmd_calibrate,
    "sweep": _cmd_sweep,
    "counterexample": _cmd_counterexample,
}


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (ConfigurationError, CapabilityError, DomainError) as err:
        print(f"config error: {err}", file=sys.stderr)
        return 2
    except CalibrationError as err:
        print(f"calibration failed: {err}", file=sys.stderr)
        return 1
    except OSError as err:
        print(f"i/o error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
