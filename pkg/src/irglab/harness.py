"""Experiment harness: config files in, replication records and summaries out.

A config is a YAML document with sections:

    space:       {kind, dimension, density, ...density params}
    connection:  {family, ...family params}
    process:     {kind: poisson|binomial, intensity|n}
    run:         {replications, master_seed, statistics: [D0, N1, H2, ...]}
    scenario:    {name, ...scenario params}          (optional)
    tolerances:  {dtv_poisson: 0.03, ...}            (optional overrides)

Each replication r draws its own seed from (master_seed, r), samples a
marked configuration, builds the ordered graph, and records the requested
statistics, so results do not depend on how replications are scheduled
across workers.  Records are emitted as CSV or JSONL, aggregates as a JSON
summary plus plot-ready pmf tables.
"""

from __future__ import annotations

import csv
import json
import math
import os
import re
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
import yaml

from . import analytics, distributions
from .connection import Constant, ConnectionFunction, make_connection
from .errors import CalibrationError, ConfigurationError
from .graph_stats import HK_MAX, component_counts, connected_induced_count, degree_counts
from .marked_sampler import (
    Graph,
    build_graph_ordered,
    sample_binomial_configuration,
    sample_poisson_configuration,
)
from .prf import derive_key
from .statespace import ProbabilityMeasure, build_measure

_TAG_REPLICATION = 0x0E9D_0001
_TAG_BOOTSTRAP = 0x0E9D_0002

_STAT_RE = re.compile(r"^([DNH])(\d{1,2})$")

DEFAULT_TOLERANCES: dict[str, float] = {
    "dtv_poisson": 0.03,
    "cross_dtv": 0.05,
    "mean_sigmas": 3.0,
    "factorial_sigmas": 3.0,
    "counterexample_prob_err": 0.02,
    "counterexample_dtv_floor": 0.08,
    "stein_margin": 0.01,
    "bound_agreement_sigmas": 2.0,
    "normality_cdf_err": 0.05,
    "bootstrap_resamples": 200,
    "calibration": 1e-9,
}

SCENARIO_NAMES = (
    "rgg-poisson-limit",
    "counterexample",
    "edge-stein",
    "ustat",
    "normality",
    "sweep",
)


def parse_statistic(name: str) -> tuple[str, int]:
    """Validate a statistic name like D0 / N2 / H3 and return (kind, index)."""
    m = _STAT_RE.match(name)
    if not m:
        raise ConfigurationError(
            f"run.statistics: {name!r} is not a statistic name (expected D<j>, N<k> or H<k>)"
        )
    kind, index = m.group(1), int(m.group(2))
    if kind == "D" and index > analytics.DEGREE_MAX:
        raise ConfigurationError(
            f"run.statistics: degree statistics support j <= {analytics.DEGREE_MAX}, got {name}"
        )
    if kind == "N" and not 1 <= index <= analytics.COMPONENT_MAX:
        raise ConfigurationError(
            f"run.statistics: component statistics support 1 <= k <= "
            f"{analytics.COMPONENT_MAX}, got {name}"
        )
    if kind == "H" and not 2 <= index <= HK_MAX:
        raise ConfigurationError(
            f"run.statistics: clump statistics support 2 <= k <= {HK_MAX}, got {name}"
        )
    return kind, index


@dataclass
class ExperimentConfig:
    """A fully resolved experiment description."""

    measure: ProbabilityMeasure
    phi: ConnectionFunction
    process_kind: str
    size: float
    replications: int
    master_seed: int
    statistics: tuple[str, ...]
    tolerances: dict = field(default_factory=dict)
    scenario: Optional[dict] = None

    def tolerance(self, key: str) -> float:
        if key in self.tolerances:
            return self.tolerances[key]
        return DEFAULT_TOLERANCES[key]

    def resolved(self) -> dict:
        out = {
            "space": self.measure.describe(),
            "connection": self.phi.describe(),
            "process": {
                "kind": self.process_kind,
                ("intensity" if self.process_kind == "poisson" else "n"): self.size,
            },
            "run": {
                "replications": self.replications,
                "master_seed": self.master_seed,
                "statistics": list(self.statistics),
            },
            "tolerances": {**DEFAULT_TOLERANCES, **self.tolerances},
        }
        if self.scenario is not None:
            out["scenario"] = self.scenario
        return out


def parse_config(data: dict, path: str = "<config>") -> ExperimentConfig:
    """Build an ExperimentConfig from a parsed YAML mapping, failing fast."""
    if not isinstance(data, dict):
        raise ConfigurationError(f"{path}: config root must be a mapping")
    scenario = data.get("scenario")
    if scenario is not None:
        if not isinstance(scenario, dict) or "name" not in scenario:
            raise ConfigurationError(f"{path}: scenario section needs a name")
        if scenario["name"] not in SCENARIO_NAMES:
            raise ConfigurationError(
                f"{path}: unknown scenario {scenario['name']!r}; expected one of {SCENARIO_NAMES}"
            )
    tolerances = data.get("tolerances", {}) or {}
    unknown = set(tolerances) - set(DEFAULT_TOLERANCES)
    if unknown:
        raise ConfigurationError(f"{path}: unknown tolerance keys {sorted(unknown)}")

    run = data.get("run", {}) or {}
    replications = int(run.get("replications", 1000))
    if replications < 1:
        raise ConfigurationError(f"{path}: run.replications must be positive")
    master_seed = int(run.get("master_seed", 42))
    statistics = tuple(run.get("statistics", ["D0"]))
    for s in statistics:
        parse_statistic(s)
    if len(set(statistics)) != len(statistics):
        raise ConfigurationError(f"{path}: run.statistics contains duplicates")

    if scenario is not None and "space" not in data:
        # scenario defines its own setup; placeholders keep the type whole
        measure = build_measure("flat-torus", 2)
        phi = Constant(0.0)
        process_kind, size = "poisson", 1.0
    else:
        space = data.get("space")
        if not isinstance(space, dict) or "kind" not in space:
            raise ConfigurationError(f"{path}: space section needs at least a kind")
        space_params = {k: v for k, v in space.items() if k not in ("kind", "dimension", "density")}
        measure = build_measure(
            space["kind"],
            int(space.get("dimension", 1)),
            space.get("density", "uniform"),
            **space_params,
        )
        conn = data.get("connection")
        if not isinstance(conn, dict) or "family" not in conn:
            raise ConfigurationError(f"{path}: connection section needs a family")
        conn_params = {k: v for k, v in conn.items() if k != "family"}
        phi = make_connection(conn["family"], conn_params, measure)
        process = data.get("process", {}) or {}
        process_kind = process.get("kind", "poisson")
        if process_kind == "poisson":
            size = float(process.get("intensity", 1.0))
            if size <= 0:
                raise ConfigurationError(f"{path}: process.intensity must be positive")
        elif process_kind == "binomial":
            size = int(process.get("n", 1))
            if size < 1:
                raise ConfigurationError(f"{path}: process.n must be positive")
        else:
            raise ConfigurationError(
                f"{path}: process.kind must be poisson or binomial, got {process_kind!r}"
            )
    return ExperimentConfig(
        measure=measure,
        phi=phi,
        process_kind=process_kind,
        size=size,
        replications=replications,
        master_seed=master_seed,
        statistics=statistics,
        tolerances=dict(tolerances),
        scenario=dict(scenario) if scenario is not None else None,
    )


def load_config(path: str | Path) -> ExperimentConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = yaml.safe_load(fh)
    except OSError as err:
        raise ConfigurationError(f"{path}: cannot read config ({err})") from err
    except yaml.YAMLError as err:
        raise ConfigurationError(f"{path}: not valid YAML ({err})") from err
    return parse_config(data, str(path))


# ---------------------------------------------------------------------------
# Replication engine


@dataclass(frozen=True)
class ReplicationRecord:
    index: int
    seed: int
    vertices: int
    values: tuple[int, ...]


def compute_statistics(graph: Graph, statistics: Sequence[str]) -> tuple[int, ...]:
    """Evaluate the requested statistics on one graph, in config order."""
    parsed = [parse_statistic(s) for s in statistics]
    degrees = degree_counts(graph) if any(k == "D" for k, _ in parsed) else None
    components = component_counts(graph) if any(k == "N" for k, _ in parsed) else None
    values = []
    for kind, index in parsed:
        if kind == "D":
            values.append(degrees.count(index))
        elif kind == "N":
            values.append(components.count(index))
        else:
            values.append(connected_induced_count(graph, index))
    return tuple(values)


def replication_seed(master_seed: int, index: int) -> int:
    return int(derive_key(master_seed, _TAG_REPLICATION, index))


def realize_replication(config: ExperimentConfig, index: int) -> tuple[int, Graph]:
    """Sample one replication's configuration and build its graph."""
    seed = replication_seed(config.master_seed, index)
    if config.process_kind == "poisson":
        marked = sample_poisson_configuration(config.measure, config.size, seed)
    else:
        marked = sample_binomial_configuration(config.measure, int(config.size), seed)
    return seed, build_graph_ordered(marked, config.phi)


def run_replication(config: ExperimentConfig, index: int) -> ReplicationRecord:
    seed, graph = realize_replication(config, index)
    values = compute_statistics(graph, config.statistics)
    return ReplicationRecord(index, seed, graph.n_vertices, values)


def _run_chunk(args: tuple[ExperimentConfig, tuple[int, ...]]) -> list[ReplicationRecord]:
    config, indices = args
    return [run_replication(config, i) for i in indices]


def default_workers() -> int:
    return max(1, int(os.environ.get("IRG_THREADS", "1")))


@dataclass
class RunResult:
    config: ExperimentConfig
    records: list[ReplicationRecord]
    summary: dict

    def samples(self, statistic: str) -> np.ndarray:
        col = self.config.statistics.index(statistic)
        return np.array([r.values[col] for r in self.records], dtype=np.int64)


def run_experiment(
    config: ExperimentConfig,
    workers: Optional[int] = None,
    dump_graphs: Optional[str | Path] = None,
) -> RunResult:
    """Run all replications (optionally across processes) and summarize.

    The per-replication seeds depend only on (master_seed, index), and the
    records are ordered by index, so output is identical for any worker
    count.  With dump_graphs set, every replication's graph is written to
    that directory as an edge-list text file (this path runs serially).
    """
    workers = workers if workers is not None else default_workers()
    indices = list(range(config.replications))
    if dump_graphs is not None:
        out = Path(dump_graphs)
        out.mkdir(parents=True, exist_ok=True)
        records = []
        for i in indices:
            seed, graph = realize_replication(config, i)
            write_edge_dump(out / f"graph_{i:06d}.txt", graph)
            values = compute_statistics(graph, config.statistics)
            records.append(ReplicationRecord(i, seed, graph.n_vertices, values))
    elif workers <= 1:
        records = [run_replication(config, i) for i in indices]
    else:
        chunk = max(1, math.ceil(len(indices) / (workers * 8)))
        tasks = [
            (config, tuple(indices[a : a + chunk]))
            for a in range(0, len(indices), chunk)
        ]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(_run_chunk, tasks))
        records = [rec for part in chunks for rec in part]
    records.sort(key=lambda r: r.index)
    summary = summarize(config, records)
    return RunResult(config, records, summary)


# ---------------------------------------------------------------------------
# Aggregation


def analytic_target(config: ExperimentConfig, statistic: str) -> Optional[float]:
    """Closed-form expectation of a statistic, when one is declared.

    Only the Poisson process carries these targets; binomial runs are
    compared against their own empirical mean (and the coupled Poisson run).
    """
    if config.process_kind != "poisson":
        return None
    kind, index = parse_statistic(statistic)
    s, phi, measure = config.size, config.phi, config.measure
    profile = phi.mean_field_profile(measure)
    if kind == "D":
        if profile is None:
            return None
        return analytics.expected_degree_count(s, phi, measure, index).value
    if kind == "N":
        if index == 1 and profile is not None:
            return analytics.expected_degree_count(s, phi, measure, 0).value
        if isinstance(phi, Constant):
            return analytics.expected_k_components(s, phi, measure, index).value
        return None
    # clump counts
    if index == 2 and profile is not None:
        return analytics.expected_edges(s, phi, measure).value
    if isinstance(phi, Constant):
        return analytics.expected_connected_k(s, phi, measure, index).value
    return None


def _stat_summary(
    config: ExperimentConfig, statistic: str, samples: np.ndarray, stat_index: int
) -> dict:
    n = samples.size
    alpha_hat = float(samples.mean())
    mean_se = float(samples.std(ddof=1) / math.sqrt(n)) if n > 1 else math.inf
    alpha_analytic = analytic_target(config, statistic)
    target_alpha = alpha_analytic if alpha_analytic is not None else alpha_hat
    emp = distributions.empirical_law(samples)
    target_law = distributions.poisson_law(target_alpha)
    law_at_hat = distributions.poisson_law(alpha_hat)
    boot_rng = np.random.default_rng(
        int(derive_key(config.master_seed, _TAG_BOOTSTRAP, stat_index))
    )
    ci = distributions.bootstrap_tv_ci(
        samples,
        target_law,
        resamples=int(config.tolerance("bootstrap_resamples")),
        rng=boot_rng,
    )
    fm = {}
    for ell in (1, 2):
        value, se = distributions.factorial_moment(samples, ell)
        fm[str(ell)] = [value, se]
    normality = distributions.normality_diagnostic(samples, alpha_hat)
    return {
        "samples": n,
        "alpha_hat": alpha_hat,
        "alpha_hat_std_error": mean_se,
        "alpha_analytic": alpha_analytic,
        "pmf": emp.pmf.tolist(),
        "dtv_poisson": distributions.tv_distance(emp, target_law),
        "dtv_ci": {
            "lower": ci.lower,
            "upper": ci.upper,
            "resamples": ci.resamples,
            "level": ci.level,
        },
        "dtv_poisson_at_alpha_hat": distributions.tv_distance(emp, law_at_hat),
        "dw_poisson": distributions.wasserstein_distance(emp, target_law),
        "factorial_moments": fm,
        "normality": {
            f"{z:g}": [e, t]
            for z, e, t in zip(
                normality.z_points, normality.empirical_cdf, normality.targets
            )
        },
        "normality_degenerate": normality.degenerate,
    }


def summarize(config: ExperimentConfig, records: list[ReplicationRecord]) -> dict:
    stats = {}
    for i, name in enumerate(config.statistics):
        samples = np.array([r.values[i] for r in records], dtype=np.int64)
        stats[name] = _stat_summary(config, name, samples, i)
    return {
        "config": config.resolved(),
        "replications": len(records),
        "statistics": stats,
    }


# ---------------------------------------------------------------------------
# Sweep


@dataclass
class SweepResult:
    rows: list[dict]
    statistic: str


def sweep(
    config: ExperimentConfig,
    s_grid: Sequence[float],
    recalibrate: bool = True,
    target_alpha: float = 1.0,
    workers: Optional[int] = None,
) -> SweepResult:
    """Rerun the experiment over an ascending intensity grid.

    With recalibrate, the kernel knob is retuned at each grid point so the
    target expectation stays fixed while s grows.  A calibration failure
    marks its row FAILED and the sweep continues.
    """
    s_grid = [float(v) for v in s_grid]
    if any(b <= a for a, b in zip(s_grid, s_grid[1:])):
        raise ConfigurationError(f"sweep grid must be ascending, got {s_grid}")
    statistic = config.statistics[0]
    rows = []
    for s in s_grid:
        row: dict = {"s": float(s), "status": "OK"}
        phi = config.phi
        try:
            if recalibrate:
                cal = analytics.calibrate_parameter(
                    config.phi,
                    config.measure,
                    float(s),
                    target_alpha,
                    statistic,
                    tolerance=config.tolerance("calibration"),
                )
                phi = config.phi.with_knob(cal.value)
                row["knob"] = {cal.knob: cal.value}
                row["alpha_analytic"] = cal.achieved
            else:
                row["knob"] = None
                row["alpha_analytic"] = analytic_target(config, statistic)
        except CalibrationError as err:
            row["status"] = "FAILED"
            row["error"] = str(err)
            rows.append(row)
            continue
        point = ExperimentConfig(
            measure=config.measure,
            phi=phi,
            process_kind=config.process_kind,
            size=float(s) if config.process_kind == "poisson" else int(round(s)),
            replications=config.replications,
            master_seed=config.master_seed,
            statistics=config.statistics,
            tolerances=config.tolerances,
        )
        result = run_experiment(point, workers)
        stat = result.summary["statistics"][statistic]
        row["alpha_hat"] = stat["alpha_hat"]
        row["dtv"] = stat["dtv_poisson"]
        row["dtv_ci_upper"] = stat["dtv_ci"]["upper"]
        row["dw"] = stat["dw_poisson"]
        rows.append(row)
    return SweepResult(rows, statistic)


# ---------------------------------------------------------------------------
# Emission


def write_records_csv(path: str | Path, result: RunResult) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["replication", "seed", "vertices", *result.config.statistics])
        for rec in result.records:
            writer.writerow([rec.index, rec.seed, rec.vertices, *rec.values])


def write_records_jsonl(path: str | Path, result: RunResult) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rec in result.records:
            row = {
                "replication": rec.index,
                "seed": rec.seed,
                "vertices": rec.vertices,
            }
            row.update(zip(result.config.statistics, rec.values))
            fh.write(json.dumps(row) + "\n")


def write_edge_dump(path: str | Path, graph: Graph) -> None:
    """Plain-text graph dump: one `v <count>` line, then `e <i> <j>` lines."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"v {graph.n_vertices}\n")
        for i, j in graph.edges:
            fh.write(f"e {int(i)} {int(j)}\n")


def write_summary_json(path: str | Path, summary: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _write_curve(path: Path, pairs) -> Path:
    """Two-column `x y` text file, one curve per file."""
    with open(path, "w", encoding="utf-8") as fh:
        for x, y in pairs:
            fh.write(f"{float(x)!r} {float(y)!r}\n")
    return path


def write_pmf_plot_data(out_dir: str | Path, result: RunResult) -> list[Path]:
    """Per statistic: empirical and Poisson-target pmf curves as `k p` files."""
    out = []
    for name, stat in result.summary["statistics"].items():
        target = stat["alpha_analytic"]
        alpha = target if target is not None else stat["alpha_hat"]
        pmf = stat["pmf"]
        law = distributions.poisson_law(alpha)
        out.append(
            _write_curve(
                Path(out_dir) / f"{name}_pmf_empirical.dat", enumerate(pmf)
            )
        )
        out.append(
            _write_curve(
                Path(out_dir) / f"{name}_pmf_poisson.dat", enumerate(law.pmf)
            )
        )
    return out


def write_sweep_outputs(out_dir: str | Path, sweep_result: SweepResult) -> list[Path]:
    out_dir = Path(out_dir)
    csv_path = out_dir / "sweep.csv"
    fields = ["s", "status", "knob", "alpha_analytic", "alpha_hat", "dtv", "dtv_ci_upper", "dw"]
    with open(csv_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(fields)
        for row in sweep_result.rows:
            writer.writerow([_cell(row.get(f)) for f in fields])
    ok = [row for row in sweep_result.rows if row["status"] == "OK"]
    dtv_path = _write_curve(
        out_dir / "dtv_vs_s.dat", [(row["s"], row["dtv"]) for row in ok]
    )
    dw_path = _write_curve(
        out_dir / "dw_vs_s.dat", [(row["s"], row["dw"]) for row in ok]
    )
    return [csv_path, dtv_path, dw_path]


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, dict):
        return ";".join(f"{k}={v!r}" for k, v in value.items())
    if isinstance(value, float):
        return repr(value)
    return str(value)
