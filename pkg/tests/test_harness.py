import json
import math

import numpy as np
import pytest

from irglab.errors import ConfigurationError
from irglab.harness import (
    DEFAULT_TOLERANCES,
    ExperimentConfig,
    analytic_target,
    load_config,
    parse_config,
    parse_statistic,
    replication_seed,
    run_experiment,
    sweep,
    write_pmf_plot_data,
    write_records_csv,
    write_records_jsonl,
    write_summary_json,
    write_sweep_outputs,
)


def base_config(**overrides):
    data = {
        "space": {"kind": "unit-cube", "dimension": 1},
        "connection": {"family": "constant", "p": 0.1},
        "process": {"kind": "poisson", "intensity": 5.0},
        "run": {"replications": 50, "master_seed": 7, "statistics": ["D0", "H2"]},
    }
    data.update(overrides)
    return data


# ---------------------------------------------------------------------------
# Statistic names


def test_parse_statistic_accepts_the_supported_families():
    assert parse_statistic("D0") == ("D", 0)
    assert parse_statistic("D16") == ("D", 16)
    assert parse_statistic("N1") == ("N", 1)
    assert parse_statistic("N5") == ("N", 5)
    assert parse_statistic("H2") == ("H", 2)
    assert parse_statistic("H5") == ("H", 5)


def test_parse_statistic_rejects_out_of_range_and_malformed_names():
    for bad in ("D17", "N0", "N6", "H1", "H6", "X3", "D", "D-1", "d0", "D0 "):
        with pytest.raises(ConfigurationError):
            parse_statistic(bad)


# ---------------------------------------------------------------------------
# Config parsing


def test_parse_config_happy_path():
    cfg = parse_config(base_config())
    assert cfg.process_kind == "poisson"
    assert cfg.size == 5.0
    assert cfg.statistics == ("D0", "H2")
    assert cfg.tolerance("dtv_poisson") == DEFAULT_TOLERANCES["dtv_poisson"]


def test_parse_config_rejects_non_mapping_root():
    with pytest.raises(ConfigurationError, match="root"):
        parse_config(["not", "a", "mapping"])
    with pytest.raises(ConfigurationError):
        parse_config(None)


def test_parse_config_requires_space_and_connection_sections():
    data = base_config()
    del data["space"]
    with pytest.raises(ConfigurationError, match="space"):
        parse_config(data)
    data = base_config()
    del data["connection"]
    with pytest.raises(ConfigurationError, match="connection"):
        parse_config(data)


def test_parse_config_rejects_bad_statistics():
    data = base_config(run={"replications": 10, "statistics": ["D0", "D17"]})
    with pytest.raises(ConfigurationError):
        parse_config(data)
    data = base_config(run={"replications": 10, "statistics": ["D0", "D0"]})
    with pytest.raises(ConfigurationError, match="duplicates"):
        parse_config(data)


def test_parse_config_rejects_unknown_tolerance_keys():
    data = base_config(tolerances={"dtv_poisson": 0.1, "made_up_knob": 1.0})
    with pytest.raises(ConfigurationError, match="made_up_knob"):
        parse_config(data)


def test_parse_config_rejects_bad_process():
    data = base_config(process={"kind": "negative-binomial"})
    with pytest.raises(ConfigurationError, match="process.kind"):
        parse_config(data)
    data = base_config(process={"kind": "poisson", "intensity": 0.0})
    with pytest.raises(ConfigurationError, match="intensity"):
        parse_config(data)
    data = base_config(process={"kind": "binomial", "n": 0})
    with pytest.raises(ConfigurationError, match="process.n"):
        parse_config(data)
    data = base_config(run={"replications": 0})
    with pytest.raises(ConfigurationError, match="replications"):
        parse_config(data)


def test_parse_config_reports_the_source_path():
    with pytest.raises(ConfigurationError, match="bad.yaml"):
        parse_config({"space": {}}, path="bad.yaml")


def test_parse_config_scenario_names_are_checked():
    cfg = parse_config({"scenario": {"name": "counterexample"}})
    assert cfg.scenario == {"name": "counterexample"}
    with pytest.raises(ConfigurationError, match="unknown scenario"):
        parse_config({"scenario": {"name": "nonesuch"}})
    with pytest.raises(ConfigurationError, match="name"):
        parse_config({"scenario": {}})


def test_load_config_round_trips_through_yaml(tmp_path):
    path = tmp_path / "exp.yaml"
    path.write_text(
        "space: {kind: flat-torus, dimension: 2}\n"
        "connection: {family: hard-disk, r: 0.1}\n"
        "process: {kind: binomial, n: 40}\n"
        "run: {replications: 12, master_seed: 3, statistics: [D0, N2]}\n"
    )
    cfg = load_config(path)
    assert cfg.process_kind == "binomial"
    assert cfg.size == 40
    assert cfg.statistics == ("D0", "N2")
    assert cfg.master_seed == 3


# ---------------------------------------------------------------------------
# Replication engine


def test_replication_seeds_are_distinct_and_stable():
    seeds = [replication_seed(42, i) for i in range(200)]
    assert len(set(seeds)) == 200
    assert seeds == [replication_seed(42, i) for i in range(200)]
    assert replication_seed(43, 0) != seeds[0]


def test_empty_kernel_leaves_every_point_isolated():
    # with phi == 0 no edges form, so D0 counts all points and the
    # analytic target is the intensity itself
    cfg = parse_config(
        base_config(
            connection={"family": "constant", "p": 0.0},
            run={"replications": 4000, "master_seed": 11, "statistics": ["D0", "H2"]},
        )
    )
    result = run_experiment(cfg)
    stat = result.summary["statistics"]["D0"]
    assert stat["alpha_analytic"] == pytest.approx(5.0, abs=1e-9)
    se = stat["alpha_hat_std_error"]
    assert abs(stat["alpha_hat"] - 5.0) < 3.0 * se
    assert result.samples("H2").max() == 0


def test_run_result_matches_graph_recount():
    cfg = parse_config(base_config(run={"replications": 30, "master_seed": 5, "statistics": ["D0", "D1", "H2", "N1"]}))
    result = run_experiment(cfg)
    for rec in result.records:
        assert rec.vertices >= 0
        d0, d1, h2, n1 = rec.values
        assert n1 == d0
        assert d0 + d1 <= rec.vertices


def test_same_seed_reruns_are_identical(tmp_path):
    cfg = parse_config(base_config())
    a = tmp_path / "a.jsonl"
    b = tmp_path / "b.jsonl"
    write_records_jsonl(a, run_experiment(cfg))
    write_records_jsonl(b, run_experiment(cfg))
    assert a.read_bytes() == b.read_bytes()


def test_worker_count_does_not_change_output(tmp_path):
    cfg = parse_config(base_config(run={"replications": 40, "master_seed": 9, "statistics": ["D0", "H2"]}))
    serial = tmp_path / "serial.csv"
    parallel = tmp_path / "parallel.csv"
    write_records_csv(serial, run_experiment(cfg, workers=1))
    write_records_csv(parallel, run_experiment(cfg, workers=2))
    assert serial.read_bytes() == parallel.read_bytes()


def test_csv_layout(tmp_path):
    cfg = parse_config(base_config(run={"replications": 3, "master_seed": 1, "statistics": ["D0", "H2"]}))
    path = tmp_path / "records.csv"
    write_records_csv(path, run_experiment(cfg))
    lines = path.read_text().splitlines()
    assert lines[0] == "replication,seed,vertices,D0,H2"
    assert len(lines) == 4
    first = lines[1].split(",")
    assert first[0] == "0"
    assert all(cell.lstrip("-").isdigit() for cell in first)


def test_jsonl_and_csv_agree(tmp_path):
    cfg = parse_config(base_config(run={"replications": 5, "master_seed": 2, "statistics": ["D0", "H2"]}))
    result = run_experiment(cfg)
    csv_path = tmp_path / "records.csv"
    jsonl_path = tmp_path / "records.jsonl"
    write_records_csv(csv_path, result)
    write_records_jsonl(jsonl_path, result)
    csv_lines = csv_path.read_text().splitlines()
    header = csv_lines[0].split(",")
    for csv_line, json_line in zip(csv_lines[1:], jsonl_path.read_text().splitlines()):
        row = dict(zip(header, (int(c) for c in csv_line.split(","))))
        assert row == json.loads(json_line)


def test_dump_graphs_writes_edge_lists(tmp_path):
    cfg = parse_config(base_config(run={"replications": 3, "master_seed": 4, "statistics": ["D0"]}))
    out = tmp_path / "graphs"
    result = run_experiment(cfg, dump_graphs=out)
    files = sorted(out.iterdir())
    assert [f.name for f in files] == [f"graph_{i:06d}.txt" for i in range(3)]
    for f, rec in zip(files, result.records):
        lines = f.read_text().splitlines()
        assert lines[0] == f"v {rec.vertices}"
        for line in lines[1:]:
            tag, i, j = line.split()
            assert tag == "e"
            assert 0 <= int(i) < int(j) < rec.vertices


# ---------------------------------------------------------------------------
# Aggregation


def test_analytic_target_rules():
    cfg = parse_config(base_config())
    # constant kernel: every statistic has a closed form
    assert analytic_target(cfg, "D0") == pytest.approx(5.0 * math.exp(-0.5))
    assert analytic_target(cfg, "H2") == pytest.approx(0.5 * 25 * 0.1)
    assert analytic_target(cfg, "N1") == pytest.approx(5.0 * math.exp(-0.5))
    assert analytic_target(cfg, "N2") is not None
    assert analytic_target(cfg, "H3") is not None

    binom = parse_config(base_config(process={"kind": "binomial", "n": 5}))
    assert analytic_target(binom, "D0") is None

    # profile kernels keep degree/edge targets but not higher clump counts
    disk = parse_config(
        base_config(
            space={"kind": "flat-torus", "dimension": 1},
            connection={"family": "hard-disk", "r": 0.05},
        )
    )
    assert analytic_target(disk, "D0") == pytest.approx(5.0 * math.exp(-0.5))
    assert analytic_target(disk, "H2") == pytest.approx(0.5 * 25 * 0.1)
    assert analytic_target(disk, "H3") is None
    assert analytic_target(disk, "N2") is None


def test_summary_shape_and_json_round_trip(tmp_path):
    cfg = parse_config(base_config(run={"replications": 60, "master_seed": 13, "statistics": ["D0", "H2"]}))
    result = run_experiment(cfg)
    summary = result.summary
    stat = summary["statistics"]["D0"]
    assert stat["samples"] == 60
    assert np.isclose(sum(stat["pmf"]), 1.0)
    assert 0.0 <= stat["dtv_ci"]["lower"] <= stat["dtv_ci"]["upper"] <= 1.0
    assert stat["dtv_ci"]["resamples"] == DEFAULT_TOLERANCES["bootstrap_resamples"]
    assert set(stat["factorial_moments"]) == {"1", "2"}
    est, se = stat["factorial_moments"]["1"]
    assert est == pytest.approx(stat["alpha_hat"])
    assert se == pytest.approx(stat["alpha_hat_std_error"])
    assert set(stat["normality"]) == {"-1", "0", "1"}
    for emp, target in stat["normality"].values():
        assert 0.0 <= emp <= 1.0
        assert 0.0 <= target <= 1.0

    path = tmp_path / "summary.json"
    write_summary_json(path, summary)
    assert json.loads(path.read_text()) == summary


def test_bootstrap_ci_is_seeded_by_the_master_seed():
    cfg = parse_config(base_config(run={"replications": 80, "master_seed": 21, "statistics": ["D0"]}))
    first = run_experiment(cfg).summary["statistics"]["D0"]["dtv_ci"]
    second = run_experiment(cfg).summary["statistics"]["D0"]["dtv_ci"]
    assert first == second


def test_pmf_plot_files_are_two_column(tmp_path):
    cfg = parse_config(base_config(run={"replications": 40, "master_seed": 3, "statistics": ["D0"]}))
    files = write_pmf_plot_data(tmp_path, run_experiment(cfg))
    names = sorted(f.name for f in files)
    assert names == ["D0_pmf_empirical.dat", "D0_pmf_poisson.dat"]
    for f in files:
        rows = [line.split() for line in f.read_text().splitlines()]
        assert rows
        assert all(len(r) == 2 for r in rows)
        ks = [float(r[0]) for r in rows]
        assert ks == [float(k) for k in range(len(ks))]
        ps = [float(r[1]) for r in rows]
        assert all(0.0 <= p <= 1.0 for p in ps)


# ---------------------------------------------------------------------------
# Sweep


def sweep_config(replications=120):
    data = {
        "space": {"kind": "flat-torus", "dimension": 1},
        "connection": {"family": "hard-disk", "r": 0.1},
        "process": {"kind": "poisson", "intensity": 4.0},
        "run": {"replications": replications, "master_seed": 17, "statistics": ["D0"]},
    }
    return parse_config(data)


def test_sweep_requires_ascending_grid():
    cfg = sweep_config()
    with pytest.raises(ConfigurationError, match="ascending"):
        sweep(cfg, [4.0, 4.0])
    with pytest.raises(ConfigurationError, match="ascending"):
        sweep(cfg, [8.0, 4.0])


def test_sweep_empty_grid_gives_empty_table(tmp_path):
    result = sweep(sweep_config(), [])
    assert result.rows == []
    files = write_sweep_outputs(tmp_path, result)
    table = files[0].read_text().splitlines()
    assert len(table) == 1
    assert table[0].startswith("s,status,")


def test_sweep_recalibrates_and_continues_past_failures(tmp_path):
    # E[D0] = s exp(-2 r s) on the circle caps out below 1 when s < 1,
    # so the first grid point cannot be calibrated and must be FAILED
    cfg = sweep_config(replications=80)
    result = sweep(cfg, [0.5, 4.0, 8.0], recalibrate=True, target_alpha=1.0)
    status = [row["status"] for row in result.rows]
    assert status == ["FAILED", "OK", "OK"]
    assert "error" in result.rows[0]
    for row in result.rows[1:]:
        assert row["alpha_analytic"] == pytest.approx(1.0, abs=1e-6)
        assert set(row["knob"]) == {"r"}
        assert row["dtv"] <= row["dtv_ci_upper"] + 1e-12

    files = write_sweep_outputs(tmp_path, result)
    table = files[0].read_text().splitlines()
    assert len(table) == 4
    assert table[1].split(",")[1] == "FAILED"
    for curve in files[1:]:
        rows = [line.split() for line in curve.read_text().splitlines()]
        assert [float(r[0]) for r in rows] == [4.0, 8.0]
