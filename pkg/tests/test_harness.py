"""Configuration parsing, run directories and plot data."""

from __future__ import annotations

import csv
import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from frontlab.errors import ConfigError
from frontlab.harness import (
    PLOT_KINDS,
    AnalysisConfig,
    ExperimentConfig,
    FieldConfig,
    InitialConfig,
    ProblemConfig,
    ReactionConfig,
    RunConfig,
    dump_config,
    emit_plot_data,
    load_config,
    load_trajectory,
    parse_config,
    run,
    tomllib,
)

SMALL = ExperimentConfig(problem=ProblemConfig(x_lo=-30.0, x_hi=30.0, dx=0.2, dt=0.04),
                         initial=InitialConfig(width=10.0, center=-10.0), run=RunConfig(T=10.0))
ANALYSED = ExperimentConfig(problem=ProblemConfig(x_lo=-30.0, x_hi=30.0, dx=0.2, dt=0.04),
                            initial=InitialConfig(width=10.0, center=-10.0), run=RunConfig(T=60.0),
                            analysis=AnalysisConfig(levels=(0.5, 0.1), log_window=(50.0, 60.0),
                                                    match_t=60.0, match_window=(10.0, 30.0)))


def _csv_rows(path):
    with open(path) as fh:
        return list(csv.reader(fh))


@pytest.fixture(scope="module")
def small_run(tmp_path_factory):
    d = tmp_path_factory.mktemp("small")
    return d, run(SMALL, d)


@pytest.fixture(scope="module")
def analysed_run(tmp_path_factory):
    d = tmp_path_factory.mktemp("analysed")
    return d, run(ANALYSED, d)


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------
def test_defaults_describe_the_reference_family():
    cfg = parse_config({})
    assert cfg.field.left == ReactionConfig("kpp", r=0.7)
    assert cfg.field.right == ReactionConfig("bistable", k=1.0, theta=0.3)
    assert cfg.field.L == 5.0 and cfg.analysis is None


def test_unknown_key_is_named():
    with pytest.raises(ConfigError, match="problem.bogus"):
        parse_config({"problem": {"bogus": 1}})
    with pytest.raises(ConfigError, match="field.left.rr"):
        parse_config({"field": {"left": {"kind": "kpp", "rr": 1.0}}})
    with pytest.raises(ConfigError, match="'colour'"):
        parse_config({"colour": "blue"})


def test_wrong_types_rejected():
    with pytest.raises(ConfigError, match="problem.dx"):
        parse_config({"problem": {"dx": "fine"}})
    with pytest.raises(ConfigError, match="run.track_every"):
        parse_config({"run": {"track_every": 1.5}})
    with pytest.raises(ConfigError, match="analysis.classify"):
        parse_config({"analysis": {"classify": 1}})
    with pytest.raises(ConfigError, match="must be a table"):
        parse_config({"problem": 3})


def test_integers_accepted_for_floats():
    assert parse_config({"problem": {"c": 1}}).problem.c == 1.0


def test_malformed_toml_is_a_config_error(tmp_path):
    p = tmp_path / "bad.toml"
    p.write_text("[problem\nc = 1\n")
    with pytest.raises(ConfigError):
        load_config(p)


finite = st.floats(-50.0, 50.0, allow_nan=False)
positive = st.floats(1e-3, 10.0)


@settings(max_examples=60, deadline=None)
@given(c=finite, dx=positive, T=positive, height=st.floats(0.0, 1.0), theta=st.floats(0.01, 0.99),
       with_analysis=st.booleans(), levels=st.lists(st.floats(0.01, 0.99), min_size=1, max_size=3),
       bc=st.sampled_from(["neumann", "dirichlet_farfield"]))
def test_config_round_trips(c, dx, T, height, theta, with_analysis, levels, bc):
    cfg = ExperimentConfig(
        field=FieldConfig(right=ReactionConfig("modified", k=2.0, theta=theta, eps=0.01)),
        problem=ProblemConfig(c=c, dx=dx, bc=bc),
        initial=InitialConfig(height=height),
        run=RunConfig(T=T),
        analysis=AnalysisConfig(levels=tuple(levels), fit_window=(1.0, 2.0)) if with_analysis else None,
    )
    text = dump_config(cfg)
    back = parse_config(tomllib.loads(text))
    assert back == cfg
    assert dump_config(back) == text


# ---------------------------------------------------------------------------
# run directories
# ---------------------------------------------------------------------------
def test_minimal_run_writes_snapshots_meta_and_manifest(small_run):
    d, manifest = small_run
    for name in ("config.toml", "snapshots.csv", "traces.csv", "diagnostics.csv", "meta.json",
                 "events.log", "manifest.json"):
        assert (d / name).exists(), name
    assert not (d / "fits.csv").exists()
    assert set(manifest.files) == {"config.toml", "snapshots.csv", "traces.csv", "diagnostics.csv",
                                   "meta.json", "events.log"}
    meta = json.loads((d / "meta.json").read_text())
    assert meta["final_time"] == pytest.approx(10.0)
    assert meta["problem"]["c"] == 0.0
    assert _csv_rows(d / "snapshots.csv")[0] == ["t", "x", "u"]
    assert _csv_rows(d / "traces.csv")[0] == ["t", "left_0.5", "right_0.5"]


def test_manifest_checksums_match_files(small_run):
    import hashlib

    d, manifest = small_run
    stored = json.loads((d / "manifest.json").read_text())
    for name, digest in stored["files"].items():
        assert hashlib.sha256((d / name).read_bytes()).hexdigest() == digest


def test_analysis_block_adds_fits_and_outcome(analysed_run):
    d, manifest = analysed_run
    assert "fits.csv" in manifest.files and "outcome.json" in manifest.files
    rows = _csv_rows(d / "fits.csv")
    assert rows[0] == ["quantity", "side", "level", "t1", "t2", "value", "spread", "n"]
    quantities = [r[0] for r in rows[1:]]
    assert quantities.count("speed") == 4
    assert {"logdelay_a", "logdelay_b", "logdelay_frozen_b", "profile_sup_error"} <= set(quantities)
    assert _csv_rows(d / "traces.csv")[0] == ["t", "left_0.5", "right_0.5", "left_0.1", "right_0.1"]
    outcome = json.loads((d / "outcome.json").read_text())
    assert outcome["kind"] in {"propagation", "blocking_right", "extinction", "undecided"}


def test_rerun_gives_identical_manifest(tmp_path, small_run):
    _, first = small_run
    second = run(SMALL, tmp_path)
    assert second.files == first.files
    assert second.config_digest == first.config_digest
    assert second.warnings == first.warnings


def test_trajectory_reloads_from_disk(small_run):
    from frontlab.harness import build_initial, build_problem
    from frontlab.solver import integrate

    d, _ = small_run
    traj = load_trajectory(d)
    direct = integrate(build_problem(SMALL), build_initial(SMALL.initial), SMALL.run.T,
                       snapshot_every=SMALL.run.snapshot_every, track=[(0.5, "left"), (0.5, "right")])
    assert np.array_equal(traj.times, direct.times)
    for a, b in zip(traj.snapshots, direct.snapshots):
        assert np.array_equal(a, b)
    assert np.array_equal(traj.origins, direct.origins)
    np.testing.assert_array_equal(traj.traces[(0.5, "left")].positions,
                                  direct.traces[(0.5, "left")].positions)


def test_directory_without_manifest_is_rejected(tmp_path, small_run):
    import shutil

    d, _ = small_run
    partial = tmp_path / "partial"
    shutil.copytree(d, partial)
    (partial / "manifest.json").unlink()
    with pytest.raises(ConfigError, match="manifest"):
        load_trajectory(partial)


def test_failed_run_leaves_error_log_and_no_manifest(tmp_path, small_run):
    import shutil

    d, _ = small_run
    target = tmp_path / "reused"
    shutil.copytree(d, target)
    bad = ExperimentConfig(field=FieldConfig(left=ReactionConfig("kpp")))
    with pytest.raises(ConfigError):
        run(bad, target)
    assert not (target / "manifest.json").exists()
    assert "needs 'r'" in (target / "error.log").read_text()


# ---------------------------------------------------------------------------
# plot data
# ---------------------------------------------------------------------------
def test_trace_plot_data_is_time_position_pairs(small_run):
    d, _ = small_run
    text = emit_plot_data(d, "trace", level=0.5, side="right")
    data = np.loadtxt(text.splitlines())
    assert data.shape[1] == 2
    assert np.all(np.diff(data[:, 0]) > 0)


def test_profile_overlay_is_x_u_phi_triples(analysed_run, tmp_path):
    d, _ = analysed_run
    out = tmp_path / "overlay.dat"
    text = emit_plot_data(d, "profile_overlay", out=out, window=(10.0, 30.0))
    assert out.read_text() == text
    data = np.loadtxt(text.splitlines())
    assert data.shape[1] == 3
    assert data[0, 0] >= 10.0 - 1e-9 and data[-1, 0] <= 30.0 + 1e-9
    assert np.all((data[:, 2] > 0) & (data[:, 2] < 1))


def test_spacetime_heat_has_one_block_per_snapshot(small_run):
    d, _ = small_run
    text = emit_plot_data(d, "spacetime_heat", every=2)
    traj = load_trajectory(d)
    assert text.count("\n\n") == math.ceil(traj.times.size / 2)
    data = np.loadtxt(text.splitlines())
    assert np.array_equal(np.unique(data[:, 0]), traj.times[::2])


def test_unknown_plot_kind_is_a_usage_error(small_run):
    d, _ = small_run
    assert "histogram" not in PLOT_KINDS
    with pytest.raises(ConfigError, match="unknown plot kind"):
        emit_plot_data(d, "histogram")
