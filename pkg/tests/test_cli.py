"""Config parsing, CLI commands, persistence determinism and plot emission."""

import json
from pathlib import Path

import pytest

from marlsched.cli import main
from marlsched.experiment import (
    EPISODE_CSV_COLUMNS,
    ExperimentConfig,
    read_episode_csv,
    run_scheduler,
    write_episode_csv,
)
from marlsched.plots import PlotInputError, emit_all, improvement_curve_svg


class TestExperimentConfig:
    def test_defaults(self):
        cfg = ExperimentConfig()
        assert cfg.n_nodes == 100 and cfg.n_tasks == 1000
        assert cfg.episodes == 30 and cfg.final_window == 10
        assert cfg.master_seed == 42

    def test_from_flat_with_dotted_keys(self):
        cfg = ExperimentConfig.from_flat({
            "n_nodes": 10, "episodes": 5, "final_window": 2,
            "schedulers": ["random", "drl"], "sim.dt": 2.5, "hyper.gamma": 0.9,
        })
        assert cfg.n_nodes == 10 and cfg.schedulers == ("random", "drl")
        assert cfg.sim.dt == 2.5 and cfg.hyper.gamma == 0.9

    def test_unknown_key_rejected(self):
        with pytest.raises(ValueError):
            ExperimentConfig.from_flat({"n_episodes": 5})

    def test_window_must_fit(self):
        with pytest.raises(ValueError):
            ExperimentConfig(episodes=3, final_window=5)

    def test_from_file(self, tmp_path):
        path = tmp_path / "config.json"
        path.write_text(json.dumps({"master_seed": 7, "n_tasks": 50}))
        cfg = ExperimentConfig.from_file(path)
        assert cfg.master_seed == 7 and cfg.n_tasks == 50


class TestEpisodeCsv:
    def test_roundtrip_and_columns(self, tmp_path):
        cfg = ExperimentConfig(n_nodes=6, n_tasks=20, episodes=2, final_window=1,
                               output_dir=str(tmp_path))
        results = run_scheduler(cfg, "random")
        rows = read_episode_csv(tmp_path / "random.csv")
        assert len(rows) == 2
        assert list(rows[0].keys()) == EPISODE_CSV_COLUMNS
        assert rows[0]["scheduler"] == "random"
        # re-serializing parsed results is stable
        out2 = tmp_path / "again.csv"
        write_episode_csv(out2, results)
        assert out2.read_bytes() == (tmp_path / "random.csv").read_bytes()


class TestCliRun:
    def test_run_deterministic(self, tmp_path):
        args = ["run", "--scheduler", "random", "--episodes", "3", "--seed", "42",
                "--nodes", "8", "--tasks", "30"]
        out1, out2 = tmp_path / "a", tmp_path / "b"
        assert main(args + ["--out", str(out1)]) == 0
        assert main(args + ["--out", str(out2)]) == 0
        assert (out1 / "random.csv").read_bytes() == (out2 / "random.csv").read_bytes()
        assert len(read_episode_csv(out1 / "random.csv")) == 3

    def test_unknown_scheduler_exits_2(self, tmp_path, capsys):
        rc = main(["run", "--scheduler", "sjf", "--out", str(tmp_path)])
        assert rc == 2
        assert "unknown scheduler" in capsys.readouterr().err

    def test_bad_config_file_exits_2(self, tmp_path, capsys):
        bad = tmp_path / "cfg.json"
        bad.write_text(json.dumps({"bogus_key": 1}))
        assert main(["run", "--config", str(bad), "--out", str(tmp_path)]) == 2

    def test_trace_file_emitted(self, tmp_path):
        rc = main(["run", "--scheduler", "minmin", "--episodes", "1", "--seed", "1",
                   "--nodes", "6", "--tasks", "15", "--out", str(tmp_path), "--trace"])
        assert rc == 0
        trace = (tmp_path / "minmin_trace.jsonl").read_text().splitlines()
        assert trace and all("time" in json.loads(line) for line in trace)


@pytest.fixture(scope="module")
def compare_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("compare")
    cfg = tmp_path_factory.mktemp("cfgdir") / "config.json"
    cfg.write_text(json.dumps({
        "n_nodes": 8, "n_tasks": 40, "episodes": 3, "final_window": 2,
    }))
    rc = main(["compare", "--config", str(cfg), "--seed", "42", "--out", str(out)])
    assert rc == 0
    return out


class TestCliCompare:
    def test_outputs_present(self, compare_dir):
        for fname in ("random.csv", "wrr.csv", "minmin.csv", "drl.csv",
                      "comparison.csv", "report.txt", "drl_checkpoint.npz"):
            assert (compare_dir / fname).exists(), fname

    def test_report_contents(self, compare_dir):
        report = (compare_dir / "report.txt").read_text()
        for name in ("random", "wrr", "minmin", "drl"):
            assert name in report
        assert "Welch" in report and "ms/decision" in report

    def test_comparison_rows(self, compare_dir):
        rows = read_episode_csv(compare_dir / "comparison.csv")
        assert [r["scheduler"] for r in rows] == ["random", "wrr", "minmin", "drl"]
        baseline_rows = [r for r in rows if r["scheduler"] != "drl"]
        assert all(r["p_atct_vs_drl"] for r in baseline_rows)


class TestCliPlot:
    def test_all_plots_emitted(self, compare_dir):
        rc = main(["plot", str(compare_dir)])
        assert rc == 0
        for fname in ("learning_curve.svg", "comparison.svg", "improvement.svg"):
            content = (compare_dir / fname).read_text()
            assert content.startswith("<svg")

    def test_bar_chart_labels_schedulers(self, compare_dir):
        svg = (compare_dir / "comparison.svg").read_text()
        for name in ("random", "wrr", "minmin", "drl"):
            assert f">{name}</text>" in svg

    def test_missing_input_partial_failure(self, compare_dir, tmp_path, capsys):
        partial = tmp_path / "partial"
        partial.mkdir()
        for name in ("random.csv", "wrr.csv", "minmin.csv"):
            (partial / name).write_bytes((compare_dir / name).read_bytes())
        rc = main(["plot", str(partial)])
        assert rc == 1
        err = capsys.readouterr().err
        assert "drl.csv" in err    # the failing plot names the missing file
        assert (partial / "learning_curve.svg").exists()
        assert not (partial / "improvement.svg").exists()

    def test_improvement_plot_error_names_file(self, tmp_path):
        with pytest.raises(PlotInputError, match="drl.csv"):
            improvement_curve_svg(tmp_path, tmp_path / "x.svg")

    def test_emit_all_reports_per_plot(self, tmp_path):
        outcomes = emit_all(tmp_path, ("random", "drl"), 2)
        assert set(outcomes) == {"learning_curve.svg", "comparison.svg", "improvement.svg"}
        assert all(v is not None for v in outcomes.values())
