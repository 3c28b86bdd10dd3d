"""Experiment harness: episode driver, the 30-episode protocol and persistence."""

from __future__ import annotations

import csv
import json
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Sequence

from .cluster import generate_cluster
from .marl import DrlScheduler, Hyperparams, save_checkpoint
from .metrics import EpisodeMetrics, aggregate_final, summarize_episode
from .rng import derive_stream
from .schedulers import BASELINES, Scheduler
from .simenv import SimConfig, advance, enqueue_assignment, init_episode
from .stats import bonferroni, confidence_interval_95, welch_t_test
from .workload import DEFAULT_ARRIVAL_RATE, DEFAULT_PRIORITY_MIX, generate_workload

ALL_SCHEDULERS = ("random", "wrr", "minmin", "drl")

EPISODE_CSV_COLUMNS = [
    "episode", "scheduler", "atct_s", "energy_kwh", "sla_rate",
    "throughput_per_1000s", "completed", "load_balance_var", "objective_j",
]


@dataclass
class ExperimentConfig:
    master_seed: int = 42
    n_nodes: int = 100
    n_tasks: int = 1000
    episodes: int = 30
    final_window: int = 10
    schedulers: tuple[str, ...] = ALL_SCHEDULERS
    arrival_rate: float = DEFAULT_ARRIVAL_RATE
    priority_mix: tuple[float, float, float] = DEFAULT_PRIORITY_MIX
    sim: SimConfig = field(default_factory=SimConfig)
    hyper: Hyperparams = field(default_factory=Hyperparams)
    output_dir: str = "results"
    trace: bool = False

    def __post_init__(self):
        if not self.schedulers:
            raise ValueError("schedulers must be nonempty")
        if not self.episodes >= self.final_window >= 1:
            raise ValueError("need episodes >= final_window >= 1")

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        """Flat JSON with dotted keys for the nested sim/hyper sections."""
        with open(path) as f:
            raw = json.load(f)
        return cls.from_flat(raw)

    @classmethod
    def from_flat(cls, raw: dict) -> "ExperimentConfig":
        cfg = cls()
        top = {f.name for f in fields(cls)}
        updates, sim_updates, hyper_updates = {}, {}, {}
        for key, value in raw.items():
            if key.startswith("sim."):
                sim_updates[key[4:]] = value
            elif key.startswith("hyper."):
                hyper_updates[key[6:]] = value
            elif key in top:
                if key in ("schedulers", "priority_mix"):
                    value = tuple(value)
                updates[key] = value
            else:
                raise ValueError(f"unknown config key: {key}")
        cfg = replace(cfg, **updates)
        if sim_updates:
            cfg = replace(cfg, sim=replace(cfg.sim, **sim_updates))
        if hyper_updates:
            cfg = replace(cfg, hyper=replace(cfg.hyper, **hyper_updates))
        return cfg


@dataclass
class EpisodeResult:
    episode: int
    scheduler: str
    metrics: EpisodeMetrics
    mean_decision_ms: float


def build_episode_inputs(config: ExperimentConfig, episode: int):
    """Regenerate cluster and workload for one episode from (seed, episode)."""
    cluster = generate_cluster(
        derive_stream(config.master_seed, f"cluster-{episode}"), config.n_nodes
    )
    tasks = generate_workload(
        derive_stream(config.master_seed, f"workload-{episode}"),
        config.n_tasks,
        config.arrival_rate,
        config.priority_mix,
    )
    return tasks, cluster


def run_episode(scheduler: Scheduler, config: ExperimentConfig, episode: int,
                trace_file=None) -> EpisodeResult:
    """One episode to completion or horizon; returns metrics and decision latency."""
    tasks, cluster = build_episode_inputs(config, episode)
    state = init_episode(config.sim, tasks, cluster)
    state.trace_file = trace_file
    stream = derive_stream(config.master_seed, f"sched-{scheduler.name}-{episode}")
    scheduler.reset(state, stream)

    decision_seconds = 0.0
    decision_count = 0
    dt = config.sim.dt
    while True:
        pending = [state.tasks[tid] for tid in state.pending]
        t0 = time.perf_counter()
        decisions = scheduler.assign(state, pending)
        decision_seconds += time.perf_counter() - t0
        decision_count += len(decisions)
        for d in decisions:
            if d.node_id is not None:
                enqueue_assignment(state, d.task_id, d.node_id)
        report = advance(state, dt)
        scheduler.after_advance(state, report)
        if state.time >= config.sim.max_time or state.all_resolved():
            break
    scheduler.end_episode(state)
    metrics = summarize_episode(state)
    latency_ms = 1000.0 * decision_seconds / decision_count if decision_count else 0.0
    return EpisodeResult(episode, scheduler.name, metrics, latency_ms)


def make_scheduler(name: str, config: ExperimentConfig) -> Scheduler:
    if name in BASELINES:
        return BASELINES[name]()
    if name == "drl":
        return DrlScheduler(config.master_seed, config.n_nodes, config.hyper)
    raise ValueError(f"unknown scheduler: {name!r}")


def _baseline_worker(args):
    flat, name, episode = args
    config = ExperimentConfig.from_flat(flat)
    return run_episode(make_scheduler(name, config), config, episode)


def _worker_count() -> int:
    try:
        return max(1, int(os.environ.get("MARL_SCHED_THREADS", "1")))
    except ValueError:
        return 1


def _flatten_config(config: ExperimentConfig) -> dict:
    return {
        "master_seed": config.master_seed,
        "n_nodes": config.n_nodes,
        "n_tasks": config.n_tasks,
        "episodes": config.episodes,
        "final_window": config.final_window,
        "schedulers": list(config.schedulers),
        "arrival_rate": config.arrival_rate,
        "priority_mix": list(config.priority_mix),
        "output_dir": config.output_dir,
        "sim.dt": config.sim.dt,
        "sim.max_time": config.sim.max_time,
    }


def run_scheduler(config: ExperimentConfig, name: str) -> list[EpisodeResult]:
    """The full per-scheduler protocol: ``episodes`` episodes, CSV persisted.

    DRL agents learn across episodes (strictly sequential) and a checkpoint is
    written after the final episode; baselines may run in parallel workers.
    """
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    workers = _worker_count()

    if name != "drl" and workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            flat = _flatten_config(config)
            results = list(pool.map(_baseline_worker, [(flat, name, ep) for ep in range(config.episodes)]))
    else:
        scheduler = make_scheduler(name, config)
        results = []
        trace_file = open(out / f"{name}_trace.jsonl", "w") if config.trace else None
        try:
            for ep in range(config.episodes):
                results.append(run_episode(scheduler, config, ep, trace_file))
        finally:
            if trace_file:
                trace_file.close()
        if name == "drl":
            save_checkpoint(out / "drl_checkpoint.npz", scheduler.agents, scheduler.h,
                            config.episodes - 1)

    write_episode_csv(out / f"{name}.csv", results)
    return results


def write_episode_csv(path, results: Sequence[EpisodeResult]) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(EPISODE_CSV_COLUMNS)
        for r in results:
            m = r.metrics
            w.writerow([
                r.episode, r.scheduler,
                "" if m.atct is None else f"{m.atct:.6f}",
                f"{m.energy_kwh:.6f}", f"{m.sla_rate:.6f}", f"{m.throughput:.6f}",
                m.completed, f"{m.mean_step_util_variance:.8f}", f"{m.objective_j:.8f}",
            ])


def read_episode_csv(path) -> list[dict]:
    with open(path, newline="") as f:
        return list(csv.DictReader(f))


METRIC_FIELDS = ("atct", "energy_kwh", "sla_rate", "throughput")


def compare(config: ExperimentConfig) -> dict:
    """Run every configured scheduler and build the cross-scheduler report."""
    all_results = {name: run_scheduler(config, name) for name in config.schedulers}
    report = build_comparison(config, all_results)
    out = Path(config.output_dir)
    write_comparison_csv(out / "comparison.csv", report)
    with open(out / "report.txt", "w") as f:
        f.write(format_report(report))
    return report


def _final_values(results, metric, k):
    vals = [getattr(r.metrics, metric) for r in results][-k:]
    return [v for v in vals if v is not None]


def build_comparison(config: ExperimentConfig, all_results: dict[str, list[EpisodeResult]]) -> dict:
    k = config.final_window
    rows = {}
    for name, results in all_results.items():
        row = {"scheduler": name}
        for metric in METRIC_FIELDS:
            mean, std = aggregate_final([getattr(r.metrics, metric) for r in results], k)
            row[f"{metric}_mean"] = mean
            row[f"{metric}_std"] = std
        completed_mean, _ = aggregate_final([r.metrics.completed for r in results], k)
        row["completed_mean"] = completed_mean
        row["energy_per_completed_kwh"] = (
            row["energy_kwh_mean"] / completed_mean if completed_mean else float("inf")
        )
        row["mean_decision_ms"] = sum(r.mean_decision_ms for r in results) / len(results)
        rows[name] = row

    tests = {}
    improvements = {}
    if "drl" in all_results:
        n_baselines = sum(1 for n in all_results if n != "drl")
        drl_atct = _final_values(all_results["drl"], "atct", k)
        for name, results in all_results.items():
            if name == "drl":
                continue
            base_atct = _final_values(results, "atct", k)
            t, p = welch_t_test(drl_atct, base_atct)
            tests[name] = {"t": t, "p": p, "p_bonferroni": bonferroni(p, n_baselines)}
            # per-episode relative ATCT improvement of drl over the baseline
            rel = [(b - d) / b for d, b in zip(drl_atct, base_atct) if b]
            if len(rel) >= 2:
                improvements[name] = {
                    "mean": sum(rel) / len(rel),
                    "ci95": confidence_interval_95(rel),
                }
    return {"config": config, "rows": rows, "tests_atct_vs_drl": tests,
            "improvement_over": improvements}


COMPARISON_CSV_COLUMNS = [
    "scheduler", "atct_s_mean", "atct_s_std", "energy_kwh_mean", "energy_kwh_std",
    "sla_rate_mean", "sla_rate_std", "throughput_mean", "throughput_std",
    "completed_mean", "energy_per_completed_kwh", "t_atct_vs_drl", "p_atct_vs_drl",
    "p_bonferroni",
]


def write_comparison_csv(path, report: dict) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(COMPARISON_CSV_COLUMNS)
        for name, row in report["rows"].items():
            test = report["tests_atct_vs_drl"].get(name)
            w.writerow([
                name,
                f"{row['atct_mean']:.6f}", f"{row['atct_std']:.6f}",
                f"{row['energy_kwh_mean']:.6f}", f"{row['energy_kwh_std']:.6f}",
                f"{row['sla_rate_mean']:.6f}", f"{row['sla_rate_std']:.6f}",
                f"{row['throughput_mean']:.6f}", f"{row['throughput_std']:.6f}",
                f"{row['completed_mean']:.2f}", f"{row['energy_per_completed_kwh']:.6f}",
                "" if test is None else f"{test['t']:.6f}",
                "" if test is None else f"{test['p']:.6g}",
                "" if test is None else f"{test['p_bonferroni']:.6g}",
            ])


def format_report(report: dict) -> str:
    lines = []
    k = report["config"].final_window
    lines.append(f"Scheduler comparison (final {k} episodes)")
    lines.append("")
    header = (f"{'Scheduler':<10} {'ATCT (s)':>12} {'Energy (kWh)':>14} {'SLA':>8} "
              f"{'Thr/1000s':>10} {'Completed':>10} {'kWh/task':>10} {'ms/decision':>12}")
    lines.append(header)
    lines.append("-" * len(header))
    for name, row in report["rows"].items():
        lines.append(
            f"{name:<10} {row['atct_mean']:>7.2f}±{row['atct_std']:<4.2f} "
            f"{row['energy_kwh_mean']:>8.3f}±{row['energy_kwh_std']:<5.3f} "
            f"{row['sla_rate_mean']:>8.3f} {row['throughput_mean']:>10.2f} "
            f"{row['completed_mean']:>10.1f} {row['energy_per_completed_kwh']:>10.5f} "
            f"{row['mean_decision_ms']:>12.3f}"
        )
    if report["tests_atct_vs_drl"]:
        lines.append("")
        lines.append("ATCT tests vs drl (Welch, two-sided; Bonferroni-corrected alongside raw):")
        for name, test in report["tests_atct_vs_drl"].items():
            lines.append(f"  drl vs {name:<8} t={test['t']:+.3f}  p={test['p']:.4g}  "
                         f"p_bonf={test['p_bonferroni']:.4g}")
    if report["improvement_over"]:
        lines.append("")
        lines.append("Relative ATCT improvement of drl (95% CI over paired episodes):")
        for name, imp in report["improvement_over"].items():
            lo, hi = imp["ci95"]
            lines.append(f"  over {name:<8} {imp['mean']*100:+.1f}%  CI [{lo*100:+.1f}%, {hi*100:+.1f}%]")
    return "\n".join(lines) + "\n"
