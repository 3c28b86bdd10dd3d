"""Discrete-time simulation engine.

Tracks task queues, admission, execution, completion, SLA accounting and
energy accrual on a fixed 5-second grid, and builds the 50-dimensional
partial observation each node agent sees.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .cluster import (
    MAX_CPU_CAPACITY,
    MAX_MEM_CAPACITY,
    MAX_P_DYN,
    MAX_P_IDLE,
    NodeSpec,
    step_energy,
)
from .workload import Task

OBS_DIM = 50
TASK_FEATURES = 5
# Largest duration rendered distinguishably in the log-scaled feature.
DURATION_LOG_CEILING = 1000.0


@dataclass
class SimConfig:
    dt: float = 5.0
    max_time: float = 10_000.0
    queue_feature_window: int = 8
    neighbor_count: int = 4
    obs_dim: int = OBS_DIM

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.queue_feature_window * TASK_FEATURES + 7 + 3 != self.obs_dim:
            raise ValueError("observation layout does not fill obs_dim")


@dataclass
class RunningTask:
    task_id: int
    node_id: int
    start_time: float
    finish_time: float


@dataclass
class NodeState:
    spec: NodeSpec
    running: list[RunningTask] = field(default_factory=list)
    queue: list[int] = field(default_factory=list)  # assigned, waiting for admission (FIFO)
    energy_joules: float = 0.0
    cpu_in_use: float = 0.0
    mem_in_use: float = 0.0

    @property
    def utilization(self) -> float:
        return self.cpu_in_use / self.spec.cpu_capacity


@dataclass(frozen=True)
class CompletionRecord:
    task_id: int
    arrival: float
    finish_time: float
    completion_time: float
    met_sla: bool
    priority: int
    node_id: int


@dataclass
class StepReport:
    """What happened during one advance."""

    arrived: list[int]
    completions: list[CompletionRecord]
    dropped: list[int]
    energy_joules: float
    node_energy_joules: dict[int, float]
    util_variance: float


@dataclass
class SimState:
    config: SimConfig
    tasks: dict[int, Task]
    nodes: list[NodeState]
    time: float = 0.0
    pending: list[int] = field(default_factory=list)  # arrived, unassigned, by arrival order
    completions: list[CompletionRecord] = field(default_factory=list)
    dropped: list[int] = field(default_factory=list)
    util_variance_sum: float = 0.0
    steps: int = 0
    _arrival_order: list[int] = field(default_factory=list)
    _next_arrival_idx: int = 0
    trace_file: object = None

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    def queued_or_running(self) -> int:
        return sum(len(n.queue) + len(n.running) for n in self.nodes)

    def all_resolved(self) -> bool:
        return (
            self._next_arrival_idx == len(self._arrival_order)
            and not self.pending
            and self.queued_or_running() == 0
        )

    def mean_util_variance(self) -> float:
        return self.util_variance_sum / self.steps if self.steps else 0.0


def init_episode(config: SimConfig, tasks: Sequence[Task], nodes: Sequence[NodeSpec]) -> SimState:
    """Fresh state at time 0: everything idle, all tasks not yet arrived."""
    if not nodes:
        raise ValueError("node list must be nonempty")
    arrivals = [t.arrival for t in tasks]
    if any(b < a for a, b in zip(arrivals, arrivals[1:])):
        raise ValueError("tasks must be sorted by arrival")
    state = SimState(
        config=config,
        tasks={t.id: t for t in tasks},
        nodes=[NodeState(spec=n) for n in nodes],
        _arrival_order=[t.id for t in tasks],
    )
    _reveal_arrivals(state, 0.0)
    return state


def feasible_nodes(state: SimState, task: Task) -> list[int]:
    """Nodes whose static capacity can ever hold the task; load is ignored."""
    return [
        n.spec.id
        for n in state.nodes
        if task.cpu <= n.spec.cpu_capacity and task.mem <= n.spec.mem_capacity
    ]


def _try_admit(state: SimState, node: NodeState, now: float) -> list[RunningTask]:
    """FIFO admission scan on one node at time ``now``."""
    started = []
    while node.queue:
        task = state.tasks[node.queue[0]]
        if (
            node.cpu_in_use + task.cpu <= node.spec.cpu_capacity
            and node.mem_in_use + task.mem <= node.spec.mem_capacity
        ):
            node.queue.pop(0)
            rt = RunningTask(task.id, node.spec.id, now, now + task.duration)
            node.running.append(rt)
            node.cpu_in_use += task.cpu
            node.mem_in_use += task.mem
            started.append(rt)
        else:
            break
    return started


def enqueue_assignment(state: SimState, task_id: int, node_id: int) -> None:
    """Realize a scheduling decision: queue the task, admitting it now if it fits."""
    if task_id not in state.tasks:
        raise ValueError(f"unknown task {task_id}")
    if task_id not in state.pending:
        raise ValueError(f"task {task_id} is not pending")
    task = state.tasks[task_id]
    node = state.nodes[node_id]
    if task.cpu > node.spec.cpu_capacity or task.mem > node.spec.mem_capacity:
        raise ValueError(f"node {node_id} is statically infeasible for task {task_id}")
    state.pending.remove(task_id)
    node.queue.append(task_id)
    _try_admit(state, node, state.time)


def _reveal_arrivals(state: SimState, now: float) -> list[int]:
    arrived = []
    order = state._arrival_order
    while state._next_arrival_idx < len(order):
        tid = order[state._next_arrival_idx]
        if state.tasks[tid].arrival <= now:
            state.pending.append(tid)
            arrived.append(tid)
            state._next_arrival_idx += 1
        else:
            break
    return arrived


def advance(state: SimState, dt: float) -> StepReport:
    """Advance the clock by one step; sub-step order is fixed.

    (1) complete, (2) admit queued FIFO, (3) reveal arrivals, (4) drop expired
    pending tasks, (5) accrue energy on post-admission load, (6) tick time.
    """
    if dt != state.config.dt:
        raise ValueError("dt must equal config.dt")
    new_time = state.time + dt

    # 1. completions
    completions = []
    for node in state.nodes:
        done = sorted((rt for rt in node.running if rt.finish_time <= new_time),
                      key=lambda rt: (rt.finish_time, rt.task_id))
        for rt in done:
            node.running.remove(rt)
            task = state.tasks[rt.task_id]
            node.cpu_in_use -= task.cpu
            node.mem_in_use -= task.mem
            completions.append(
                CompletionRecord(
                    task_id=task.id,
                    arrival=task.arrival,
                    finish_time=rt.finish_time,
                    completion_time=rt.finish_time - task.arrival,
                    met_sla=rt.finish_time <= task.deadline,
                    priority=task.priority,
                    node_id=node.spec.id,
                )
            )
        # guard against float drift when a node fully empties
        if not node.running:
            node.cpu_in_use = 0.0
            node.mem_in_use = 0.0

    # 2. admission (queued tasks start at the step boundary)
    for node in state.nodes:
        _try_admit(state, node, new_time)

    # 3. arrivals
    arrived = _reveal_arrivals(state, new_time)

    # 4. deadline drops for never-assigned tasks
    dropped = [tid for tid in state.pending if state.tasks[tid].deadline < new_time]
    if dropped:
        drop_set = set(dropped)
        state.pending = [tid for tid in state.pending if tid not in drop_set]
        state.dropped.extend(dropped)

    # 5. energy on post-admission utilization
    node_energy = {}
    utils = np.empty(len(state.nodes))
    for i, node in enumerate(state.nodes):
        e = step_energy(node.spec, node.cpu_in_use, dt)
        node.energy_joules += e
        node_energy[node.spec.id] = e
        utils[i] = node.utilization
    util_variance = float(np.var(utils))
    state.util_variance_sum += util_variance
    state.steps += 1

    # 6. tick
    state.time = new_time
    state.completions.extend(completions)

    report = StepReport(
        arrived=arrived,
        completions=completions,
        dropped=dropped,
        energy_joules=sum(node_energy.values()),
        node_energy_joules=node_energy,
        util_variance=util_variance,
    )
    if state.trace_file is not None:
        state.trace_file.write(json.dumps({
            "time": state.time,
            "completed": [c.task_id for c in completions],
            "dropped": dropped,
            "arrived": arrived,
            "util": [round(n.utilization, 6) for n in state.nodes],
        }) + "\n")
    return report


def total_energy(state: SimState) -> float:
    """Accumulated cluster energy in kWh."""
    return sum(n.energy_joules for n in state.nodes) / 3.6e6


def build_observation(state: SimState, node_id: int) -> np.ndarray:
    """The 50-dimensional local view of one node agent, all features in [0, 1].

    Layout: 0-6 own-node features, 7-9 ring-neighbor utilization aggregates,
    10-49 a window of the 8 oldest pending tasks x 5 features, zero-padded.
    """
    cfg = state.config
    node = state.nodes[node_id]
    obs = np.zeros(cfg.obs_dim)
    spec = node.spec
    obs[0] = node.utilization
    obs[1] = node.mem_in_use / spec.mem_capacity
    obs[2] = min(len(node.queue), 50) / 50.0
    obs[3] = spec.cpu_capacity / MAX_CPU_CAPACITY
    obs[4] = spec.mem_capacity / MAX_MEM_CAPACITY
    obs[5] = spec.p_idle / MAX_P_IDLE
    obs[6] = spec.p_dyn / MAX_P_DYN

    n = len(state.nodes)
    half = cfg.neighbor_count // 2
    neighbor_ids = []
    for off in range(1, half + 1):
        neighbor_ids.append((node_id - off) % n)
        neighbor_ids.append((node_id + off) % n)
    neighbor_ids = [i for i in dict.fromkeys(neighbor_ids) if i != node_id]
    if neighbor_ids:
        nb = np.array([state.nodes[i].utilization for i in neighbor_ids])
        obs[7] = nb.mean()
        obs[8] = nb.min()
        obs[9] = nb.max()

    now = state.time
    for k, tid in enumerate(state.pending[: cfg.queue_feature_window]):
        t = state.tasks[tid]
        base = 10 + k * TASK_FEATURES
        obs[base] = t.cpu / MAX_CPU_CAPACITY
        obs[base + 1] = t.mem / MAX_MEM_CAPACITY
        obs[base + 2] = (3 - t.priority) / 3.0
        obs[base + 3] = (t.deadline - now) / (t.deadline - t.arrival)
        obs[base + 4] = min(np.log(t.duration / 5.0) / np.log(DURATION_LOG_CEILING), 1.0)
    return np.clip(obs, 0.0, 1.0)
