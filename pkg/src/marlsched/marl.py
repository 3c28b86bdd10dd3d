"""Decentralized multi-agent actor-critic scheduler.

Each node runs its own tiny feedforward actor-critic (hand-written numpy
forward and backward passes), decisions combine the learned policy with
priority/urgency and load heuristics, and learning uses TD-error-prioritized
replay with plain gradient steps and a decaying learning rate.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .rng import RngStream, derive_stream
from .schedulers import Scheduler, SchedulerDecision
from .simenv import SimState, StepReport, build_observation, feasible_nodes
from .workload import Task
from .cluster import MAX_CPU_CAPACITY, MAX_MEM_CAPACITY


@dataclass
class Hyperparams:
    obs_dim: int = 50
    hidden: int = 128
    n_actions: int = 100
    learning_rate: float = 0.001
    lr_decay: float = 0.9995
    gamma: float = 0.99
    replay_capacity: int = 10_000
    batch_size: int = 32
    per_epsilon: float = 0.01
    per_exponent: float = 0.6
    explore_epsilon_start: float = 0.3
    explore_epsilon_decay: float = 0.995
    explore_epsilon_min: float = 0.01
    # cap on the global gradient norm per update; None disables clipping.
    # Step rewards reach the hundreds, so raw TD errors blow up plain SGD.
    grad_clip_norm: float | None = 10.0
    # urgency score coefficients
    urgency_class: float = 0.4
    urgency_slack: float = 0.3
    urgency_resource: float = 0.3
    # assignment score weights
    w_pi: float = 0.25
    w_load: float = 0.30
    w_mem: float = 0.20
    w_compat: float = 0.15
    w_prio: float = 0.10
    # reward shaping constants
    sla_plus: float = 15.0
    sla_minus: float = 20.0
    compl_base: float = 100.0
    compl_slope: float = 0.5
    energy_coef: float = 0.3
    balance_coef: float = 200.0


@dataclass
class AgentParams:
    W1: np.ndarray   # (hidden, obs_dim)
    b1: np.ndarray   # (hidden,)
    W2: np.ndarray   # (n_actions, hidden)
    b2: np.ndarray   # (n_actions,)
    Wv: np.ndarray   # (hidden,)
    bv: float
    current_lr: float

    @property
    def n_params(self) -> int:
        return self.W1.size + self.b1.size + self.W2.size + self.b2.size + self.Wv.size + 1


def expected_param_count(obs_dim: int, hidden: int, n_actions: int) -> int:
    return obs_dim * hidden + hidden + hidden * n_actions + n_actions + hidden + 1


def init_agent(s: RngStream, h: Hyperparams) -> AgentParams:
    """Scaled-uniform weight init (limit sqrt(2/fan_in)), zero biases."""

    def draw(shape, fan_in):
        limit = np.sqrt(2.0 / fan_in)
        return (2.0 * s.uniform_array(int(np.prod(shape))).reshape(shape) - 1.0) * limit

    return AgentParams(
        W1=draw((h.hidden, h.obs_dim), h.obs_dim),
        b1=np.zeros(h.hidden),
        W2=draw((h.n_actions, h.hidden), h.hidden),
        b2=np.zeros(h.n_actions),
        Wv=draw((h.hidden,), h.hidden),
        bv=0.0,
        current_lr=h.learning_rate,
    )


def forward(params: AgentParams, obs: np.ndarray):
    """Policy distribution, value estimate and the hidden activation cache."""
    obs = np.asarray(obs, dtype=float)
    if obs.shape != (params.W1.shape[1],):
        raise ValueError(f"observation length {obs.shape} != {params.W1.shape[1]}")
    hidden = np.maximum(params.W1 @ obs + params.b1, 0.0)
    logits = params.W2 @ hidden + params.b2
    logits = logits - logits.max()
    exp = np.exp(logits)
    policy = exp / exp.sum()
    value = float(params.Wv @ hidden + params.bv)
    if not (np.all(np.isfinite(policy)) and np.isfinite(value)):
        raise FloatingPointError("non-finite network output")
    return policy, value, hidden


def priority_score(task: Task, now: float, h: Hyperparams) -> float:
    """Urgency score ordering which pending task gets placed first."""
    if now > task.deadline:
        raise ValueError("expired task must be dropped before scoring")
    slack = (task.deadline - now) / (task.deadline - task.arrival)
    resource = min(max((task.cpu / MAX_CPU_CAPACITY + task.mem / MAX_MEM_CAPACITY) / 2.0, 0.0), 1.0)
    return h.urgency_class * (3 - task.priority) + h.urgency_slack * slack + h.urgency_resource * resource


def assignment_score(
    policy_value_for_node: float,
    utilization: float,
    mem_fraction: float,
    task: Task,
    cpu_capacity: float,
    h: Hyperparams,
) -> float:
    """Hybrid per-(task, node) score: learned preference plus load, memory
    headroom, size compatibility and priority terms."""
    compat = min(max(1.0 - abs(task.cpu / cpu_capacity - 0.5), 0.0), 1.0)
    return (
        h.w_pi * policy_value_for_node
        + h.w_load * (1.0 - utilization)
        + h.w_mem * (1.0 - mem_fraction)
        + h.w_compat * compat
        + h.w_prio * task.priority
    )


def select_assignments(
    state: SimState,
    pending: Sequence[Task],
    self_probs: np.ndarray,
    s: RngStream,
    h: Hyperparams,
    explore_epsilon: float,
) -> list[SchedulerDecision]:
    """Place pending tasks in descending urgency order.

    ``self_probs[i]`` is agent i's policy probability at its own node index.
    Capacity bookkeeping for nodes chosen earlier in the call shifts later
    scores; with ``explore_epsilon == 0`` no randomness is consumed.
    """
    order = sorted(pending, key=lambda t: (-priority_score(t, state.time, h), t.id))
    util = {n.spec.id: n.utilization for n in state.nodes}
    mem_frac = {n.spec.id: n.mem_in_use / n.spec.mem_capacity for n in state.nodes}
    decisions = []
    for task in order:
        feas = feasible_nodes(state, task)
        if not feas:
            decisions.append(SchedulerDecision(task.id, None))
            continue
        if explore_epsilon > 0.0 and s.uniform() < explore_epsilon:
            u = s.uniform()
            chosen = feas[min(int(u * len(feas)), len(feas) - 1)]
        else:
            chosen, best = None, None
            for nid in feas:
                score = assignment_score(
                    self_probs[nid], util[nid], mem_frac[nid], task,
                    state.nodes[nid].spec.cpu_capacity, h,
                )
                if best is None or score > best:
                    chosen, best = nid, score
        spec = state.nodes[chosen].spec
        util[chosen] += task.cpu / spec.cpu_capacity
        mem_frac[chosen] += task.mem / spec.mem_capacity
        decisions.append(SchedulerDecision(task.id, chosen))
    return decisions


def compute_step_reward(report: StepReport, state: SimState, h: Hyperparams) -> float:
    """Shared global step reward: SLA, completion-speed, energy and balance terms."""
    r = 0.0
    for c in report.completions:
        if c.met_sla:
            r += h.sla_plus * (4 - c.priority)
        else:
            r -= h.sla_minus * (4 - c.priority)
        r += max(0.0, h.compl_base - h.compl_slope * c.completion_time)
    for tid in report.dropped:
        r -= h.sla_minus * (4 - state.tasks[tid].priority)
    r -= h.energy_coef * (report.energy_joules / 3.6e6)
    r -= h.balance_coef * report.util_variance
    return r


@dataclass
class Transition:
    agent_id: int
    obs: np.ndarray
    action: int
    reward: float
    next_obs: np.ndarray
    terminal: bool
    priority: float = 0.0


def td_error(params: AgentParams, tr: Transition, gamma: float) -> float:
    """delta = r + gamma * V(o') * (not terminal) - V(o)."""
    _, v, _ = forward(params, tr.obs)
    if tr.terminal:
        return tr.reward - v
    _, v_next, _ = forward(params, tr.next_obs)
    return tr.reward + gamma * v_next - v


class ReplayBuffer:
    """Ring buffer with TD-error-proportional sampling (exponent 0.6)."""

    def __init__(self, capacity: int, per_epsilon: float, per_exponent: float):
        self.capacity = capacity
        self.per_epsilon = per_epsilon
        self.per_exponent = per_exponent
        self._items: list[Transition] = []
        self._next = 0

    def __len__(self):
        return len(self._items)

    def add(self, tr: Transition, delta: float) -> None:
        tr.priority = abs(delta) + self.per_epsilon
        if len(self._items) < self.capacity:
            self._items.append(tr)
        else:
            self._items[self._next] = tr
            self._next = (self._next + 1) % self.capacity

    def sample(self, batch_size: int, s: RngStream) -> list[Transition]:
        if not self._items:
            raise RuntimeError("cannot sample from an empty replay buffer")
        weights = np.array([t.priority for t in self._items]) ** self.per_exponent
        cum = np.cumsum(weights / weights.sum())
        draws = s.uniform_array(batch_size)
        idx = np.minimum(np.searchsorted(cum, draws, side="right"), len(self._items) - 1)
        return [self._items[i] for i in idx]


def apply_update(params: AgentParams, batch: Sequence[Transition], gamma: float,
                 grad_clip_norm: float | None = None) -> None:
    """One averaged semi-gradient step: policy ascent on log-prob times
    advantage, value descent on squared TD error; then decay the rate."""
    if not batch:
        raise ValueError("batch must be nonempty")
    obs = np.stack([t.obs for t in batch])
    nxt = np.stack([t.next_obs for t in batch])
    actions = np.array([t.action for t in batch])
    rewards = np.array([t.reward for t in batch])
    alive = np.array([0.0 if t.terminal else 1.0 for t in batch])
    n = len(batch)

    h_pre = obs @ params.W1.T + params.b1
    hid = np.maximum(h_pre, 0.0)
    logits = hid @ params.W2.T + params.b2
    logits -= logits.max(axis=1, keepdims=True)
    exp = np.exp(logits)
    policy = exp / exp.sum(axis=1, keepdims=True)
    values = hid @ params.Wv + params.bv

    hid_next = np.maximum(nxt @ params.W1.T + params.b1, 0.0)
    values_next = hid_next @ params.Wv + params.bv
    delta = rewards + gamma * values_next * alive - values

    # actor: d(-log pi_a * delta)/d logits
    g_logits = policy * delta[:, None]
    g_logits[np.arange(n), actions] -= delta
    # critic: d(0.5 * (v - target)^2)/d v with the target held constant
    g_value = -delta

    d_w2 = g_logits.T @ hid / n
    d_b2 = g_logits.mean(axis=0)
    d_wv = (g_value[:, None] * hid).mean(axis=0)
    d_bv = g_value.mean()
    d_hid = g_logits @ params.W2 + g_value[:, None] * params.Wv[None, :]
    d_hpre = d_hid * (h_pre > 0)
    d_w1 = d_hpre.T @ obs / n
    d_b1 = d_hpre.mean(axis=0)

    grads = (d_w1, d_b1, d_w2, d_b2, d_wv)
    for g in grads:
        if not np.all(np.isfinite(g)):
            raise FloatingPointError("non-finite gradient")
    if grad_clip_norm is not None:
        norm = np.sqrt(sum(float(np.sum(g * g)) for g in grads) + d_bv * d_bv)
        if norm > grad_clip_norm:
            scale = grad_clip_norm / norm
            d_w1, d_b1, d_w2, d_b2, d_wv = (g * scale for g in grads)
            d_bv *= scale

    lr = params.current_lr
    params.W1 -= lr * d_w1
    params.b1 -= lr * d_b1
    params.W2 -= lr * d_w2
    params.b2 -= lr * d_b2
    params.Wv -= lr * d_wv
    params.bv -= lr * d_bv
    params.current_lr = lr * 0.9995


def decay_explore(epsilon: float, h: Hyperparams | None = None) -> float:
    h = h or Hyperparams()
    return max(epsilon * h.explore_epsilon_decay, h.explore_epsilon_min)


def save_checkpoint(path, agents: Sequence[AgentParams], h: Hyperparams, episode: int) -> None:
    """All agent matrices plus a shape/lr header, parameter-count validated on load."""
    np.savez_compressed(
        path,
        header=np.array([h.obs_dim, h.hidden, h.n_actions, episode], dtype=np.int64),
        lrs=np.array([a.current_lr for a in agents]),
        W1=np.stack([a.W1 for a in agents]),
        b1=np.stack([a.b1 for a in agents]),
        W2=np.stack([a.W2 for a in agents]),
        b2=np.stack([a.b2 for a in agents]),
        Wv=np.stack([a.Wv for a in agents]),
        bv=np.array([a.bv for a in agents]),
    )


def load_checkpoint(path) -> tuple[list[AgentParams], dict]:
    data = np.load(path)
    obs_dim, hidden, n_actions, episode = (int(x) for x in data["header"])
    agents = []
    for i in range(data["W1"].shape[0]):
        a = AgentParams(
            W1=data["W1"][i], b1=data["b1"][i], W2=data["W2"][i],
            b2=data["b2"][i], Wv=data["Wv"][i], bv=float(data["bv"][i]),
            current_lr=float(data["lrs"][i]),
        )
        expected = expected_param_count(obs_dim, hidden, n_actions)
        if a.n_params != expected:
            raise ValueError(f"checkpoint agent {i} has {a.n_params} parameters, expected {expected}")
        agents.append(a)
    return agents, {"obs_dim": obs_dim, "hidden": hidden, "n_actions": n_actions, "episode": episode}


class DrlScheduler(Scheduler):
    """Scheduler interface around the agent population.

    Parameters persist across episodes (learning); per-episode randomness
    comes from the stream handed to ``reset``.
    """

    name = "drl"

    def __init__(self, master_seed: int, n_nodes: int, h: Hyperparams | None = None, train: bool = True):
        self.h = h or Hyperparams()
        if self.h.n_actions != n_nodes:
            self.h = replace(self.h, n_actions=n_nodes)
        self.n_nodes = n_nodes
        self.train = train
        self.agents = [
            init_agent(derive_stream(master_seed, f"agent-init-{i}"), self.h) for i in range(n_nodes)
        ]
        self.buffers = [
            ReplayBuffer(self.h.replay_capacity, self.h.per_epsilon, self.h.per_exponent)
            for _ in range(n_nodes)
        ]
        self.explore_epsilon = self.h.explore_epsilon_start
        self.episodes_seen = 0
        self._stream: RngStream | None = None
        self._current: list[tuple[int, np.ndarray, int]] = []   # this step's (agent, obs, action)
        self._awaiting: list[Transition] = []                   # reward set, next_obs pending

    def reset(self, state, stream=None):
        self._stream = stream
        self._current = []
        self._awaiting = []

    def _train_eligible(self):
        for agent, buf in zip(self.agents, self.buffers):
            if len(buf) >= self.h.batch_size:
                batch = buf.sample(self.h.batch_size, self._stream)
                apply_update(agent, batch, self.h.gamma, self.h.grad_clip_norm)

    def assign(self, state, pending):
        if self.train:
            self._train_eligible()
        if not pending and not self._awaiting:
            return []
        observations = [build_observation(state, i) for i in range(self.n_nodes)]
        for tr in self._awaiting:
            tr.next_obs = observations[tr.agent_id]
            self.buffers[tr.agent_id].add(tr, td_error(self.agents[tr.agent_id], tr, self.h.gamma))
        self._awaiting = []
        if not pending:
            return []
        self_probs = np.empty(self.n_nodes)
        for i, agent in enumerate(self.agents):
            policy, _, _ = forward(agent, observations[i])
            self_probs[i] = policy[i]
        eps = self.explore_epsilon if self.train else 0.0
        decisions = select_assignments(state, pending, self_probs, self._stream, self.h, eps)
        for d in decisions:
            if d.node_id is not None:
                self._current.append((d.node_id, observations[d.node_id], d.node_id))
        return decisions

    def after_advance(self, state, report):
        if not self._current:
            return
        reward = compute_step_reward(report, state, self.h)
        for agent_id, obs, action in self._current:
            self._awaiting.append(Transition(agent_id, obs, action, reward, obs, False))
        self._current = []

    def end_episode(self, state):
        zero = np.zeros(self.h.obs_dim)
        for tr in self._awaiting:
            tr.next_obs = zero
            tr.terminal = True
            self.buffers[tr.agent_id].add(tr, td_error(self.agents[tr.agent_id], tr, self.h.gamma))
        self._awaiting = []
        self._current = []
        if self.train:
            self.explore_epsilon = decay_explore(self.explore_epsilon, self.h)
        self.episodes_seen += 1
