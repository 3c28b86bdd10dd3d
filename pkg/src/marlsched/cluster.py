"""Heterogeneous node population: three capacity tiers and the linear power model."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Sequence

from .rng import RngStream

HIGH, MEDIUM, LOW = "High", "Medium", "Low"


@dataclass(frozen=True)
class NodeSpec:
    """Static node capacity and power coefficients."""

    id: int
    cpu_capacity: float  # cores
    mem_capacity: float  # GB
    p_idle: float        # watts at zero load
    p_dyn: float         # watts per unit utilization
    tier: str


@dataclass(frozen=True)
class TierConfig:
    fraction: float
    cpu_range: tuple[float, float]
    mem_range: tuple[float, float]
    p_idle_range: tuple[float, float]
    p_dyn_range: tuple[float, float]


DEFAULT_TIERS = {
    HIGH: TierConfig(0.20, (24, 32), (96, 128), (120, 180), (250, 400)),
    MEDIUM: TierConfig(0.50, (8, 16), (32, 64), (60, 100), (120, 200)),
    LOW: TierConfig(0.30, (2, 8), (8, 32), (20, 60), (40, 120)),
}

# Normalization ceilings (max over tier ranges), used for observation features.
MAX_CPU_CAPACITY = 32.0
MAX_MEM_CAPACITY = 128.0
MAX_P_IDLE = 180.0
MAX_P_DYN = 400.0


def _uniform_in(s: RngStream, lo: float, hi: float) -> float:
    return lo + (hi - lo) * s.uniform()


def generate_cluster(s: RngStream, n: int, tiers: dict[str, TierConfig] | None = None) -> list[NodeSpec]:
    """Draw ``n`` node specs: High nodes first, then Medium, then Low.

    Rounding remainders go to the Medium tier.  CPU capacities are integer
    core counts; memory and power coefficients are real-valued.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    tiers = tiers or DEFAULT_TIERS
    n_high = round(tiers[HIGH].fraction * n)
    n_low = round(tiers[LOW].fraction * n)
    n_medium = n - n_high - n_low

    nodes = []
    for tier_name, count in ((HIGH, n_high), (MEDIUM, n_medium), (LOW, n_low)):
        cfg = tiers[tier_name]
        for _ in range(count):
            # Integer core counts: uniform over the integers in range, inclusive.
            lo, hi = cfg.cpu_range
            cpu = float(int(lo) + int(s.uniform() * (int(hi) - int(lo) + 1)))
            cpu = min(cpu, float(int(hi)))
            nodes.append(
                NodeSpec(
                    id=len(nodes),
                    cpu_capacity=cpu,
                    mem_capacity=_uniform_in(s, *cfg.mem_range),
                    p_idle=_uniform_in(s, *cfg.p_idle_range),
                    p_dyn=_uniform_in(s, *cfg.p_dyn_range),
                    tier=tier_name,
                )
            )
    return nodes


def instantaneous_power(spec: NodeSpec, utilization: float) -> float:
    """Linear power model: idle floor plus utilization-proportional term."""
    if not 0.0 <= utilization <= 1.0:
        raise ValueError(f"utilization must be in [0, 1], got {utilization}")
    return spec.p_idle + spec.p_dyn * utilization


def step_energy(spec: NodeSpec, aggregate_cpu_in_use: float, dt: float) -> float:
    """Energy in joules consumed over one step at constant load."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    if not 0.0 <= aggregate_cpu_in_use <= spec.cpu_capacity:
        raise ValueError(
            f"cpu in use {aggregate_cpu_in_use} outside [0, {spec.cpu_capacity}] on node {spec.id}"
        )
    return (spec.p_idle + spec.p_dyn * (aggregate_cpu_in_use / spec.cpu_capacity)) * dt


CLUSTER_CSV_COLUMNS = ["id", "tier", "cpu", "mem", "p_idle", "p_dyn"]


def cluster_to_csv(nodes: Sequence[NodeSpec], path) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(CLUSTER_CSV_COLUMNS)
        for nd in nodes:
            w.writerow([nd.id, nd.tier, repr(nd.cpu_capacity), repr(nd.mem_capacity), repr(nd.p_idle), repr(nd.p_dyn)])
