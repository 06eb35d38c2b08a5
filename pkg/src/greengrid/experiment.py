"""HGreen versus baseline energy comparison on one scenario."""

from __future__ import annotations

import math
import statistics
from dataclasses import dataclass, field

from .hgreen import BaselinePolicy, baseline_map, hga_map
from .model import Catalog, GreenConfig, Schedule, Workflow
from .powergate import GatingPolicy
from .simulator import SimulationResult, compare, simulate


@dataclass(frozen=True)
class Run:
    label: str
    schedule: Schedule
    result: SimulationResult

    @property
    def total_j(self) -> float:
        return self.result.ledger.total_j


@dataclass
class Comparison:
    hga: Run
    random_runs: list[Run] = field(default_factory=list)
    others: list[Run] = field(default_factory=list)

    def per_seed_savings(self) -> list[float]:
        return [compare(self.hga.result.ledger, r.result.ledger).savings_fraction for r in self.random_runs]

    def headline_savings(self) -> float:
        """1 - E_hga / mean(E_random) over every random seed."""
        mean_random = math.fsum(r.total_j for r in self.random_runs) / len(self.random_runs)
        return 1.0 - self.hga.total_j / mean_random

    def summary(self) -> dict[str, float]:
        per_seed = self.per_seed_savings()
        return {
            "headline": self.headline_savings(),
            "mean": statistics.fmean(per_seed),
            "min": min(per_seed),
            "max": max(per_seed),
        }

    def runs(self) -> list[Run]:
        return [self.hga, *self.random_runs, *self.others]


def run_comparison(
    workflow: Workflow,
    catalog: Catalog,
    config: GreenConfig,
    policy: GatingPolicy,
    seeds: range | list[int] = range(20),
) -> Comparison:
    def run(label: str, schedule: Schedule) -> Run:
        return Run(label, schedule, simulate(workflow, catalog, schedule, policy))

    if not len(seeds):
        raise ValueError("need at least one random baseline seed")
    out = Comparison(run("hga", hga_map(workflow, catalog, config)))
    for seed in seeds:
        sched = baseline_map(workflow, catalog, BaselinePolicy.RANDOM_SEEDED, seed)
        out.random_runs.append(run(f"random_s{seed}", sched))
    for policy_kind in (BaselinePolicy.FIFO_FIRST_SITE, BaselinePolicy.MAKESPAN_GREEDY):
        out.others.append(run(policy_kind.value, baseline_map(workflow, catalog, policy_kind)))
    return out
