"""HGreen list scheduler and the baselines it is measured against.

HGreen works in three phases:

1. analysis     - give every task an energy-waste weight;
2. prioritizing - rank tasks by decreasing weight (the ET list);
3. mapping      - take the heaviest ready task, rank every site by its
                  energy-efficiency score for that task (the ER list) and
                  assign the task to the head of that list.

Ready means every parent has already been mapped. The ER list is rebuilt
for each task and sites are ranked by their efficiency score. All ties
break by id so schedules are reproducible.
"""

from __future__ import annotations

import enum
import random
from collections import deque
from dataclasses import dataclass

from .model import (
    AnalyzerVariant,
    Catalog,
    FormulaVariant,
    GreenConfig,
    ModelError,
    RankedList,
    Schedule,
    Site,
    Task,
    Workflow,
)
from .simulator import duration


def analyzer(task: Task, variant: AnalyzerVariant = AnalyzerVariant.CYCLES_PLUS_IO) -> float:
    """Energy-waste proxy used to order tasks, in abstract demand units."""
    if variant is AnalyzerVariant.CYCLES_ONLY:
        return float(task.cycles)
    return task.cycles + task.dil * task.io_ops


def prioritize(
    workflow: Workflow, variant: AnalyzerVariant = AnalyzerVariant.CYCLES_PLUS_IO
) -> RankedList:
    ranked = RankedList()
    for task in workflow:  # id order
        ranked.insert(analyzer(task, variant), task.id)
    return ranked


@dataclass(frozen=True)
class MetricNorms:
    """Per-metric (min, max) over the candidate sites for one task."""

    cpe: tuple[float, float]
    iopsw: tuple[float, float]
    ipc: tuple[float, float]

    @classmethod
    def over(cls, task: Task, catalog: Catalog) -> "MetricNorms":
        if not catalog.sites:
            raise ModelError("cannot normalize over an empty candidate set")
        cpe = [s.compute.cpe for s in catalog.sites]
        iopsw = [s.storage.iopsw for s in catalog.sites]
        ipc = [catalog.ipc_for(task.id, s.id) for s in catalog.sites]
        return cls((min(cpe), max(cpe)), (min(iopsw), max(iopsw)), (min(ipc), max(ipc)))


def _scale(value: float, bounds: tuple[float, float]) -> float:
    lo, hi = bounds
    if hi == lo:
        return 1.0
    return (value - lo) / (hi - lo)


@dataclass(frozen=True)
class EfficiencyScore:
    site: str
    ee: float


def efficiency(
    task: Task,
    site: Site,
    ipc_value: float,
    config: GreenConfig,
    norms: MetricNorms | None = None,
) -> EfficiencyScore:
    """Score how well ``site`` suits ``task``; higher is greener.

    literal:  gf * (cpe + dil * iopsw + ipc)
    tradeoff: gf * (cpe + dil * iopsw) + (1 - gf) * ipc

    With ``normalize_metrics`` each metric is min-max scaled over the
    candidate set first, so ``norms`` is required.
    """
    if not ipc_value > 0:
        raise ValueError(f"ipc must be > 0, got {ipc_value}")
    c, w, p = site.compute.cpe, site.storage.iopsw, ipc_value
    if config.normalize_metrics:
        if norms is None:
            raise ModelError("normalized scoring needs candidate-set norms")
        c, w, p = _scale(c, norms.cpe), _scale(w, norms.iopsw), _scale(p, norms.ipc)
    gf = config.gf
    if config.formula_variant is FormulaVariant.LITERAL:
        ee = gf * (c + task.dil * w + p)
    else:
        ee = gf * (c + task.dil * w) + (1.0 - gf) * p
    return EfficiencyScore(site.id, ee)


def rank_resources(task: Task, catalog: Catalog, config: GreenConfig) -> RankedList:
    norms = MetricNorms.over(task, catalog) if config.normalize_metrics else None
    ranked = RankedList()
    for site in catalog.sites:  # id order
        score = efficiency(task, site, catalog.ipc_for(task.id, site.id), config, norms)
        ranked.insert(score.ee, site.id)
    return ranked


def hga_map(workflow: Workflow, catalog: Catalog, config: GreenConfig | None = None) -> Schedule:
    config = config or GreenConfig()
    catalog.check_covers(workflow)
    pending = prioritize(workflow, config.analyzer_variant)
    assignment: dict[str, str] = {}
    order: list[str] = []
    while len(pending):
        for index, tid in enumerate(pending.payloads()):
            if all(p in assignment for p in workflow[tid].parents):
                break
        else:  # pragma: no cover - impossible for a validated DAG
            raise RuntimeError("no ready task left")
        task = workflow[tid]
        assignment[tid] = rank_resources(task, catalog, config).head()
        order.append(tid)
        pending.pop(index)
    return Schedule(assignment, tuple(order))


class BaselinePolicy(str, enum.Enum):
    RANDOM_SEEDED = "random"
    FIFO_FIRST_SITE = "fifo"
    MAKESPAN_GREEDY = "greedy"


def baseline_map(
    workflow: Workflow,
    catalog: Catalog,
    policy: BaselinePolicy,
    seed: int | None = None,
) -> Schedule:
    policy = BaselinePolicy(policy)
    catalog.check_covers(workflow)
    sites = catalog.site_ids
    if policy is BaselinePolicy.RANDOM_SEEDED:
        if seed is None:
            raise ModelError("random baseline needs a seed")
        rng = random.Random(seed)
        order = workflow.topological_order()
        return Schedule({tid: rng.choice(sites) for tid in order}, order)
    if policy is BaselinePolicy.FIFO_FIRST_SITE:
        order = workflow.topological_order()
        return Schedule({tid: sites[0] for tid in order}, order)

    # greedy: FIFO over readiness, each task to its fastest site
    waiting = {tid: len(t.parents) for tid, t in workflow.tasks.items()}
    queue = deque(tid for tid, n in waiting.items() if n == 0)
    assignment: dict[str, str] = {}
    order: list[str] = []
    while queue:
        tid = queue.popleft()
        task = workflow[tid]
        assignment[tid] = min(
            catalog.sites, key=lambda s: duration(task, s, catalog.ipc_for(tid, s.id))
        ).id
        order.append(tid)
        for child in workflow.children(tid):
            waiting[child] -= 1
            if waiting[child] == 0:
                queue.append(child)
    return Schedule(assignment, tuple(order))
