"""Discrete-event execution of a static schedule and its energy ledger."""

from __future__ import annotations

import csv
import hashlib
import heapq
import io
import math
from dataclasses import dataclass
from typing import Any, Iterable

from .model import Catalog, Schedule, Site, Task, ValidationError, Workflow, dumps
from .powergate import (
    BlockUsage,
    GatingPolicy,
    busy_interval_breakdown,
    idle_interval_breakdown,
)

TIMELINE_COLUMNS = ("task", "site", "start_s", "end_s")
LEDGER_COLUMNS = ("site", "busy_j", "idle_j", "storage_j", "wake_j")


def duration(task: Task, site: Site, ipc_value: float) -> float:
    """Runtime in seconds: compute term plus storage service term."""
    if not ipc_value > 0:
        raise ValueError(f"ipc must be > 0, got {ipc_value}")
    compute = task.cycles / (ipc_value * site.compute.freq_hz)
    return compute + task.io_ops / site.storage.iops_rate


def storage_energy(task: Task, site: Site) -> float:
    # iops per watt == operations per joule
    return task.io_ops / site.storage.iopsw


@dataclass(frozen=True)
class TimelineEntry:
    task: str
    site: str
    start_s: float
    end_s: float


@dataclass(frozen=True)
class SiteEnergy:
    site: str
    busy_j: float
    idle_j: float
    storage_j: float
    wake_j: float
    busy_s: float
    idle_s: float

    @property
    def total_j(self) -> float:
        return self.busy_j + self.idle_j + self.storage_j + self.wake_j


@dataclass(frozen=True)
class EnergyLedger:
    sites: tuple[SiteEnergy, ...]
    makespan_s: float
    # fingerprint of the workflow + catalog pair the ledger was produced from
    scenario: str = ""

    @property
    def total_j(self) -> float:
        return math.fsum(s.total_j for s in self.sites)

    def totals(self) -> dict[str, float]:
        return {
            "busy_j": math.fsum(s.busy_j for s in self.sites),
            "idle_j": math.fsum(s.idle_j for s in self.sites),
            "storage_j": math.fsum(s.storage_j for s in self.sites),
            "wake_j": math.fsum(s.wake_j for s in self.sites),
            "total_j": self.total_j,
        }

    def to_dict(self) -> dict[str, Any]:
        return {
            "scenario": self.scenario,
            "makespan_s": self.makespan_s,
            "sites": [
                {
                    "site": s.site,
                    "busy_j": s.busy_j,
                    "idle_j": s.idle_j,
                    "storage_j": s.storage_j,
                    "wake_j": s.wake_j,
                    "busy_s": s.busy_s,
                    "idle_s": s.idle_s,
                }
                for s in self.sites
            ],
            "totals": self.totals(),
        }

    @classmethod
    def from_dict(cls, doc: dict[str, Any]) -> "EnergyLedger":
        try:
            sites = tuple(
                SiteEnergy(
                    site=str(s["site"]),
                    busy_j=float(s["busy_j"]),
                    idle_j=float(s["idle_j"]),
                    storage_j=float(s["storage_j"]),
                    wake_j=float(s["wake_j"]),
                    busy_s=float(s.get("busy_s", 0.0)),
                    idle_s=float(s.get("idle_s", 0.0)),
                )
                for s in doc["sites"]
            )
            return cls(sites, float(doc["makespan_s"]), str(doc.get("scenario", "")))
        except (KeyError, TypeError, ValueError) as exc:
            raise ValidationError("ledger", f"malformed ledger document ({exc})") from None

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(LEDGER_COLUMNS)
        for s in self.sites:
            writer.writerow([s.site, repr(s.busy_j), repr(s.idle_j), repr(s.storage_j), repr(s.wake_j)])
        return buf.getvalue()


@dataclass(frozen=True)
class SimulationResult:
    timeline: tuple[TimelineEntry, ...]
    ledger: EnergyLedger


def timeline_to_csv(timeline: Iterable[TimelineEntry]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(TIMELINE_COLUMNS)
    for e in timeline:
        writer.writerow([e.task, e.site, repr(e.start_s), repr(e.end_s)])
    return buf.getvalue()


def timeline_to_json(timeline: Iterable[TimelineEntry]) -> str:
    return dumps(
        [{"task": e.task, "site": e.site, "start_s": e.start_s, "end_s": e.end_s} for e in timeline]
    )


def scenario_fingerprint(workflow: Workflow, catalog: Catalog) -> str:
    blob = dumps({"workflow": workflow.to_dict(), "catalog": catalog.to_dict()})
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def simulate(
    workflow: Workflow,
    catalog: Catalog,
    schedule: Schedule,
    policy: GatingPolicy,
) -> SimulationResult:
    """Run ``schedule`` to completion and account for its energy.

    A task starts once every parent has finished and its site is free.
    Among the ready tasks waiting for one site, the earliest in
    ``schedule.order`` goes first. Each site runs one task at a time.
    """
    schedule.check_total(workflow)
    site_ids = set(catalog.site_ids)
    for tid in workflow.tasks:
        if schedule.assignment[tid] not in site_ids:
            raise ValidationError(f"assignment[{tid}]", f"unknown site {schedule.assignment[tid]!r}")
    usage = BlockUsage.from_workflow(workflow)
    rank = {tid: i for i, tid in enumerate(schedule.order)}
    durations = {}
    for task in workflow:
        site = catalog.site(schedule.assignment[task.id])
        usage.check(task, site.compute)
        durations[task.id] = duration(task, site, catalog.ipc_for(task.id, site.id))

    waiting = {tid: len(t.parents) for tid, t in workflow.tasks.items()}
    ready: dict[str, list[tuple[int, str]]] = {sid: [] for sid in catalog.site_ids}
    busy_until: dict[str, float | None] = {sid: None for sid in catalog.site_ids}
    for tid, n in waiting.items():
        if n == 0:
            heapq.heappush(ready[schedule.assignment[tid]], (rank[tid], tid))

    events: list[tuple[float, int, str]] = []  # (finish time, rank, task)
    timeline: list[TimelineEntry] = []
    now = 0.0

    def dispatch() -> None:
        for sid in catalog.site_ids:
            if busy_until[sid] is None and ready[sid]:
                _, tid = heapq.heappop(ready[sid])
                end = now + durations[tid]
                busy_until[sid] = end
                timeline.append(TimelineEntry(tid, sid, now, end))
                heapq.heappush(events, (end, rank[tid], tid))

    dispatch()
    while events:
        now = events[0][0]
        while events and events[0][0] == now:
            _, _, tid = heapq.heappop(events)
            busy_until[schedule.assignment[tid]] = None
            for child in workflow.children(tid):
                waiting[child] -= 1
                if waiting[child] == 0:
                    heapq.heappush(ready[schedule.assignment[child]], (rank[child], child))
        dispatch()

    if len(timeline) != len(workflow):
        raise RuntimeError("simulation stalled before every task ran")
    makespan = max(e.end_s for e in timeline)
    ledger = _account(workflow, catalog, timeline, makespan, policy, usage)
    return SimulationResult(tuple(timeline), ledger)


def _account(workflow, catalog, timeline, makespan, policy, usage) -> EnergyLedger:
    by_site: dict[str, list[TimelineEntry]] = {sid: [] for sid in catalog.site_ids}
    for entry in timeline:
        by_site[entry.site].append(entry)
    rows = []
    for site in catalog.sites:
        entries = sorted(by_site[site.id], key=lambda e: e.start_s)
        busy_j, idle_j, storage_j, wake_j = [], [], [], []
        busy_s, idle_s = [], []
        cursor = 0.0
        for e in entries:
            task = workflow[e.task]
            gap = e.start_s - cursor
            if gap > 0:
                idle = idle_interval_breakdown(site.compute, gap, policy)
                idle_j.append(idle.base_j)
                wake_j.append(idle.wake_j)
                idle_s.append(gap)
            run = e.end_s - e.start_s
            busy = busy_interval_breakdown(site.compute, task, run, policy, usage)
            busy_j.append(busy.base_j)
            wake_j.append(busy.wake_j)
            busy_s.append(run)
            storage_j.append(storage_energy(task, site))
            cursor = e.end_s
        tail = makespan - cursor
        if tail > 0:
            idle = idle_interval_breakdown(site.compute, tail, policy)
            idle_j.append(idle.base_j)
            wake_j.append(idle.wake_j)
            idle_s.append(tail)
        rows.append(
            SiteEnergy(
                site=site.id,
                busy_j=math.fsum(busy_j),
                idle_j=math.fsum(idle_j),
                storage_j=math.fsum(storage_j),
                wake_j=math.fsum(wake_j),
                busy_s=math.fsum(busy_s),
                idle_s=math.fsum(idle_s),
            )
        )
    return EnergyLedger(tuple(rows), makespan, scenario_fingerprint(workflow, catalog))


@dataclass(frozen=True)
class SavingsReport:
    """How much less energy ``a`` used than ``b``.

    ``savings_fraction = 1 - total_a / total_b``; positive means ``a`` is
    cheaper. ``makespan_delta_s = makespan_a - makespan_b``.
    """

    total_a: float
    total_b: float
    savings_fraction: float
    makespan_delta_s: float
    direction: str = "a relative to b"


def compare(ledger_a: EnergyLedger, ledger_b: EnergyLedger) -> SavingsReport:
    if ledger_a.scenario and ledger_b.scenario and ledger_a.scenario != ledger_b.scenario:
        raise ValidationError("ledger", "ledgers come from different scenarios")
    total_a, total_b = ledger_a.total_j, ledger_b.total_j
    if total_b == 0:
        raise ValidationError("ledger_b", "total energy is zero; savings undefined")
    return SavingsReport(
        total_a=total_a,
        total_b=total_b,
        savings_fraction=1.0 - total_a / total_b,
        makespan_delta_s=ledger_a.makespan_s - ledger_b.makespan_s,
    )
