"""Domain types for workflows, grid sites and schedules.

Everything here is immutable once built. The two loaders accept JSON text
in strict mode: unknown fields are rejected and every invariant is checked
before an object is returned.
"""

from __future__ import annotations

import bisect
import enum
import graphlib
import heapq
import json
import math
from dataclasses import dataclass, field
from typing import Any, Iterable, Iterator, Mapping


class ModelError(ValueError):
    """Base class for invalid user input."""


class ParseError(ModelError):
    pass


class ValidationError(ModelError):
    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


class CycleError(ModelError):
    def __init__(self, cycle: list[str]):
        edge = f"{cycle[0]} -> {cycle[1]}"
        super().__init__(f"dependency cycle through {' -> '.join(cycle)} (edge {edge})")
        self.cycle = cycle


class MissingIpcError(ModelError):
    def __init__(self, task_id: str, site_id: str):
        super().__init__(f"ipc missing for task {task_id!r} on site {site_id!r}")
        self.task_id = task_id
        self.site_id = site_id


@dataclass(frozen=True)
class Task:
    id: str
    cycles: int
    io_ops: int = 0
    dil: float = 0.0
    parents: frozenset[str] = frozenset()
    # None means the task keeps every block of its resource busy.
    blocks_used: frozenset[str] | None = None

    def __post_init__(self):
        if not (1 <= self.cycles):
            raise ValidationError(f"tasks[{self.id}].cycles", "must be >= 1")
        if self.io_ops < 0:
            raise ValidationError(f"tasks[{self.id}].io_ops", "must be >= 0")
        if not (0.0 <= self.dil <= 1.0):
            raise ValidationError(f"tasks[{self.id}].dil", "must lie in [0, 1]")

    def to_dict(self) -> dict[str, Any]:
        doc: dict[str, Any] = {
            "id": self.id,
            "cycles": self.cycles,
            "io_ops": self.io_ops,
            "dil": self.dil,
            "parents": sorted(self.parents),
        }
        if self.blocks_used is not None:
            doc["blocks_used"] = sorted(self.blocks_used)
        return doc


class Workflow:
    """A validated DAG of tasks, keyed by id."""

    def __init__(self, tasks: Iterable[Task]):
        by_id: dict[str, Task] = {}
        for task in tasks:
            if task.id in by_id:
                raise ValidationError(f"tasks[{task.id}]", "duplicate task id")
            by_id[task.id] = task
        for task in by_id.values():
            for parent in sorted(task.parents):
                if parent not in by_id:
                    raise ValidationError(
                        f"tasks[{task.id}].parents", f"unknown parent {parent!r}"
                    )
        self._tasks = dict(sorted(by_id.items()))
        self._children: dict[str, tuple[str, ...]] = {tid: () for tid in self._tasks}
        for tid, task in self._tasks.items():
            for parent in task.parents:
                self._children[parent] += (tid,)
        self._order = self._topological_order()

    def _topological_order(self) -> tuple[str, ...]:
        graph = {tid: sorted(t.parents) for tid, t in self._tasks.items()}
        try:
            graphlib.TopologicalSorter(graph).prepare()
        except graphlib.CycleError as exc:
            # each node in the reported cycle is a parent of the next
            raise CycleError(list(exc.args[1])) from None
        # Kahn with a heap so ties break on task id
        indegree = {tid: len(t.parents) for tid, t in self._tasks.items()}
        heap = [tid for tid, deg in indegree.items() if deg == 0]
        heapq.heapify(heap)
        order = []
        while heap:
            tid = heapq.heappop(heap)
            order.append(tid)
            for child in self._children[tid]:
                indegree[child] -= 1
                if indegree[child] == 0:
                    heapq.heappush(heap, child)
        return tuple(order)

    @property
    def tasks(self) -> Mapping[str, Task]:
        return self._tasks

    def __getitem__(self, task_id: str) -> Task:
        return self._tasks[task_id]

    def __iter__(self) -> Iterator[Task]:
        return iter(self._tasks.values())

    def __len__(self) -> int:
        return len(self._tasks)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Workflow) and self._tasks == other._tasks

    def children(self, task_id: str) -> tuple[str, ...]:
        return self._children[task_id]

    def topological_order(self) -> tuple[str, ...]:
        """Topological order, ties broken by task id."""
        return self._order

    def edge_count(self) -> int:
        return sum(len(t.parents) for t in self)

    def to_dict(self) -> dict[str, Any]:
        return {"tasks": [t.to_dict() for t in self]}


@dataclass(frozen=True)
class ComputeResource:
    id: str
    cpe: float
    freq_hz: float
    p_busy_w: float
    p_idle_w: float
    block_shares: tuple[tuple[str, float], ...]

    def __post_init__(self):
        path = f"compute[{self.id}]"
        if not self.cpe > 0:
            raise ValidationError(f"{path}.cpe", "must be > 0")
        if not self.freq_hz > 0:
            raise ValidationError(f"{path}.freq_hz", "must be > 0")
        if not (0 < self.p_idle_w <= self.p_busy_w):
            raise ValidationError(f"{path}.p_idle_w", "need 0 < p_idle_w <= p_busy_w")
        if not self.block_shares:
            raise ValidationError(f"{path}.block_shares", "must not be empty")
        names = [name for name, _ in self.block_shares]
        if len(set(names)) != len(names):
            raise ValidationError(f"{path}.block_shares", "duplicate block name")
        for name, share in self.block_shares:
            if not (0 < share <= 1):
                raise ValidationError(f"{path}.block_shares[{name}]", "share must lie in (0, 1]")
        if abs(math.fsum(s for _, s in self.block_shares) - 1.0) > 1e-9:
            raise ValidationError(f"{path}.block_shares", "shares must sum to 1")

    @property
    def block_names(self) -> tuple[str, ...]:
        return tuple(name for name, _ in self.block_shares)

    def to_dict(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "cpe": self.cpe,
            "freq_hz": self.freq_hz,
            "p_busy_w": self.p_busy_w,
            "p_idle_w": self.p_idle_w,
            "block_shares": [[name, share] for name, share in self.block_shares],
        }


DEFAULT_IOPS_RATE = 1e5


@dataclass(frozen=True)
class DataStorage:
    id: str
    iopsw: float
    # service rate in operations per second; separate from the efficiency figure
    iops_rate: float = DEFAULT_IOPS_RATE

    def __post_init__(self):
        if not self.iopsw > 0:
            raise ValidationError(f"storage[{self.id}].iopsw", "must be > 0")
        if not self.iops_rate > 0:
            raise ValidationError(f"storage[{self.id}].iops_rate", "must be > 0")

    def to_dict(self) -> dict[str, Any]:
        return {"id": self.id, "iopsw": self.iopsw, "iops_rate": self.iops_rate}


@dataclass(frozen=True)
class Site:
    id: str
    compute: ComputeResource
    storage: DataStorage

    def to_dict(self) -> dict[str, Any]:
        return {"id": self.id, "compute": self.compute.to_dict(), "storage": self.storage.to_dict()}


@dataclass(frozen=True)
class Catalog:
    """Grid sites (sorted by id) plus the per (task, site) ipc table."""

    sites: tuple[Site, ...]
    ipc: Mapping[tuple[str, str], float] = field(default_factory=dict)

    def __post_init__(self):
        if not self.sites:
            raise ValidationError("sites", "at least one site required")
        ids = [s.id for s in self.sites]
        if len(set(ids)) != len(ids):
            raise ValidationError("sites", "duplicate site id")
        object.__setattr__(self, "sites", tuple(sorted(self.sites, key=lambda s: s.id)))
        known = set(ids)
        for (task_id, site_id), value in self.ipc.items():
            if site_id not in known:
                raise ValidationError(f"ipc[{task_id},{site_id}]", "unknown site")
            if not (value > 0 and math.isfinite(value)):
                raise ValidationError(f"ipc[{task_id},{site_id}]", "must be a finite value > 0")
        object.__setattr__(self, "ipc", dict(sorted(self.ipc.items())))

    def site(self, site_id: str) -> Site:
        for s in self.sites:
            if s.id == site_id:
                return s
        raise KeyError(site_id)

    @property
    def site_ids(self) -> tuple[str, ...]:
        return tuple(s.id for s in self.sites)

    def ipc_for(self, task_id: str, site_id: str) -> float:
        try:
            return self.ipc[(task_id, site_id)]
        except KeyError:
            raise MissingIpcError(task_id, site_id) from None

    def check_covers(self, workflow: Workflow) -> None:
        """Raise MissingIpcError for the first uncovered (task, site) pair."""
        for task in workflow:
            for site in self.sites:
                self.ipc_for(task.id, site.id)

    def to_dict(self) -> dict[str, Any]:
        return {
            "sites": [s.to_dict() for s in self.sites],
            "ipc": [[t, s, v] for (t, s), v in self.ipc.items()],
        }


class FormulaVariant(str, enum.Enum):
    LITERAL = "literal"
    TRADEOFF = "tradeoff"


class AnalyzerVariant(str, enum.Enum):
    CYCLES_PLUS_IO = "cycles_plus_io"
    CYCLES_ONLY = "cycles_only"


@dataclass(frozen=True)
class GreenConfig:
    gf: float = 0.5
    formula_variant: FormulaVariant = FormulaVariant.LITERAL
    normalize_metrics: bool = True
    analyzer_variant: AnalyzerVariant = AnalyzerVariant.CYCLES_PLUS_IO

    def __post_init__(self):
        if not (0.0 <= self.gf <= 1.0):
            raise ValidationError("gf", f"green factor {self.gf} outside [0, 1]")


class RankedList:
    """List kept in decreasing key order.

    Equal keys keep insertion order, so a new entry lands after every
    existing entry with the same key.
    """

    def __init__(self):
        self._neg_keys: list[float] = []
        self._payloads: list[str] = []

    def insert(self, key: float, payload: str) -> int:
        if not math.isfinite(key):
            raise ValueError(f"non-finite key {key!r}")
        pos = bisect.bisect_right(self._neg_keys, -key)
        self._neg_keys.insert(pos, -key)
        self._payloads.insert(pos, payload)
        return pos

    def pop(self, index: int = 0) -> tuple[float, str]:
        key = -self._neg_keys.pop(index)
        return key, self._payloads.pop(index)

    def head(self) -> str:
        return self._payloads[0]

    def keys(self) -> list[float]:
        return [-k for k in self._neg_keys]

    def payloads(self) -> list[str]:
        return list(self._payloads)

    def __len__(self) -> int:
        return len(self._payloads)

    def __iter__(self) -> Iterator[tuple[float, str]]:
        return zip(self.keys(), self._payloads)

    def __repr__(self) -> str:
        return f"RankedList({list(self)!r})"


@dataclass(frozen=True)
class Schedule:
    assignment: Mapping[str, str]
    order: tuple[str, ...]

    def to_dict(self) -> dict[str, Any]:
        return {"assignment": dict(sorted(self.assignment.items())), "order": list(self.order)}

    def to_json(self) -> str:
        return dumps(self.to_dict())

    def check_total(self, workflow: Workflow) -> None:
        missing = [tid for tid in workflow.tasks if tid not in self.assignment]
        if missing:
            raise ValidationError("assignment", f"no site for task(s) {', '.join(missing)}")
        if sorted(self.order) != sorted(workflow.tasks):
            raise ValidationError("order", "must list every task exactly once")


# -- JSON documents ---------------------------------------------------------


def dumps(doc: Any) -> str:
    """Canonical JSON text used for every artifact this package writes."""
    return json.dumps(doc, indent=2, allow_nan=False) + "\n"


def _parse(text: str | bytes) -> Any:
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"malformed JSON: {exc}") from None


def _fields(doc: Any, path: str, required: set[str], optional: set[str] = frozenset()) -> dict:
    if not isinstance(doc, dict):
        raise ValidationError(path, "expected an object")
    unknown = set(doc) - required - set(optional)
    if unknown:
        raise ValidationError(path, f"unknown field(s) {', '.join(sorted(unknown))}")
    missing = required - set(doc)
    if missing:
        raise ValidationError(path, f"missing field(s) {', '.join(sorted(missing))}")
    return doc


def _int(value: Any, path: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ValidationError(path, "expected an integer")
    return value


def _num(value: Any, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ValidationError(path, "expected a number")
    if not math.isfinite(value):
        raise ValidationError(path, "expected a finite number")
    return float(value)


def _str(value: Any, path: str) -> str:
    if not isinstance(value, str) or not value:
        raise ValidationError(path, "expected a non-empty string")
    return value


def _str_list(value: Any, path: str) -> list[str]:
    if not isinstance(value, list):
        raise ValidationError(path, "expected a list")
    return [_str(v, f"{path}[{i}]") for i, v in enumerate(value)]


def workflow_from_dict(doc: Any) -> Workflow:
    _fields(doc, "$", {"tasks"})
    if not isinstance(doc["tasks"], list):
        raise ValidationError("tasks", "expected a list")
    tasks = []
    for i, raw in enumerate(doc["tasks"]):
        path = f"tasks[{i}]"
        _fields(raw, path, {"id", "cycles"}, {"io_ops", "dil", "parents", "blocks_used"})
        blocks = raw.get("blocks_used")
        tasks.append(
            Task(
                id=_str(raw["id"], f"{path}.id"),
                cycles=_int(raw["cycles"], f"{path}.cycles"),
                io_ops=_int(raw.get("io_ops", 0), f"{path}.io_ops"),
                dil=_num(raw.get("dil", 0.0), f"{path}.dil"),
                parents=frozenset(_str_list(raw.get("parents", []), f"{path}.parents")),
                blocks_used=None
                if blocks is None
                else frozenset(_str_list(blocks, f"{path}.blocks_used")),
            )
        )
    return Workflow(tasks)


def load_workflow(text: str | bytes) -> Workflow:
    return workflow_from_dict(_parse(text))


def catalog_from_dict(doc: Any) -> Catalog:
    _fields(doc, "$", {"sites"}, {"ipc"})
    if not isinstance(doc["sites"], list):
        raise ValidationError("sites", "expected a list")
    sites = []
    for i, raw in enumerate(doc["sites"]):
        path = f"sites[{i}]"
        _fields(raw, path, {"id", "compute", "storage"})
        c = _fields(
            raw["compute"],
            f"{path}.compute",
            {"id", "cpe", "freq_hz", "p_busy_w", "p_idle_w", "block_shares"},
        )
        shares_raw = c["block_shares"]
        if not isinstance(shares_raw, list):
            raise ValidationError(f"{path}.compute.block_shares", "expected a list")
        shares = []
        for j, pair in enumerate(shares_raw):
            ppath = f"{path}.compute.block_shares[{j}]"
            if not (isinstance(pair, list) and len(pair) == 2):
                raise ValidationError(ppath, "expected [name, fraction]")
            shares.append((_str(pair[0], ppath), _num(pair[1], ppath)))
        d = _fields(raw["storage"], f"{path}.storage", {"id", "iopsw"}, {"iops_rate"})
        try:
            compute = ComputeResource(
                id=_str(c["id"], f"{path}.compute.id"),
                cpe=_num(c["cpe"], f"{path}.compute.cpe"),
                freq_hz=_num(c["freq_hz"], f"{path}.compute.freq_hz"),
                p_busy_w=_num(c["p_busy_w"], f"{path}.compute.p_busy_w"),
                p_idle_w=_num(c["p_idle_w"], f"{path}.compute.p_idle_w"),
                block_shares=tuple(shares),
            )
            storage = DataStorage(
                id=_str(d["id"], f"{path}.storage.id"),
                iopsw=_num(d["iopsw"], f"{path}.storage.iopsw"),
                iops_rate=_num(d.get("iops_rate", DEFAULT_IOPS_RATE), f"{path}.storage.iops_rate"),
            )
        except ValidationError as exc:
            raise ValidationError(f"{path}.{exc.path}", str(exc).split(": ", 1)[1]) from None
        sites.append(Site(id=_str(raw["id"], f"{path}.id"), compute=compute, storage=storage))

    ipc: dict[tuple[str, str], float] = {}
    raw_ipc = doc.get("ipc", [])
    if not isinstance(raw_ipc, list):
        raise ValidationError("ipc", "expected a list")
    for i, entry in enumerate(raw_ipc):
        path = f"ipc[{i}]"
        if not (isinstance(entry, list) and len(entry) == 3):
            raise ValidationError(path, "expected [task_id, site_id, value]")
        key = (_str(entry[0], path), _str(entry[1], path))
        if key in ipc:
            raise ValidationError(path, f"duplicate entry for {key}")
        ipc[key] = _num(entry[2], path)
    return Catalog(sites=tuple(sites), ipc=ipc)


def load_catalog(text: str | bytes) -> Catalog:
    return catalog_from_dict(_parse(text))


def schedule_from_dict(doc: Any) -> Schedule:
    _fields(doc, "$", {"assignment", "order"})
    assignment = doc["assignment"]
    if not isinstance(assignment, dict):
        raise ValidationError("assignment", "expected an object")
    for tid, sid in assignment.items():
        _str(sid, f"assignment[{tid}]")
    order = _str_list(doc["order"], "order")
    if len(set(order)) != len(order):
        raise ValidationError("order", "duplicate task id")
    return Schedule(assignment=dict(assignment), order=tuple(order))


def load_schedule(text: str | bytes) -> Schedule:
    return schedule_from_dict(_parse(text))
