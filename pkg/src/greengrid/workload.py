"""Seeded synthetic workflows and site catalogs, plus bundled presets."""

from __future__ import annotations

import random
import string
from dataclasses import asdict, dataclass, fields
from typing import Any, Mapping

from .model import (
    Catalog,
    ComputeResource,
    DataStorage,
    Site,
    Task,
    ValidationError,
    Workflow,
)

DEFAULT_BLOCKS = (("narrow", 0.6), ("wide", 0.4))


def _check_range(name: str, bounds, lo: float | None = None, hi: float | None = None) -> None:
    if len(bounds) != 2 or bounds[0] > bounds[1]:
        raise ValidationError(name, f"need min <= max, got {bounds}")
    if lo is not None and bounds[0] < lo:
        raise ValidationError(name, f"values must be >= {lo}")
    if hi is not None and bounds[1] > hi:
        raise ValidationError(name, f"values must be <= {hi}")


def _from_mapping(cls, doc: Mapping[str, Any], path: str):
    known = {f.name for f in fields(cls)}
    unknown = set(doc) - known
    if unknown:
        raise ValidationError(path, f"unknown field(s) {', '.join(sorted(unknown))}")
    kwargs = {}
    for key, value in doc.items():
        if isinstance(value, list):
            value = tuple(tuple(v) if isinstance(v, list) else v for v in value)
        kwargs[key] = value
    return cls(**kwargs)


@dataclass(frozen=True)
class WorkflowSpec:
    n_tasks: int = 30
    n_layers: int = 5
    edge_density: float = 0.1
    cycles_range: tuple[int, int] = (10**9, 10**10)
    io_range: tuple[int, int] = (0, 10**6)
    dil_range: tuple[float, float] = (0.0, 1.0)
    # blocks each task may leave unused; empty means every task uses everything
    blocks: tuple[str, ...] = ()
    block_use_prob: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if isinstance(self.n_tasks, bool) or not isinstance(self.n_tasks, int) or self.n_tasks < 1:
            raise ValidationError("n_tasks", "must be an integer >= 1")
        if isinstance(self.n_layers, bool) or not isinstance(self.n_layers, int) or self.n_layers < 1:
            raise ValidationError("n_layers", "must be an integer >= 1")
        if not (0.0 <= self.edge_density <= 1.0):
            raise ValidationError("edge_density", "must lie in [0, 1]")
        if not (0.0 <= self.block_use_prob <= 1.0):
            raise ValidationError("block_use_prob", "must lie in [0, 1]")
        _check_range("cycles_range", self.cycles_range, lo=1)
        _check_range("io_range", self.io_range, lo=0)
        _check_range("dil_range", self.dil_range, lo=0.0, hi=1.0)

    @classmethod
    def from_dict(cls, doc: Mapping[str, Any]) -> "WorkflowSpec":
        return _from_mapping(cls, doc, "workflow_spec")

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


def task_ids(n: int) -> list[str]:
    width = len(str(n - 1))
    return [f"t{i:0{width}d}" for i in range(n)]


def gen_workflow(spec: WorkflowSpec) -> Workflow:
    """Layered random DAG.

    Task ``i`` goes to layer ``i % n_layers``. Every task outside the
    first layer gets one parent from the layer just above it; any task in
    an earlier layer becomes an extra parent with probability
    ``edge_density``.
    """
    rng = random.Random(spec.seed)
    ids = task_ids(spec.n_tasks)
    layers: list[list[str]] = [[] for _ in range(spec.n_layers)]
    for i, tid in enumerate(ids):
        layers[i % spec.n_layers].append(tid)

    tasks = []
    for depth, layer in enumerate(layers):
        for tid in layer:
            parents: set[str] = set()
            if depth > 0:
                parents.add(rng.choice(layers[depth - 1]))
                for earlier in layers[:depth]:
                    for candidate in earlier:
                        if rng.random() < spec.edge_density:
                            parents.add(candidate)
            blocks_used = None
            if spec.blocks:
                blocks_used = frozenset(b for b in spec.blocks if rng.random() < spec.block_use_prob)
            tasks.append(
                Task(
                    id=tid,
                    cycles=rng.randint(*spec.cycles_range),
                    io_ops=rng.randint(*spec.io_range),
                    dil=rng.uniform(*spec.dil_range),
                    parents=frozenset(parents),
                    blocks_used=blocks_used,
                )
            )
    return Workflow(tasks)


@dataclass(frozen=True)
class CatalogSpec:
    n_sites: int = 3
    cpe_range: tuple[float, float] = (1000.0, 4000.0)
    iopsw_range: tuple[float, float] = (1000.0, 5000.0)
    p_busy_range: tuple[float, float] = (150.0, 250.0)
    idle_fraction_range: tuple[float, float] = (0.3, 0.6)
    freq_range: tuple[float, float] = (2.0e9, 3.0e9)
    ipc_range: tuple[float, float] = (1.0, 3.0)
    iops_rate_range: tuple[float, float] = (1e5, 1e5)
    block_shares: tuple[tuple[str, float], ...] = DEFAULT_BLOCKS
    # hand the drawn cpe scores out in the same order as freq / p_busy, so
    # a site's advertised efficiency ranks like its modeled one
    cpe_tracks_efficiency: bool = True
    seed: int = 0

    def __post_init__(self):
        if isinstance(self.n_sites, bool) or not isinstance(self.n_sites, int) or self.n_sites < 1:
            raise ValidationError("n_sites", "must be an integer >= 1")
        _check_range("cpe_range", self.cpe_range)
        _check_range("iopsw_range", self.iopsw_range)
        _check_range("p_busy_range", self.p_busy_range)
        _check_range("idle_fraction_range", self.idle_fraction_range, hi=1.0)
        _check_range("freq_range", self.freq_range)
        _check_range("ipc_range", self.ipc_range)
        _check_range("iops_rate_range", self.iops_rate_range)
        for name in ("cpe_range", "iopsw_range", "p_busy_range", "idle_fraction_range",
                     "freq_range", "ipc_range", "iops_rate_range"):
            if not getattr(self, name)[0] > 0:
                raise ValidationError(name, "values must be > 0")

    @classmethod
    def from_dict(cls, doc: Mapping[str, Any]) -> "CatalogSpec":
        return _from_mapping(cls, doc, "catalog_spec")

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


def site_names(n: int) -> list[str]:
    """A, B, ..., Z, AA, AB, ... in spreadsheet-column style."""
    names = []
    for i in range(n):
        name = ""
        i += 1
        while i:
            i, rem = divmod(i - 1, 26)
            name = string.ascii_uppercase[rem] + name
        names.append(name)
    return names


def gen_catalog(spec: CatalogSpec, workflow: Workflow) -> Catalog:
    rng = random.Random(spec.seed)
    names = site_names(spec.n_sites)
    draws = []
    for _ in names:
        p_busy = rng.uniform(*spec.p_busy_range)
        draws.append(
            {
                "p_busy": p_busy,
                "cpe": rng.uniform(*spec.cpe_range),
                "freq": rng.uniform(*spec.freq_range),
                "p_idle": p_busy * rng.uniform(*spec.idle_fraction_range),
                "iopsw": rng.uniform(*spec.iopsw_range),
                "iops_rate": rng.uniform(*spec.iops_rate_range),
            }
        )
    if spec.cpe_tracks_efficiency:
        by_eff = sorted(range(len(draws)), key=lambda i: (draws[i]["freq"] / draws[i]["p_busy"], i))
        cpes = sorted(d["cpe"] for d in draws)
        for i, cpe in zip(by_eff, cpes):
            draws[i]["cpe"] = cpe
    sites = []
    for name, d in zip(names, draws):
        compute = ComputeResource(
            id=f"cr{name}",
            cpe=d["cpe"],
            freq_hz=d["freq"],
            p_busy_w=d["p_busy"],
            p_idle_w=d["p_idle"],
            block_shares=spec.block_shares,
        )
        storage = DataStorage(id=f"ds{name}", iopsw=d["iopsw"], iops_rate=d["iops_rate"])
        sites.append(Site(name, compute, storage))
    ipc = {(task.id, site.id): rng.uniform(*spec.ipc_range) for task in workflow for site in sites}
    return Catalog(tuple(sites), ipc)


@dataclass(frozen=True)
class Preset:
    workflow: WorkflowSpec
    catalog: CatalogSpec

    def build(self) -> tuple[Workflow, Catalog]:
        wf = gen_workflow(self.workflow)
        return wf, gen_catalog(self.catalog, wf)


# eega3: three sites, 30 tasks in 5 layers. The seed is the first one whose
# drawn catalog spreads cpe by at least 3.5x across the sites.
PRESETS: dict[str, Preset] = {
    "eega3": Preset(
        WorkflowSpec(
            n_tasks=30,
            n_layers=5,
            edge_density=0.15,
            cycles_range=(2 * 10**9, 2 * 10**10),
            io_range=(10**5, 2 * 10**6),
            dil_range=(0.0, 1.0),
            blocks=("narrow", "wide"),
            block_use_prob=0.7,
            seed=1,
        ),
        CatalogSpec(
            n_sites=3,
            cpe_range=(1000.0, 4000.0),
            iopsw_range=(1000.0, 5000.0),
            p_busy_range=(100.0, 300.0),
            idle_fraction_range=(0.35, 0.45),
            freq_range=(2.4e9, 2.6e9),
            ipc_range=(1.0, 3.0),
            iops_rate_range=(2e5, 2e5),
            block_shares=DEFAULT_BLOCKS,
            seed=1,
        ),
    ),
}


def load_bundled(name: str) -> tuple[Workflow, Catalog]:
    """Read a scenario shipped under ``greengrid/scenarios/<name>/``."""
    from importlib import resources

    from .model import load_catalog, load_workflow

    root = resources.files("greengrid") / "scenarios" / name
    return (
        load_workflow((root / "workflow.json").read_text()),
        load_catalog((root / "catalog.json").read_text()),
    )
