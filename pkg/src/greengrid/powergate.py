"""Idle and busy energy of a compute resource under power gating.

Three policies:

* none   - every block stays powered; idle draws ``p_idle_w``.
* coarse - a whole block is switched off only when it is entirely unused,
           which in practice means only while the resource is idle.
* fine   - unused parts of a busy resource are switched off as well.

Gated blocks keep leaking ``residual_fraction`` of their idle power.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Any, Mapping, NamedTuple

from .model import ComputeResource, ModelError, Task, ValidationError, Workflow


class GatingKind(str, enum.Enum):
    NONE = "none"
    COARSE = "coarse"
    FINE = "fine"


@dataclass(frozen=True)
class GatingPolicy:
    kind: GatingKind = GatingKind.FINE
    wake_latency_s: float = 1e-3
    wake_energy_j: float = 0.01
    residual_fraction: float = 0.05

    def __post_init__(self):
        object.__setattr__(self, "kind", GatingKind(self.kind))
        if not self.wake_latency_s >= 0:
            raise ValidationError("gating.wake_latency_s", "must be >= 0")
        if not self.wake_energy_j >= 0:
            raise ValidationError("gating.wake_energy_j", "must be >= 0")
        if not (0 <= self.residual_fraction < 1):
            raise ValidationError("gating.residual_fraction", "must lie in [0, 1)")

    @classmethod
    def ideal(cls, kind: GatingKind | str) -> "GatingPolicy":
        """Zero wake cost, zero leakage."""
        return cls(GatingKind(kind), wake_latency_s=0.0, wake_energy_j=0.0, residual_fraction=0.0)

    def to_dict(self) -> dict[str, Any]:
        return {
            "kind": self.kind.value,
            "wake_latency_s": self.wake_latency_s,
            "wake_energy_j": self.wake_energy_j,
            "residual_fraction": self.residual_fraction,
        }

    @classmethod
    def from_dict(cls, doc: Mapping[str, Any]) -> "GatingPolicy":
        allowed = {"kind", "wake_latency_s", "wake_energy_j", "residual_fraction"}
        unknown = set(doc) - allowed
        if unknown:
            raise ValidationError("gating", f"unknown field(s) {', '.join(sorted(unknown))}")
        try:
            kind = GatingKind(doc.get("kind", "fine"))
        except ValueError:
            raise ValidationError("gating.kind", f"unknown kind {doc.get('kind')!r}") from None
        return cls(
            kind,
            wake_latency_s=float(doc.get("wake_latency_s", 1e-3)),
            wake_energy_j=float(doc.get("wake_energy_j", 0.01)),
            residual_fraction=float(doc.get("residual_fraction", 0.05)),
        )


class UnknownBlockError(ModelError):
    pass


@dataclass(frozen=True)
class BlockUsage:
    """Which blocks each task keeps busy; missing entries count as used."""

    used: Mapping[tuple[str, str], bool]

    @classmethod
    def from_workflow(cls, workflow: Workflow) -> "BlockUsage":
        used = {}
        for task in workflow:
            if task.blocks_used is not None:
                for block in task.blocks_used:
                    used[(task.id, block)] = True
        return cls(used)

    def is_used(self, task: Task, block: str) -> bool:
        if task.blocks_used is None:
            return self.used.get((task.id, block), True)
        return self.used.get((task.id, block), block in task.blocks_used)

    def check(self, task: Task, resource: ComputeResource) -> None:
        known = set(resource.block_names)
        named = {b for (tid, b) in self.used if tid == task.id}
        if task.blocks_used is not None:
            named |= task.blocks_used
        unknown = sorted(named - known)
        if unknown:
            raise UnknownBlockError(
                f"task {task.id!r} names block(s) {', '.join(unknown)} "
                f"not present on {resource.id!r}"
            )


class IntervalEnergy(NamedTuple):
    base_j: float
    wake_j: float

    @property
    def total_j(self) -> float:
        return self.base_j + self.wake_j


def idle_interval_breakdown(
    resource: ComputeResource, interval_s: float, policy: GatingPolicy
) -> IntervalEnergy:
    if not interval_s >= 0:
        raise ValueError(f"negative idle interval {interval_s}")
    p_idle = resource.p_idle_w
    if policy.kind is GatingKind.NONE or interval_s <= policy.wake_latency_s:
        return IntervalEnergy(p_idle * interval_s, 0.0)
    gated = interval_s - policy.wake_latency_s
    base = p_idle * (policy.residual_fraction * gated + policy.wake_latency_s)
    return IntervalEnergy(base, policy.wake_energy_j)


def idle_interval_energy(resource: ComputeResource, interval_s: float, policy: GatingPolicy) -> float:
    """Joules spent by an idle resource over ``interval_s`` seconds.

    Gating only happens when the gap outlasts the wake latency; the last
    ``wake_latency_s`` of the gap is spent waking at full idle power.
    """
    return idle_interval_breakdown(resource, interval_s, policy).total_j


def busy_interval_breakdown(
    resource: ComputeResource,
    task: Task,
    interval_s: float,
    policy: GatingPolicy,
    usage: BlockUsage | None = None,
) -> IntervalEnergy:
    if not interval_s >= 0:
        raise ValueError(f"negative busy interval {interval_s}")
    if usage is None:
        usage = BlockUsage({})
    usage.check(task, resource)
    if policy.kind is not GatingKind.FINE:
        return IntervalEnergy(resource.p_busy_w * interval_s, 0.0)
    unused = [share for name, share in resource.block_shares if not usage.is_used(task, name)]
    saved = math.fsum(unused) * resource.p_idle_w * (1.0 - policy.residual_fraction)
    # at most one wake per gated block per task
    return IntervalEnergy((resource.p_busy_w - saved) * interval_s, len(unused) * policy.wake_energy_j)


def busy_interval_energy(
    resource: ComputeResource,
    task: Task,
    interval_s: float,
    policy: GatingPolicy,
    usage: BlockUsage | None = None,
) -> float:
    """Joules spent running ``task`` for ``interval_s`` seconds.

    Only fine gating saves anything here: each unused block stops drawing
    its share of idle power, minus leakage.
    """
    return busy_interval_breakdown(resource, task, interval_s, policy, usage).total_j
