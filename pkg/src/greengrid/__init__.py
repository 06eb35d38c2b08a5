"""Energy-aware DAG workflow scheduling on heterogeneous grid sites."""

__version__ = "0.1.0"

from .hgreen import BaselinePolicy, analyzer, baseline_map, efficiency, hga_map, prioritize, rank_resources
from .model import (
    AnalyzerVariant,
    Catalog,
    ComputeResource,
    DataStorage,
    FormulaVariant,
    GreenConfig,
    RankedList,
    Schedule,
    Site,
    Task,
    Workflow,
    load_catalog,
    load_workflow,
)
from .powergate import GatingKind, GatingPolicy, busy_interval_energy, idle_interval_energy
from .simulator import EnergyLedger, compare, duration, simulate

__all__ = [
    "AnalyzerVariant",
    "BaselinePolicy",
    "Catalog",
    "ComputeResource",
    "DataStorage",
    "EnergyLedger",
    "FormulaVariant",
    "GatingKind",
    "GatingPolicy",
    "GreenConfig",
    "RankedList",
    "Schedule",
    "Site",
    "Task",
    "Workflow",
    "analyzer",
    "baseline_map",
    "busy_interval_energy",
    "compare",
    "duration",
    "efficiency",
    "hga_map",
    "idle_interval_energy",
    "load_catalog",
    "load_workflow",
    "prioritize",
    "rank_resources",
    "simulate",
]
