"""Core value types shared by every other module.

All KPIs live in normalized [0, 1] units (raw percentage readings are
divided by 100 at ingestion). Value types are immutable after construction
and safe to share between threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, Iterator, Mapping, Sequence, Tuple

import numpy as np

DEFAULT_KPI_DIMS = 3  # storage, cpu, network


class ContractViolation(ValueError):
    """Raised when a caller breaks a documented precondition."""


def clamp01(values: Sequence[float]) -> Tuple[float, ...]:
    """Clamp every component into [0, 1]; rejects NaN/inf."""
    out = []
    for v in values:
        if not math.isfinite(v):
            raise ContractViolation(f"non-finite KPI component: {v!r}")
        out.append(min(1.0, max(0.0, float(v))))
    return tuple(out)


@dataclass(frozen=True)
class KpiVector:
    """A point in the Z-dimensional KPI space (storage, cpu, network by default)."""

    values: Tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "values", clamp01(self.values))

    @property
    def dim(self) -> int:
        return len(self.values)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.values, dtype=float)

    def __iter__(self) -> Iterator[float]:
        return iter(self.values)

    def __len__(self) -> int:
        return len(self.values)

    def __getitem__(self, z: int) -> float:
        return self.values[z]


def kpi(*values: float) -> KpiVector:
    """Shorthand constructor used heavily in tests."""
    return KpiVector(tuple(values))


def euclidean_distance(a: KpiVector, b: KpiVector) -> float:
    """L2 distance between two KPI points; symmetric and zero iff equal."""
    if a.dim != b.dim:
        raise ContractViolation(f"dimension mismatch: {a.dim} vs {b.dim}")
    return math.sqrt(sum((x - y) ** 2 for x, y in zip(a.values, b.values)))


def l1_norm(a: KpiVector) -> float:
    """Sum of absolute components; equals the plain sum for KPI data."""
    return sum(abs(x) for x in a.values)


@dataclass(frozen=True)
class VnfTrace:
    """Per-VNF time series of KPI readings, stored column-wise for speed.

    ``slots`` must be strictly increasing; ``kpis`` has one row per slot.
    """

    vnf_id: int
    slots: Tuple[int, ...]
    kpis: np.ndarray  # shape (len(slots), Z)

    def __post_init__(self):
        arr = np.asarray(self.kpis, dtype=float)
        if arr.ndim != 2 or arr.shape[0] != len(self.slots):
            raise ContractViolation("kpis must be a (n_slots, Z) array")
        if len(self.slots) == 0:
            raise ContractViolation("trace must hold at least one sample")
        if any(b <= a for a, b in zip(self.slots, self.slots[1:])):
            raise ContractViolation("slots must be strictly increasing")
        object.__setattr__(self, "kpis", arr)

    def samples(self) -> Iterator[Tuple[int, KpiVector]]:
        for slot, row in zip(self.slots, self.kpis):
            yield slot, KpiVector(tuple(row))

    def __len__(self) -> int:
        return len(self.slots)


@dataclass(frozen=True)
class AffinityModel:
    """Group centers plus the VNF-to-group assignment produced by binding."""

    centers: Tuple[KpiVector, ...]
    assignment: Mapping[int, int]  # vnf_id -> group index

    def __post_init__(self):
        n = len(self.centers)
        if n < 2:
            raise ContractViolation("need at least two affinity groups")
        members = [0] * n
        for vnf_id, g in self.assignment.items():
            if not 0 <= g < n:
                raise ContractViolation(f"vnf {vnf_id} assigned to unknown group {g}")
            members[g] += 1
        if any(m == 0 for m in members):
            raise ContractViolation("every group needs at least one member")
        object.__setattr__(self, "assignment", dict(self.assignment))

    @property
    def n_groups(self) -> int:
        return len(self.centers)

    def group_of(self, vnf_id: int) -> int:
        try:
            return self.assignment[vnf_id]
        except KeyError:
            raise ContractViolation(f"unknown vnf_id {vnf_id}") from None

    def centers_array(self) -> np.ndarray:
        return np.stack([c.as_array() for c in self.centers])

    def members(self, group: int) -> Tuple[int, ...]:
        return tuple(sorted(i for i, g in self.assignment.items() if g == group))


@dataclass(frozen=True)
class ComputeNode:
    """A compute node with a per-KPI capacity vector."""

    node_id: int
    capacity: Tuple[float, ...]

    def capacity_array(self) -> np.ndarray:
        return np.asarray(self.capacity, dtype=float)


@dataclass(frozen=True)
class PlacementMap:
    """Group-to-node decisions plus the concrete VNF-to-node assignment."""

    group_to_node: Mapping[int, int]
    vnf_to_node: Mapping[int, int]

    def __post_init__(self):
        object.__setattr__(self, "group_to_node", dict(self.group_to_node))
        object.__setattr__(self, "vnf_to_node", dict(self.vnf_to_node))

    def node_of(self, vnf_id: int) -> int:
        return self.vnf_to_node[vnf_id]


@dataclass
class EpochState:
    """Mutable controller state carried across surveillance epochs.

    Single-owner: exactly one simulation run mutates an instance.
    """

    epoch_index: int = 0
    omega: int = 500
    interval_index: int = 3  # 1-based index into the monitoring interval set
    deviations_last_epoch: int = 0
    q_table: Dict[Tuple[int, int], float] = field(default_factory=dict)
    visit_counts: Dict[Tuple[int, int], int] = field(default_factory=dict)
