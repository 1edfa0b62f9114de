"""Proactive VNF placement.

Two stages: an exact solver assigns whole affinity groups to compute nodes
(maximizing a log-fair load objective under per-KPI capacities), then a
first-fit-decreasing pass schedules individual VNFs, most volatile first,
onto their group's node with overflow spilling to nodes in index order.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .domain import AffinityModel, ComputeNode, ContractViolation, KpiVector, PlacementMap

LOG_EPSILON = 1e-6
OBJ_TOL = 1e-12
SOLVER_MAX_GROUPS = 12
ENUMERATION_MAX_GROUPS = 6


class InfeasiblePlacement(RuntimeError):
    def __init__(self, vnf_id: int, message: str | None = None):
        self.vnf_id = vnf_id
        super().__init__(message or f"no node can host vnf {vnf_id}")


@dataclass(frozen=True)
class PlacementProblem:
    centers: Tuple[KpiVector, ...]
    nodes: Tuple[ComputeNode, ...]

    def __post_init__(self):
        if len(self.centers) < 1 or len(self.nodes) < 1:
            raise ContractViolation("need at least one group and one node")
        if len(self.centers) > SOLVER_MAX_GROUPS:
            raise ContractViolation(f"group placement guarded to {SOLVER_MAX_GROUPS} groups")


@dataclass(frozen=True)
class VnfVariance:
    vnf_id: int
    v: float

    def __post_init__(self):
        if self.v < 0:
            raise ContractViolation("variance metric must be >= 0")


def _objective(loads_l1: np.ndarray) -> float:
    return float(np.log(LOG_EPSILON + loads_l1).sum())


class _Candidate:
    """Incumbent tracking with the documented tie preferences."""

    def __init__(self, n_nodes: int):
        self.obj = -math.inf
        self.assigned = -1
        self.lex: Tuple[int, ...] = ()
        self.unassigned_sentinel = n_nodes

    def offer(self, obj: float, assignment: Sequence[Optional[int]]) -> None:
        lex = tuple(self.unassigned_sentinel if a is None else a for a in assignment)
        assigned = sum(1 for a in assignment if a is not None)
        if obj > self.obj + OBJ_TOL:
            better = True
        elif obj < self.obj - OBJ_TOL:
            better = False
        else:
            better = (assigned, [-x for x in lex]) > (self.assigned, [-x for x in self.lex])
        if better:
            self.obj, self.assigned, self.lex = obj, assigned, lex


def _enumerate(masses: np.ndarray, demands: np.ndarray, caps: np.ndarray) -> _Candidate:
    n, n_nodes = len(masses), len(caps)
    best = _Candidate(n_nodes)
    for combo in itertools.product(range(n_nodes + 1), repeat=n):
        loads = np.zeros_like(caps)
        l1 = np.zeros(n_nodes)
        ok = True
        for g, node in enumerate(combo):
            if node == n_nodes:
                continue
            loads[node] += demands[g]
            l1[node] += masses[g]
            if np.any(loads[node] > caps[node] + 1e-12):
                ok = False
                break
        if ok:
            best.offer(_objective(l1), [None if c == n_nodes else c for c in combo])
    return best


def _branch_and_bound(masses: np.ndarray, demands: np.ndarray, caps: np.ndarray) -> _Candidate:
    n, n_nodes = len(masses), len(caps)
    best = _Candidate(n_nodes)
    # Marginal gain of giving a group a fresh node; co-locating can only gain less.
    fresh_gain = np.log(LOG_EPSILON + masses) - math.log(LOG_EPSILON)
    suffix_gain = np.concatenate([np.cumsum(fresh_gain[::-1])[::-1], [0.0]])

    loads = np.zeros_like(caps)
    l1 = np.zeros(n_nodes)
    assignment: List[Optional[int]] = [None] * n

    cap_keys = [tuple(caps[l]) for l in range(n_nodes)]

    def current_obj() -> float:
        return float(np.log(LOG_EPSILON + l1).sum())

    def recurse(g: int) -> None:
        if g == n:
            best.offer(current_obj(), assignment)
            return
        if current_obj() + suffix_gain[g] < best.obj - OBJ_TOL:
            return
        seen_empty_caps = set()
        for node in range(n_nodes):
            empty = l1[node] == 0.0
            if empty:
                # identical empty nodes are interchangeable; keep the lowest index
                if cap_keys[node] in seen_empty_caps:
                    continue
                seen_empty_caps.add(cap_keys[node])
            if np.any(loads[node] + demands[g] > caps[node] + 1e-12):
                continue
            loads[node] += demands[g]
            l1[node] += masses[g]
            assignment[g] = node
            recurse(g + 1)
            assignment[g] = None
            loads[node] -= demands[g]
            l1[node] -= masses[g]
        # leaving the group unassigned is always admissible
        recurse(g + 1)

    recurse(0)
    return best


def solve_group_placement(prob: PlacementProblem) -> Dict[int, int]:
    """Exact group-to-node assignment maximizing log-fair node loads.

    Among optima, prefers assigning more groups, then the lexicographically
    smallest assignment vector. Groups that fit nowhere are left out of the
    returned map.
    """
    demands = np.stack([c.as_array() for c in prob.centers])
    masses = demands.sum(axis=1)
    caps = np.stack([node.capacity_array() for node in prob.nodes])
    n, n_nodes = len(prob.centers), len(prob.nodes)
    if n <= ENUMERATION_MAX_GROUPS and (n_nodes + 1) ** n <= 2 * 10**5:
        best = _enumerate(masses, demands, caps)
    else:
        best = _branch_and_bound(masses, demands, caps)
    return {g: node for g, node in enumerate(best.lex) if node != n_nodes}


def compute_variances(
    window: Sequence[Tuple[int, Mapping[int, KpiVector]]] | Sequence[Tuple[int, np.ndarray]],
    model: AffinityModel,
    vnf_ids: Sequence[int] | None = None,
) -> List[VnfVariance]:
    """Max distance of each VNF's windowed samples to its group center.

    The window holds (slot, readings) pairs; readings are either a mapping
    vnf_id -> KpiVector or an (I, Z) array aligned with ``vnf_ids``.
    """
    if not window:
        raise ContractViolation("variance window must not be empty")
    centers = model.centers_array()
    first = window[0][1]
    if isinstance(first, np.ndarray):
        if vnf_ids is None:
            raise ContractViolation("array windows need an explicit vnf_id order")
        stored = np.asarray([model.group_of(i) for i in vnf_ids])
        v = np.zeros(len(vnf_ids))
        for _, arr in window:
            d = np.linalg.norm(arr - centers[stored], axis=1)
            np.maximum(v, d, out=v)
        return [VnfVariance(i, float(v[k])) for k, i in enumerate(vnf_ids)]
    acc: Dict[int, float] = {}
    for _, readings in window:
        for vnf_id, k in readings.items():
            d = float(np.linalg.norm(k.as_array() - centers[model.group_of(vnf_id)]))
            acc[vnf_id] = max(acc.get(vnf_id, 0.0), d)
    return [VnfVariance(i, acc[i]) for i in sorted(acc)]


def aavs_place(
    model: AffinityModel,
    variances: Sequence[VnfVariance],
    group_map: Mapping[int, int],
    latest_kpis: Mapping[int, KpiVector],
    nodes: Sequence[ComputeNode],
) -> PlacementMap:
    """First-fit-decreasing VNF scheduling guided by affinity groups.

    Buckets VNFs per group sorted by falling variance, then round-robins
    over groups placing each group's next fitting VNF onto its mapped node
    (groups without a mapping start at node 0). Leftovers overflow to nodes
    in increasing index order. Capacity is checked against the latest
    sampled KPI vector and never exceeded at placement time.
    """
    v_of = {vv.vnf_id: vv.v for vv in variances}
    demand = {i: k.as_array() for i, k in latest_kpis.items()}
    caps = np.stack([node.capacity_array() for node in nodes])
    residual = caps.copy()

    buckets: Dict[int, List[int]] = {g: [] for g in range(model.n_groups)}
    for vnf_id in model.assignment:
        if vnf_id not in demand:
            raise ContractViolation(f"latest_kpis missing vnf {vnf_id}")
        buckets[model.group_of(vnf_id)].append(vnf_id)
    for g in buckets:
        buckets[g].sort(key=lambda i: (-v_of.get(i, 0.0), i))

    placed: Dict[int, int] = {}
    cursor = {g: 0 for g in buckets}
    remaining = {g: list(b) for g, b in buckets.items()}

    # Mapped-node phase: one placement per group per pass, skipping VNFs
    # that no longer fit (residuals only shrink, so skips are permanent).
    progress = True
    while progress:
        progress = False
        for g in sorted(buckets):
            node = group_map.get(g, 0)
            bucket = remaining[g]
            j = cursor[g]
            while j < len(bucket):
                vnf_id = bucket[j]
                if np.all(demand[vnf_id] <= residual[node] + 1e-12):
                    residual[node] = residual[node] - demand[vnf_id]
                    placed[vnf_id] = node
                    bucket.pop(j)
                    progress = True
                    break
                j += 1
            cursor[g] = j

    # Overflow phase: remaining VNFs take the first node with room.
    for g in sorted(buckets):
        for vnf_id in remaining[g]:
            fits = np.all(demand[vnf_id] <= residual + 1e-12, axis=1)
            hit = np.flatnonzero(fits)
            if hit.size == 0:
                raise InfeasiblePlacement(vnf_id)
            node = int(hit[0])
            residual[node] = residual[node] - demand[vnf_id]
            placed[vnf_id] = node

    return PlacementMap(group_to_node=dict(group_map), vnf_to_node=placed)


def count_migrations(prev: PlacementMap, new: PlacementMap) -> int:
    """VNFs whose node changed; VNFs absent from prev count as first placements."""
    moved = 0
    for vnf_id, node in new.vnf_to_node.items():
        old = prev.vnf_to_node.get(vnf_id)
        if old is not None and old != node:
            moved += 1
    return moved


def placement_loads(pmap: PlacementMap, kpis: Mapping[int, KpiVector], n_nodes: int) -> np.ndarray:
    """Aggregate per-node load of a placement under the given KPI readings."""
    z = len(next(iter(kpis.values()))) if kpis else 0
    loads = np.zeros((n_nodes, z))
    for vnf_id, node in pmap.vnf_to_node.items():
        loads[node] += kpis[vnf_id].as_array()
    return loads
