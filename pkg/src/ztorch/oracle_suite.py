"""Brute-force cross-checks for the binding and placement heuristics.

Each suite pits a production code path against an independent enumeration
on instances small enough to solve exactly, and writes a pass/fail report.
Instance generators mimic the VNF profile workload: a few clustered demand
prototypes with multiplicative spread and additive noise.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Sequence, Tuple

import numpy as np

from .affinity import affinity_objective, brute_force_affinity, ekm, nearest_groups
from .domain import ComputeNode, KpiVector, kpi
from .placement import LOG_EPSILON, PlacementProblem, solve_group_placement

CLUSTERING_INSTANCES = 100
PLACEMENT_INSTANCES = 200


@dataclass
class SuiteResult:
    name: str
    instances: int
    failures: int
    elapsed_s: float
    details: List[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.failures == 0


def random_profile_points(
    rng: np.random.Generator, n_points: int, z: int = 2
) -> List[Tuple[int, KpiVector]]:
    """Cluster-structured random instance shaped like real VNF profiles."""
    prototypes = np.array([[0.08] * z, [0.75] * z])
    pts = []
    for i in range(n_points):
        proto = prototypes[int(rng.integers(len(prototypes)))]
        mult = 1.0 + rng.pareto(3.0, size=z)
        noisy = proto * mult * 0.6 + rng.normal(0.0, 0.04, size=z)
        pts.append((i, KpiVector(tuple(np.clip(noisy, 0.0, 1.0)))))
    return pts


def clustering_suite(
    seed: int = 0,
    instances: int = CLUSTERING_INSTANCES,
    ratio_bound: float = 1.10,
    min_within_bound: int = 95,
    _faulty_tie_break: bool = False,
) -> SuiteResult:
    """ekm vs exhaustive binding on I <= 8, Z = 2, N = 2 instances.

    Checks that the heuristic never beats the exact optimum and stays within
    ratio_bound of it on at least min_within_bound instances. The hidden
    flag deliberately corrupts the comparison so tests can prove the suite
    catches regressions.
    """
    rng = np.random.default_rng(seed)
    start = time.perf_counter()
    failures = 0
    within = 0
    details: List[str] = []
    for k in range(instances):
        n_points = int(rng.integers(4, 9))
        points = random_profile_points(rng, n_points)
        model, _steps = ekm(points, 2)
        obj = affinity_objective(model, points)
        if _faulty_tie_break:
            obj -= 0.05  # corrupt the measured objective on purpose
        _, best = brute_force_affinity(points, 2)
        if obj < best - 1e-9:
            failures += 1
            details.append(f"instance {k}: heuristic {obj:.6f} beat optimum {best:.6f}")
        if obj <= ratio_bound * best + 1e-12:
            within += 1
    if within < min_within_bound:
        failures += 1
        details.append(f"only {within}/{instances} instances within {ratio_bound:.2f}x of optimum")
    return SuiteResult("clustering", instances, failures, time.perf_counter() - start, details)


def _enumerate_group_placement(
    centers: Sequence[KpiVector], nodes: Sequence[ComputeNode]
) -> Tuple[float, Dict[int, int]]:
    """Independent exhaustive solver used only as an oracle."""
    import itertools
    import math

    demands = [c.as_array() for c in centers]
    masses = [float(d.sum()) for d in demands]
    caps = [n.capacity_array() for n in nodes]
    n_nodes = len(nodes)
    best_obj, best_map = -math.inf, {}
    for combo in itertools.product(range(n_nodes + 1), repeat=len(centers)):
        loads = [np.zeros_like(caps[0]) for _ in range(n_nodes)]
        ok = True
        for g, node in enumerate(combo):
            if node == n_nodes:
                continue
            loads[node] = loads[node] + demands[g]
            if np.any(loads[node] > caps[node] + 1e-12):
                ok = False
                break
        if not ok:
            continue
        obj = sum(math.log(LOG_EPSILON + float(l.sum())) for l in loads)
        if obj > best_obj + 1e-12:
            best_obj = obj
            best_map = {g: c for g, c in enumerate(combo) if c != n_nodes}
    return best_obj, best_map


def placement_suite(seed: int = 0, instances: int = PLACEMENT_INSTANCES) -> SuiteResult:
    """solve_group_placement vs exhaustive enumeration on N <= 4, L <= 3."""
    import math

    rng = np.random.default_rng(seed)
    start = time.perf_counter()
    failures = 0
    details: List[str] = []
    for k in range(instances):
        n = int(rng.integers(1, 5))
        l = int(rng.integers(1, 4))
        centers = tuple(kpi(*rng.uniform(0.05, 0.6, size=3)) for _ in range(n))
        nodes = tuple(
            ComputeNode(i, tuple(rng.uniform(0.3, 1.2, size=3))) for i in range(l)
        )
        got = solve_group_placement(PlacementProblem(centers, nodes))
        want_obj, _ = _enumerate_group_placement(centers, nodes)
        loads = [0.0] * l
        caps = [node.capacity_array().copy() for node in nodes]
        valid = True
        for g, node in got.items():
            caps[node] -= centers[g].as_array()
            loads[node] += float(centers[g].as_array().sum())
            if np.any(caps[node] < -1e-9):
                valid = False
        got_obj = sum(math.log(LOG_EPSILON + x) for x in loads)
        if not valid:
            failures += 1
            details.append(f"instance {k}: solver violated capacity")
        elif abs(got_obj - want_obj) > 1e-9:
            failures += 1
            details.append(f"instance {k}: solver {got_obj:.9f} != enumeration {want_obj:.9f}")
    return SuiteResult("placement", instances, failures, time.perf_counter() - start, details)


def optimum_suite(seed: int = 0) -> SuiteResult:
    """Exact clairvoyant baseline on hand-built traces with known answers."""
    from .baselines import exact_optimum_migrations

    start = time.perf_counter()
    failures = 0
    details: List[str] = []

    # Three VNFs on two unit nodes; demands force exactly one migration:
    # the pair that can share a node changes after the first decision window.
    high, low = 0.6, 0.25
    window = 4
    demands = np.zeros((8, 3, 1))
    demands[:window, 0, 0] = high
    demands[:window, 1, 0] = high
    demands[:window, 2, 0] = low
    demands[window:, 0, 0] = high
    demands[window:, 1, 0] = low
    demands[window:, 2, 0] = high
    caps = np.full((2, 1), 1.0)
    got = exact_optimum_migrations(demands, caps, decision_every=window)
    if got != 1:
        failures += 1
        details.append(f"forced-migration trace: expected 1, got {got}")

    # A constant trace needs no migrations at all.
    flat = np.full((6, 3, 1), 0.2)
    got_flat = exact_optimum_migrations(flat, caps, decision_every=3)
    if got_flat != 0:
        failures += 1
        details.append(f"constant trace: expected 0, got {got_flat}")

    return SuiteResult("optimum", 2, failures, time.perf_counter() - start, details)


def run_all(seed: int = 0, _faulty_tie_break: bool = False) -> List[SuiteResult]:
    return [
        clustering_suite(seed, _faulty_tie_break=_faulty_tie_break),
        placement_suite(seed),
        optimum_suite(seed),
    ]


def format_report(results: Sequence[SuiteResult]) -> str:
    lines = ["suite,instances,failures,elapsed_s,status"]
    for r in results:
        status = "pass" if r.passed else "fail"
        lines.append(f"{r.name},{r.instances},{r.failures},{r.elapsed_s:.3f},{status}")
    for r in results:
        for d in r.details:
            lines.append(f"# {r.name}: {d}")
    return "\n".join(lines) + "\n"
