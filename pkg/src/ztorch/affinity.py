"""VNF affinity grouping.

The binding problem asks for N non-overlapping groups minimizing the summed
Euclidean distance of members to their group's center of gravity. It is
NP-hard, so the workhorse is a k-means variant whose centroids are snapped
to a lattice that coarsens with each iteration, forcing fast convergence.
A brute-force enumerator over surjective assignments serves as the oracle
on small instances.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Dict, List, Sequence, Tuple

import numpy as np

from .domain import AffinityModel, ContractViolation, KpiVector

Point = Tuple[int, KpiVector]

EKM_STEP_CAP = 500


@dataclass(frozen=True)
class GridSchedule:
    """Lattice spacing schedule for centroid snapping.

    The raw spacing is (100 / 2**i_count) * t**sqrt(i_count) percent, which
    underflows for large point counts and explodes for large t, so it is
    evaluated in log space and clamped to [delta_min, delta_max].
    """

    i_count: int
    delta_min: float = 1e-4
    delta_max: float = math.sqrt(3)

    def __post_init__(self):
        if not 0 < self.delta_min <= self.delta_max:
            raise ContractViolation("need 0 < delta_min <= delta_max")
        if self.i_count < 1:
            raise ContractViolation("i_count must be >= 1")

    def delta(self, t: int) -> float:
        if t <= 0:
            return self.delta_min
        # log10 of (t**sqrt(I) / 2**I), i.e. the percent form divided by 100
        log10_delta = math.sqrt(self.i_count) * math.log10(t) - self.i_count * math.log10(2.0)
        if log10_delta >= math.log10(self.delta_max):
            return self.delta_max
        if log10_delta <= math.log10(self.delta_min):
            return self.delta_min
        return 10.0 ** log10_delta


def grid_schedule_for(points_or_count, delta_max: float | None = None) -> GridSchedule:
    n = points_or_count if isinstance(points_or_count, int) else len(points_or_count)
    kwargs = {} if delta_max is None else {"delta_max": delta_max}
    return GridSchedule(i_count=max(1, n), **kwargs)


@dataclass
class GroupCountController:
    """Feedback controller for the number of affinity groups.

    Deviations shrink the group count (coarser, safer groups); two
    consecutive deviation-free epochs grow it (finer profiling).
    """

    current_n: int = 2
    min_n: int = 2
    max_n: int = 16
    stable_epochs: int = 0

    def __post_init__(self):
        if not self.min_n <= self.current_n <= self.max_n:
            raise ContractViolation("need min_n <= current_n <= max_n")

    def update(self, deviations_occurred: bool) -> int:
        if deviations_occurred:
            self.current_n = max(self.min_n, self.current_n - 1)
            self.stable_epochs = 0
        else:
            self.stable_epochs += 1
            if self.stable_epochs >= 2:
                self.current_n = min(self.max_n, self.current_n + 1)
                self.stable_epochs = 0
        return self.current_n


def update_group_count(ctl: GroupCountController, deviations_occurred: bool) -> int:
    return ctl.update(deviations_occurred)


def initial_centers(n: int, z: int) -> List[KpiVector]:
    """Seed centers spread along the main diagonal of the unit KPI cube.

    For n groups the k-th center sits at (2k - 1) / (2n) on every axis,
    so n=2 yields the 25% / 75% low and high demand prototypes.
    """
    if n < 2:
        raise ContractViolation("need at least two groups")
    if z < 1:
        raise ContractViolation("need at least one KPI dimension")
    return [KpiVector(tuple([(2 * k - 1) / (2 * n)] * z)) for k in range(1, n + 1)]


def _points_to_arrays(points: Sequence[Point]) -> Tuple[List[int], np.ndarray]:
    ids = [p[0] for p in points]
    arr = np.stack([p[1].as_array() for p in points])
    return ids, arr


def nearest_groups(centers: np.ndarray, pts: np.ndarray) -> np.ndarray:
    """Index of the closest center per point; ties go to the lowest index."""
    d2 = ((pts[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
    return np.argmin(d2, axis=1)


def _snap(centers: np.ndarray, delta: float) -> np.ndarray:
    return np.round(centers / delta) * delta


def _repair_empty_groups(assign: np.ndarray, pts: np.ndarray, centers: np.ndarray, n: int) -> None:
    """Move the globally farthest point (from its own center) into each empty group.

    Only points from groups with at least two members may be taken, so the
    partition stays total and every group ends non-empty.
    """
    for g in range(n):
        while np.count_nonzero(assign == g) == 0:
            counts = np.bincount(assign, minlength=n)
            movable = counts[assign] > 1
            if not movable.any():
                raise ContractViolation("cannot repair empty group: too few points")
            dist = np.linalg.norm(pts - centers[assign], axis=1)
            dist = np.where(movable, dist, -np.inf)
            assign[int(np.argmax(dist))] = g


def ekm(
    points: Sequence[Point],
    n: int,
    schedule: GridSchedule | None = None,
) -> Tuple[AffinityModel, int]:
    """Grid-snapped center-of-gravity binding; returns the model and step count.

    Each iteration assigns points to the nearest center, recomputes each
    group's center of gravity (the geometric median, which is what the
    binding objective actually rewards), then snaps centers onto a lattice
    whose spacing grows with the iteration counter. The loop exits when the
    snapped centers stop moving or the partition reaches a fixed point;
    a hard cap guards against pathological schedules.
    """
    if len(points) < n:
        raise ContractViolation("need at least as many points as groups")
    ids, pts = _points_to_arrays(points)
    schedule = schedule or grid_schedule_for(len(points), delta_max=math.sqrt(pts.shape[1]))
    centers = np.stack([c.as_array() for c in initial_centers(n, pts.shape[1])])

    group_ids = np.arange(n)
    prev_assign: np.ndarray | None = None
    for t in range(EKM_STEP_CAP):
        assign = nearest_groups(centers, pts)
        _repair_empty_groups(assign, pts, centers, n)
        masks = assign[None, :] == group_ids[:, None]
        gravity = geometric_medians(pts, masks)
        new_centers = np.clip(_snap(gravity, schedule.delta(t)), 0.0, 1.0)
        # Exit when the snapped centers stopped moving, or when the partition
        # reached a fixed point (further rounds only re-snap the same centers
        # onto ever coarser lattices).
        if np.array_equal(new_centers, centers) or (
            prev_assign is not None and np.array_equal(assign, prev_assign)
        ):
            steps = t + 1
            break
        prev_assign = assign
        centers = new_centers
    else:
        raise ContractViolation(f"binding did not converge within {EKM_STEP_CAP} steps")

    model = AffinityModel(
        centers=tuple(KpiVector(tuple(c)) for c in centers),
        assignment={ids[i]: int(assign[i]) for i in range(len(ids))},
    )
    return model, steps


def affinity_objective(model: AffinityModel, points: Sequence[Point]) -> float:
    """Summed member-to-center distance of the given binding."""
    centers = model.centers_array()
    total = 0.0
    for vnf_id, p in points:
        total += float(np.linalg.norm(p.as_array() - centers[model.group_of(vnf_id)]))
    return total


BRUTE_FORCE_MAX_POINTS = 12


def geometric_medians(pts: np.ndarray, masks: np.ndarray, iters: int = 400) -> np.ndarray:
    """Per-row geometric medians of masked point sets, solved in lockstep.

    ``masks`` is (S, I) boolean over the (I, Z) points; each row yields the
    point minimizing the summed Euclidean distance to its members (Weiszfeld
    iteration, smoothed near data points). The centroid only minimizes
    squared distances, so it would overstate the binding objective.
    """
    counts = masks.sum(axis=1).astype(float)
    safe = np.where(counts == 0, 1.0, counts)
    c = (masks[:, :, None] * pts[None, :, :]).sum(axis=1) / safe[:, None]
    pair_rows = counts == 2  # the segment midpoint is already optimal
    eps = 1e-12
    for _ in range(iters):
        d = np.linalg.norm(pts[None, :, :] - c[:, None, :], axis=2)
        w = masks / np.maximum(d, eps)
        denom = w.sum(axis=1)
        c_new = (w[:, :, None] * pts[None, :, :]).sum(axis=1) / np.maximum(denom, eps)[:, None]
        frozen = (denom == 0) | pair_rows
        if frozen.any():
            c_new[frozen] = c[frozen]
        if np.abs(c_new - c).max() < 1e-13:
            c = c_new
            break
        c = c_new
    return c


def masked_distance_sum(pts: np.ndarray, masks: np.ndarray, centers: np.ndarray) -> np.ndarray:
    d = np.linalg.norm(pts[None, :, :] - centers[:, None, :], axis=2)
    return (d * masks).sum(axis=1)


def brute_force_affinity(points: Sequence[Point], n: int) -> Tuple[AffinityModel, float]:
    """Exact small-instance binding by enumerating surjective assignments.

    Per-group centers are geometric medians, the true objective minimizers,
    so the returned objective lower-bounds any heuristic binding. Guarded to
    12 points; beyond that the enumeration is hopeless, which is the whole
    reason the heuristic exists.
    """
    if len(points) > BRUTE_FORCE_MAX_POINTS:
        raise ContractViolation(f"instance too large for enumeration (> {BRUTE_FORCE_MAX_POINTS})")
    if len(points) < n:
        raise ContractViolation("need at least as many points as groups")
    ids, pts = _points_to_arrays(points)
    i_count = len(ids)

    if n == 2:
        # bipartitions as bitmask rows, medians solved for all rows in one batch
        codes = np.arange(1, 2**i_count - 1)
        masks = ((codes[:, None] >> np.arange(i_count)) & 1).astype(bool)
        obj = masked_distance_sum(pts, masks, geometric_medians(pts, masks))
        obj += masked_distance_sum(pts, ~masks, geometric_medians(pts, ~masks))
        best_row = int(np.argmin(obj))
        best_obj = float(obj[best_row])
        assign = tuple(int(b) for b in ~masks[best_row])
    else:
        best: Tuple[float, Tuple[int, ...]] | None = None
        for cand in itertools.product(range(n), repeat=i_count):
            if len(set(cand)) != n:
                continue
            arr = np.asarray(cand)
            masks = arr[None, :] == np.arange(n)[:, None]
            total = float(masked_distance_sum(pts, masks, geometric_medians(pts, masks)).sum())
            if best is None or total < best[0] - 1e-15:
                best = (total, cand)
        assert best is not None
        best_obj, assign = best

    arr = np.asarray(assign)
    masks = arr[None, :] == np.arange(n)[:, None]
    centers = np.clip(geometric_medians(pts, masks), 0.0, 1.0)
    model = AffinityModel(
        centers=tuple(KpiVector(tuple(c)) for c in centers),
        assignment={ids[i]: int(assign[i]) for i in range(i_count)},
    )
    return model, best_obj


def detect_deviations(model: AffinityModel, snapshot: Sequence[Point]) -> List[int]:
    """IDs whose nearest center in the snapshot differs from their stored group."""
    if not snapshot:
        return []
    ids, pts = _points_to_arrays(snapshot)
    stored = np.asarray([model.group_of(i) for i in ids])
    nearest = nearest_groups(model.centers_array(), pts)
    return [ids[i] for i in range(len(ids)) if nearest[i] != stored[i]]


def count_deviations_array(centers: np.ndarray, stored: np.ndarray, pts: np.ndarray) -> np.ndarray:
    """Vectorized deviation mask used by the simulation hot loop."""
    return nearest_groups(centers, pts) != stored
