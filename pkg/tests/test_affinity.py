import math

import numpy as np
import pytest

from ztorch.affinity import (
    GridSchedule,
    GroupCountController,
    affinity_objective,
    brute_force_affinity,
    detect_deviations,
    ekm,
    grid_schedule_for,
    initial_centers,
    update_group_count,
)
from ztorch.domain import ContractViolation, kpi


def pts(*vectors):
    return [(i, kpi(*v)) for i, v in enumerate(vectors)]


# ---------------------------------------------------------------- centers

def test_initial_centers_n2():
    got = {c.values for c in initial_centers(2, 3)}
    assert got == {(0.25, 0.25, 0.25), (0.75, 0.75, 0.75)}


def test_initial_centers_rejects_n1():
    with pytest.raises(ContractViolation):
        initial_centers(1, 3)


def test_initial_centers_n4_z2():
    got = sorted(c.values[0] for c in initial_centers(4, 2))
    assert got == pytest.approx([0.125, 0.375, 0.625, 0.875])
    for c in initial_centers(4, 2):
        assert c.values[0] == c.values[1]


# ---------------------------------------------------------------- schedule

def test_grid_schedule_monotone_after_t1():
    sched = grid_schedule_for(20)
    deltas = [sched.delta(t) for t in range(1, 40)]
    for a, b in zip(deltas, deltas[1:]):
        # strictly increasing except while pinned at a clamp bound
        assert b > a or (a == b == sched.delta_max) or (a == b == sched.delta_min)
    assert deltas[-1] == sched.delta_max  # the lattice does coarsen eventually


def test_grid_schedule_clamps():
    sched = GridSchedule(i_count=400, delta_min=1e-4, delta_max=1.0)
    assert sched.delta(0) == 1e-4
    assert sched.delta(1) == 1e-4  # 2**-400 underflows the floor
    assert sched.delta(10**9) == 1.0


def test_grid_schedule_validation():
    with pytest.raises(ContractViolation):
        GridSchedule(i_count=5, delta_min=0.5, delta_max=0.1)


# ---------------------------------------------------------------- ekm

def two_cluster_points():
    lows = [(-0.03, 0.02, 0.01), (0.01, -0.02, 0.03), (0.02, 0.01, -0.01), (-0.01, 0.0, 0.02)]
    highs = lows[::-1]
    out = []
    for k, off in enumerate(lows):
        out.append((k, kpi(*(0.2 + o for o in off))))
    for k, off in enumerate(highs):
        out.append((4 + k, kpi(*(0.8 + o for o in off))))
    return out


def test_ekm_separates_clusters_and_matches_oracle():
    points = two_cluster_points()
    model, steps = ekm(points, 2)
    low_groups = {model.group_of(i) for i in range(4)}
    high_groups = {model.group_of(i) for i in range(4, 8)}
    assert len(low_groups) == 1 and len(high_groups) == 1
    assert low_groups != high_groups
    assert steps <= 50
    _, oracle_obj = brute_force_affinity(points, 2)
    assert affinity_objective(model, points) >= oracle_obj - 1e-12


def test_ekm_identical_points_empty_group_repair():
    points = [(i, kpi(0.5, 0.5, 0.5)) for i in range(5)]
    model, _ = ekm(points, 2)
    sizes = sorted(len(model.members(g)) for g in range(2))
    assert sizes == [1, 4]
    assert affinity_objective(model, points) == pytest.approx(0.0, abs=1e-12)


def test_ekm_singleton_groups():
    points = pts((0.1, 0.1), (0.5, 0.5), (0.9, 0.9))
    model, _ = ekm(points, 3)
    assert sorted(len(model.members(g)) for g in range(3)) == [1, 1, 1]
    assert affinity_objective(model, points) < 0.05


def test_ekm_assignment_is_nearest_center():
    rng = np.random.default_rng(11)
    points = [(i, kpi(*rng.random(2))) for i in range(20)]
    model, _ = ekm(points, 3)
    centers = model.centers_array()
    for vnf_id, p in points:
        d = np.linalg.norm(centers - p.as_array(), axis=1)
        assert d[model.group_of(vnf_id)] <= d.min() + 1e-12


def test_ekm_requires_enough_points():
    with pytest.raises(ContractViolation):
        ekm(pts((0.1, 0.1)), 2)


# ---------------------------------------------------------------- objective

def test_objective_zero_at_centers():
    points = pts((0.25, 0.25), (0.75, 0.75))
    model, _ = ekm(points, 2)
    assert affinity_objective(model, points) == pytest.approx(0.0, abs=1e-9)


def test_objective_two_points_one_center():
    from ztorch.domain import AffinityModel

    model = AffinityModel(
        centers=(kpi(0.5, 0.5), kpi(0.9, 0.9)),
        assignment={0: 0, 1: 0, 2: 1},
    )
    points = [(0, kpi(0.4, 0.5)), (1, kpi(0.6, 0.5)), (2, kpi(0.9, 0.9))]
    # both are 0.1 away from the shared center, total distance d = 0.2
    assert affinity_objective(model, points) == pytest.approx(0.2, abs=1e-12)


# ---------------------------------------------------------------- brute force

def test_brute_force_trivial_singletons():
    points = pts((0.1, 0.1), (0.5, 0.5), (0.9, 0.9))
    _, obj = brute_force_affinity(points, 3)
    assert obj == pytest.approx(0.0, abs=1e-12)


def test_brute_force_collinear_split():
    points = pts((0.0, 0.0), (0.1, 0.0), (0.9, 0.0))
    model, obj = brute_force_affinity(points, 2)
    assert model.group_of(0) == model.group_of(1) != model.group_of(2)
    assert obj == pytest.approx(0.1, abs=1e-12)


def test_brute_force_guard():
    points = [(i, kpi(0.1, 0.1)) for i in range(13)]
    with pytest.raises(ContractViolation):
        brute_force_affinity(points, 2)


def test_ekm_within_110_percent_of_oracle():
    rng = np.random.default_rng(2024)
    hits = 0
    for _ in range(100):
        n_points = int(rng.integers(4, 9))
        points = [(i, kpi(*rng.random(2))) for i in range(n_points)]
        model, _ = ekm(points, 2)
        obj = affinity_objective(model, points)
        _, best = brute_force_affinity(points, 2)
        assert obj >= best - 1e-12
        if obj <= 1.10 * best + 1e-12:
            hits += 1
    assert hits >= 95


# ---------------------------------------------------------------- deviations

def test_detect_deviations_fixed_point():
    points = two_cluster_points()
    model, _ = ekm(points, 2)
    assert detect_deviations(model, points) == []


def test_detect_deviations_forced():
    points = two_cluster_points()
    model, _ = ekm(points, 2)
    other = model.centers[1 - model.group_of(0)]
    moved = [(0, other)] + points[1:]
    assert detect_deviations(model, moved) == [0]


def test_detect_deviations_drift_case():
    from ztorch.domain import AffinityModel

    model = AffinityModel(
        centers=(kpi(0.25, 0.25, 0.25), kpi(0.75, 0.75, 0.75)),
        assignment={0: 0, 1: 1},
    )
    snapshot = [(0, kpi(0.6, 0.6, 0.6)), (1, kpi(0.75, 0.75, 0.75))]
    # 0.6 is 0.26 from the high center vs 0.61 from its stored low center
    assert detect_deviations(model, snapshot) == [0]


def test_detect_deviations_unknown_id():
    points = two_cluster_points()
    model, _ = ekm(points, 2)
    with pytest.raises(ContractViolation):
        detect_deviations(model, [(999, kpi(0.5, 0.5, 0.5))])


# ---------------------------------------------------------------- controller

def test_group_count_floor():
    ctl = GroupCountController(current_n=2, max_n=8)
    assert update_group_count(ctl, True) == 2


def test_group_count_grows_after_two_stable_epochs():
    ctl = GroupCountController(current_n=5, max_n=8)
    assert update_group_count(ctl, False) == 5
    assert update_group_count(ctl, False) == 6
    assert ctl.stable_epochs == 0


def test_group_count_decrement_resets_counter():
    ctl = GroupCountController(current_n=5, max_n=8, stable_epochs=1)
    assert update_group_count(ctl, True) == 4
    assert ctl.stable_epochs == 0


def test_group_count_ceiling():
    ctl = GroupCountController(current_n=8, max_n=8)
    update_group_count(ctl, False)
    assert update_group_count(ctl, False) == 8
