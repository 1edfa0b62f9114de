"""Adaptive surveillance-epoch and monitoring-frequency control.

A small tabular Q-learner picks how much to stretch or shrink the next
surveillance epoch based on how many profile deviations the last one saw.
The learning rate is 0.5 / visit_count per (state, action) cell, the table
starts at zero, and exploration is plain epsilon-greedy. The monitoring
interval follows a deterministic three-branch rule instead.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Sequence, Tuple

import numpy as np

from .domain import ContractViolation, EpochState

MONITORING_INTERVALS: Tuple[int, ...] = (2, 5, 10, 20, 50)
DEFAULT_INTERVAL_INDEX = 3  # 1-based; restores to an interval of 10 slots


@dataclass(frozen=True)
class QLearningConfig:
    beta: float = 0.5  # reward exponent, <= 1
    psi: float = 0.9  # discount
    phi: float = 0.5  # exploration probability
    step_size: int = 50  # slots per action unit
    action_multipliers: Tuple[int, ...] = (-2, -1, 0, 1, 2)
    state_buckets: Tuple[int, ...] = (1, 3, 10)  # bucket edges over deviation counts
    omega_min: int = 100
    omega_max: int = 2000

    def __post_init__(self):
        if not 0 < self.psi <= 1:
            raise ContractViolation("need 0 < psi <= 1")
        if not 0 <= self.phi <= 1:
            raise ContractViolation("need 0 <= phi <= 1")
        if self.beta > 1:
            raise ContractViolation("need beta <= 1")
        if self.step_size < 1:
            raise ContractViolation("need step_size >= 1")
        if not self.action_multipliers:
            raise ContractViolation("need a non-empty action set")
        if self.omega_min < min(MONITORING_INTERVALS):
            raise ContractViolation("omega_min must cover one monitoring interval")
        if self.omega_min > self.omega_max:
            raise ContractViolation("need omega_min <= omega_max")

    def bucket(self, j: int) -> int:
        """Discretize a deviation count into a state index."""
        for idx, edge in enumerate(self.state_buckets):
            if j < edge:
                return idx
        return len(self.state_buckets)

    def clamp_omega(self, omega: int) -> int:
        return min(self.omega_max, max(self.omega_min, omega))


def reward(omega: int, j: int, beta: float) -> float:
    """Epoch reward: length over (deviations + 1) ** beta.

    The +1 regularizer keeps a zero-deviation epoch meaningful and still
    distinguishes it from a single-deviation one.
    """
    if omega <= 0:
        raise ContractViolation("omega must be positive")
    if j < 0:
        raise ContractViolation("deviation count must be >= 0")
    return omega / float((j + 1) ** beta)


def q_update(
    state: int,
    action: int,
    r: float,
    next_state: int,
    q_table: Dict[Tuple[int, int], float],
    visit_counts: Dict[Tuple[int, int], int],
    psi: float,
    actions: Sequence[int],
) -> float:
    """One tabular update; the visit count is bumped first so alpha = 0.5 / i."""
    key = (state, action)
    visit_counts[key] = visit_counts.get(key, 0) + 1
    alpha = 0.5 / visit_counts[key]
    q_max = max(q_table.get((next_state, a), 0.0) for a in actions)
    new_q = (1 - alpha) * q_table.get(key, 0.0) + alpha * (r + psi * q_max)
    q_table[key] = new_q
    return new_q


def select_action(
    state: int,
    q_table: Dict[Tuple[int, int], float],
    cfg: QLearningConfig,
    rng: np.random.Generator,
) -> int:
    """Epsilon-greedy action pick; greedy ties go to the smallest multiplier."""
    actions = cfg.action_multipliers
    if rng.random() < cfg.phi:
        return int(actions[rng.integers(len(actions))])
    best = min(actions)
    best_q = q_table.get((state, best), 0.0)
    for a in actions:
        q = q_table.get((state, a), 0.0)
        if q > best_q:
            best, best_q = a, q
    return int(best)


def update_monitoring_interval(
    state: EpochState,
    deviations_occurred: bool,
    rebind_performed: bool,
    n_intervals: int = len(MONITORING_INTERVALS),
    default_index: int = DEFAULT_INTERVAL_INDEX,
) -> int:
    """Three-branch monitoring frequency rule, evaluated at decisional points.

    A re-profiling resets the interval to the default; otherwise deviations
    speed monitoring up one notch and quiet epochs slow it down one notch.
    """
    idx = state.interval_index
    if not 1 <= idx <= n_intervals:
        raise ContractViolation("interval index out of bounds")
    if rebind_performed:
        return default_index
    if deviations_occurred:
        return max(1, idx - 1)
    return min(n_intervals, idx + 1)


class EpochController:
    """Owns the Q-table and monitoring index for one simulation run."""

    def __init__(self, cfg: QLearningConfig, initial_omega: int, initial_interval_index: int,
                 rng: np.random.Generator, intervals: Sequence[int] = MONITORING_INTERVALS):
        self.cfg = cfg
        self.intervals = tuple(intervals)
        self.state = EpochState(omega=cfg.clamp_omega(initial_omega),
                                interval_index=initial_interval_index)
        self.rng = rng
        self._prev: Tuple[int, int] | None = None  # (state bucket, action) awaiting reward

    @property
    def omega(self) -> int:
        return self.state.omega

    @property
    def interval(self) -> int:
        return self.intervals[self.state.interval_index - 1]

    def end_epoch(self, elapsed: int, j: int, rebind_performed: bool) -> None:
        """Close out one epoch: reward the pending action, pick the next one."""
        cfg = self.cfg
        next_bucket = cfg.bucket(j)
        if self._prev is not None:
            r = reward(elapsed, j, cfg.beta)
            q_update(self._prev[0], self._prev[1], r, next_bucket,
                     self.state.q_table, self.state.visit_counts, cfg.psi,
                     cfg.action_multipliers)
        action = select_action(next_bucket, self.state.q_table, cfg, self.rng)
        self._prev = (next_bucket, action)
        self.state.omega = cfg.clamp_omega(self.state.omega + action * cfg.step_size)
        self.state.interval_index = update_monitoring_interval(
            self.state, j > 0, rebind_performed, n_intervals=len(self.intervals))
        self.state.deviations_last_epoch = j
        self.state.epoch_index += 1

    def dump_q_table(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["state_bucket", "action_k", "q_value", "visits"])
            for (s, a) in sorted(self.state.q_table):
                writer.writerow([s, a, repr(self.state.q_table[(s, a)]),
                                 self.state.visit_counts.get((s, a), 0)])
