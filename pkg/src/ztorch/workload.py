"""Synthetic VNF workload generation.

Every VNF gets a mean profile drawn from a Pareto distribution whose scale
is one of the measured OpenEPC baseline profiles; per-slot readings then
jitter around that mean with normal noise of standard deviation sigma,
clamped into [0, 1]. A fixed seed reproduces a trace bit for bit.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Sequence, Tuple

import numpy as np

from .domain import ContractViolation, DEFAULT_KPI_DIMS, KpiVector, VnfTrace


class ConfigError(ValueError):
    """Bad workload or scenario configuration."""


@dataclass(frozen=True)
class BaselineProfile:
    """One measured VNF profile: mean utilization per KPI, normalized."""

    name: str
    demand_class: str  # "low" or "high"
    kpi_means: KpiVector


# Measured OpenEPC KPI means, normalized from percent.
# KPI order: (storage/memory, cpu, network).
OPENEPC_BASELINES: Dict[Tuple[str, str], BaselineProfile] = {
    (name, cls): BaselineProfile(name, cls, KpiVector(means))
    for name, cls, means in [
        ("MME", "low", (0.159, 0.177, 0.058)),
        ("MME", "high", (0.038, 0.029, 0.019)),
        ("S-GW", "low", (0.003, 0.007, 0.0014)),
        ("S-GW", "high", (0.033, 0.791, 0.912)),
        ("HSS", "low", (0.011, 0.009, 0.007)),
        ("HSS", "high", (0.045, 0.029, 0.013)),
        ("PCRF", "low", (0.006, 0.012, 0.005)),
        ("PCRF", "high", (0.039, 0.019, 0.009)),
        ("PDN-GW", "low", (0.021, 0.017, 0.008)),
        ("PDN-GW", "high", (0.372, 0.531, 0.920)),
    ]
}

# Default 5-profile population: spans near-idle (HSS low) up to
# heavily loaded gateways (PDN-GW high).
DEFAULT_BASELINE_KEYS: Tuple[Tuple[str, str], ...] = (
    ("MME", "low"),
    ("S-GW", "high"),
    ("HSS", "low"),
    ("PCRF", "low"),
    ("PDN-GW", "high"),
)


def default_baselines(n: int = 5) -> List[BaselineProfile]:
    if not 1 <= n <= len(DEFAULT_BASELINE_KEYS):
        raise ConfigError(f"n_baselines must be in 1..{len(DEFAULT_BASELINE_KEYS)}")
    return [OPENEPC_BASELINES[k] for k in DEFAULT_BASELINE_KEYS[:n]]


@dataclass(frozen=True)
class WorkloadConfig:
    n_vnfs: int = 1000
    n_baselines: int = 5
    sigma: float = 0.1  # per-slot std dev, normalized units
    pareto_shape: float = 3.0
    horizon: int = 500_000
    seed: int = 0

    def __post_init__(self):
        if self.n_vnfs < self.n_baselines or self.n_baselines < 1:
            raise ConfigError("need n_vnfs >= n_baselines >= 1")
        if self.sigma < 0:
            raise ConfigError("sigma must be >= 0")
        if self.horizon < 1:
            raise ConfigError("horizon must be >= 1")
        if self.pareto_shape <= 0:
            raise ConfigError("pareto_shape must be > 0")


def draw_vnf_population(
    cfg: WorkloadConfig,
    baselines: Sequence[BaselineProfile],
    rng: np.random.Generator,
) -> np.ndarray:
    """Draw one mean KPI vector per VNF; returns an (I, Z) array.

    Baselines are assigned round-robin. Each KPI mean is a classic Pareto
    draw (support starts at the baseline value), capped at 1.0.
    """
    if not baselines:
        raise ConfigError("baseline list must not be empty")
    scales = np.stack([b.kpi_means.as_array() for b in baselines])
    z = scales.shape[1]
    idx = np.arange(cfg.n_vnfs) % len(baselines)
    # rng.pareto is the Lomax form; 1 + pareto gives the classic form with
    # multiplicative support [1, inf).
    mult = 1.0 + rng.pareto(cfg.pareto_shape, size=(cfg.n_vnfs, z))
    means = scales[idx] * mult
    return np.clip(means, 0.0, 1.0)


def sample_slot(vnf_mean: KpiVector, sigma: float, rng: np.random.Generator) -> KpiVector:
    """One monitored reading: normal noise around the mean, clamped."""
    if sigma < 0:
        raise ConfigError("sigma must be >= 0")
    mean = vnf_mean.as_array()
    draw = mean if sigma == 0 else rng.normal(mean, sigma)
    return KpiVector(tuple(np.clip(draw, 0.0, 1.0)))


def sample_block(
    means: np.ndarray, sigma: float, n_slots: int, rng: np.random.Generator
) -> np.ndarray:
    """Vectorized form of sample_slot: (n_slots, I, Z) readings for all VNFs."""
    if sigma == 0:
        return np.broadcast_to(means, (n_slots,) + means.shape).copy()
    noise = rng.normal(0.0, sigma, size=(n_slots,) + means.shape)
    return np.clip(means + noise, 0.0, 1.0)


def make_rngs(seed: int, n: int = 3) -> List[np.random.Generator]:
    """Independent child generators so trace and policy draws never interleave."""
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(n)]


def generate_traces(cfg: WorkloadConfig, baselines: Sequence[BaselineProfile] | None = None) -> List[VnfTrace]:
    """Materialize full traces for every VNF (small-instance helper)."""
    baselines = baselines if baselines is not None else default_baselines(cfg.n_baselines)
    mean_rng, slot_rng = make_rngs(cfg.seed, 2)
    means = draw_vnf_population(cfg, baselines, mean_rng)
    block = sample_block(means, cfg.sigma, cfg.horizon, slot_rng)
    slots = tuple(range(cfg.horizon))
    return [VnfTrace(i, slots, block[:, i, :]) for i in range(cfg.n_vnfs)]


def export_traces_csv(traces: Sequence[VnfTrace], path: str | Path) -> None:
    """Write traces as vnf_id, slot, kpi_1..kpi_Z with full float precision."""
    z = traces[0].kpis.shape[1] if traces else DEFAULT_KPI_DIMS
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["vnf_id", "slot"] + [f"kpi_{k + 1}" for k in range(z)])
        for trace in traces:
            for slot, row in zip(trace.slots, trace.kpis):
                writer.writerow([trace.vnf_id, slot] + [repr(float(v)) for v in row])


def import_traces_csv(path: str | Path) -> List[VnfTrace]:
    """Inverse of export_traces_csv; round-trips bit-exactly."""
    per_vnf: Dict[int, List[Tuple[int, List[float]]]] = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        z = len(header) - 2
        for row in reader:
            vnf_id, slot = int(row[0]), int(row[1])
            per_vnf.setdefault(vnf_id, []).append((slot, [float(v) for v in row[2 : 2 + z]]))
    traces = []
    for vnf_id in sorted(per_vnf):
        rows = sorted(per_vnf[vnf_id])
        traces.append(
            VnfTrace(vnf_id, tuple(s for s, _ in rows), np.asarray([k for _, k in rows]))
        )
    return traces
