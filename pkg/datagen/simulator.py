"""Surrogate three-phase PMU waveforms for single line-to-ground faults.

Replaces a circuit solver with a parametric model. Before the fault every PMU
sits at a balanced steady state whose voltage drop, current and angle drift
grow with its hop depth from the substation and with the load level. While
the fault is active, phase A sags at PMU p by

    k(p) = base_depth / ((1 + decay_beta * d(p)) * (1 + R / resistance_rho0))

with d(p) the hop distance from the fault bus and R the fault resistance.
Current surges on phase A and the healthy phases swell, all scaled by k(p).

PMUs at buses with inverter-interfaced generation (`der_buses`) see the
signature shrunk by `der_support` unless the fault is at their own bus,
measure `der_noise_scale` times more noise and, before the fault, export
power: their current falls and their voltage drop shrinks by `der_export`.
Every PMU also carries a fixed calibration bias on voltage magnitude and
angle.
"""
from typing import Sequence, Tuple

import numpy as np

from datagen.scenario import NUM_FEATURES, EventRecord, FaultScenario, GeneratorConfig
from grid.topology import Topology
from utils.errors import ConfigError, TopologyError

PHASE_OFFSETS_DEG = np.array([0.0, -120.0, 120.0])

_OFFSET_STREAM = 0x0FF5E7


def sag_depth(cfg: GeneratorConfig, distance: int, resistance: float) -> float:
    w = cfg.waveform
    return w.base_depth / ((1.0 + w.decay_beta * distance) * (1.0 + resistance / w.resistance_rho0))


def event_rng(seed: int, scenario_id: int) -> np.random.Generator:
    """Independent stream per event; serial and parallel generation agree."""
    return np.random.default_rng([seed, scenario_id])


def pmu_offset(cfg: GeneratorConfig, bus: int) -> Tuple[float, float]:
    """(relative voltage bias, angle bias in degrees) of the PMU at `bus`."""
    sigma = cfg.waveform.pmu_offset_sigma
    if sigma == 0:
        return 0.0, 0.0
    v, a = np.random.default_rng([_OFFSET_STREAM, bus]).normal(0.0, sigma, size=2)
    return float(v), float(np.degrees(a))


def steady_state(topo: Topology, cfg: GeneratorConfig, pmus: Sequence[int], load_scale: float) -> np.ndarray:
    """Noise-free pre-fault features, P × F."""
    w = cfg.waveform
    depth = topo.depth
    max_depth = max(depth.values()) or 1
    v_phase = topo.nominal_voltage / np.sqrt(3.0)
    der = set(cfg.der_buses)
    rows = []
    for bus in pmus:
        rel = depth[bus] / max_depth
        net = 1.0 - w.der_export if bus in der else 1.0
        v_bias, a_bias = pmu_offset(cfg, bus)
        v = v_phase * (1.0 - w.voltage_drop * load_scale * rel * net) * (1.0 + v_bias)
        i = w.base_current_a * load_scale * (1.0 - 0.5 * rel) * net
        angles = PHASE_OFFSETS_DEG - w.angle_drift_deg * load_scale * rel * net + a_bias
        rows.append(np.concatenate([np.full(3, v), np.full(3, i), angles]))
    return np.asarray(rows)


def der_mask(cfg: GeneratorConfig, pmus: Sequence[int]) -> np.ndarray:
    der = set(cfg.der_buses)
    return np.array([bus in der for bus in pmus])


def simulate_event(
    topo: Topology,
    scenario: FaultScenario,
    pmus: Sequence[int],
    rng: np.random.Generator,
    cfg: GeneratorConfig,
) -> EventRecord:
    pmus = tuple(int(b) for b in pmus)
    if not pmus:
        raise ConfigError("simulate_event needs at least one PMU")
    if scenario.onset_ms + scenario.duration_ms > cfg.record_ms:
        raise ConfigError(f"scenario {scenario.scenario_id} ends after the {cfg.record_ms} ms record")
    distances = topo.distances_from(scenario.fault_bus)
    unreachable = [b for b in pmus if b not in distances]
    if unreachable:
        raise TopologyError(f"fault bus {scenario.fault_bus} unreachable from PMU buses {unreachable}")

    w = cfg.waveform
    base = steady_state(topo, cfg, pmus, scenario.load_scale)
    is_der = der_mask(cfg, pmus)
    values = np.repeat(base[:, None, :], cfg.samples, axis=1)

    start = scenario.onset_ms // cfg.sampling_ms
    stop = start + scenario.duration_ms // cfg.sampling_ms
    if stop > start:
        hops = np.array([distances[b] for b in pmus])
        k = np.array([sag_depth(cfg, d, scenario.resistance) for d in hops])
        # a fault on the DER bus itself is not damped
        k = np.where(is_der & (hops > 0), k * (1.0 - w.der_support), k)[:, None]
        fault = values[:, start:stop, :]
        fault[..., 0] *= 1.0 - k
        fault[..., 1:3] *= 1.0 + w.healthy_phase_swell * k[..., None]
        fault[..., 3] *= 1.0 + w.current_surge * k
        fault[..., 4:6] *= 1.0 + w.healthy_phase_current * k[..., None]
        fault[..., 6] -= w.angle_shift_deg * k

    if w.noise_sigma > 0:
        scale = np.empty(NUM_FEATURES)
        scale[0:3] = topo.nominal_voltage / np.sqrt(3.0)
        scale[3:6] = w.base_current_a
        scale[6:9] = np.degrees(1.0)
        sigma = np.where(is_der, w.noise_sigma * w.der_noise_scale, w.noise_sigma)[:, None, None]
        values = values + rng.normal(0.0, 1.0, size=values.shape) * sigma * scale

    return EventRecord(scenario=scenario, pmu_buses=pmus, values=values, sampling_ms=cfg.sampling_ms)
