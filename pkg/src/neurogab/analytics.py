"""Closed-form neuron-count, timing and energy models."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional

from .compiler import Variant, predicted_ticks

RATIO_5X5 = 1.0174
RATIO_5X3 = 1.0120
ENERGY_PER_SPIKE_J = 109e-12


def xor_neuron_counts(N: int, d_c: int) -> tuple[int, int]:
    """LIF neurons for all CNU XORs vs XOR-mode neurons, with M = N/2 checks."""
    if N <= 0 or N % 2:
        raise ValueError(f"N must be a positive even number, got {N}")
    if d_c < 1:
        raise ValueError("d_c must be positive")
    m = N // 2
    return m * (d_c * d_c + d_c + 1), m * (d_c + 1)


@dataclass(frozen=True)
class TimingModel:
    board_clock_hz: float = 100e6
    core_axons: int = 256
    core_neurons: int = 256
    tick_hz_override: Optional[float] = None

    def __post_init__(self):
        if self.board_clock_hz <= 0 or self.core_axons <= 0 or self.core_neurons <= 0:
            raise ValueError("timing model fields must be positive")
        if self.tick_hz_override is not None and self.tick_hz_override <= 0:
            raise ValueError("tick frequency override must be positive")

    @property
    def tick_frequency_hz(self) -> float:
        return tick_frequency(self)


@dataclass(frozen=True)
class EnergyModel:
    """Power figures are inputs; only their ratio matters for reductions."""

    power_watts_baseline: float = 1.0
    power_overhead_ratio: float = RATIO_5X5
    energy_per_spike_joules: float = ENERGY_PER_SPIKE_J
    power_watts_xor: Optional[float] = None

    def __post_init__(self):
        if self.power_watts_xor is None:
            object.__setattr__(self, "power_watts_xor",
                               self.power_watts_baseline * self.power_overhead_ratio)
        for name in ("power_watts_baseline", "power_watts_xor", "power_overhead_ratio",
                     "energy_per_spike_joules"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")

    def power(self, variant) -> float:
        if Variant.parse(variant) is Variant.BASELINE:
            return self.power_watts_baseline
        return self.power_watts_xor


def tick_frequency(model: TimingModel) -> float:
    """Each tick walks the full crossbar, one synapse per board clock cycle."""
    if model.tick_hz_override is not None:
        return float(model.tick_hz_override)
    return model.board_clock_hz / (model.core_axons * model.core_neurons)


def execution_time(ticks: int, tick_frequency_hz: float) -> float:
    if tick_frequency_hz <= 0:
        raise ValueError("tick frequency must be positive")
    return ticks / tick_frequency_hz


def energy_power_time(variant, w_c: int, max_iter: int, tick_frequency_hz: float,
                      model: EnergyModel) -> float:
    seconds = execution_time(predicted_ticks(variant, w_c, max_iter), tick_frequency_hz)
    return model.power(variant) * seconds


def tick_reduction(w_c: int, max_iter: int) -> float:
    """Percent fewer ticks for the XOR variant."""
    t_x = predicted_ticks(Variant.XOR_INTEGRATED, w_c, max_iter)
    t_b = predicted_ticks(Variant.BASELINE, w_c, max_iter)
    return 100.0 * (1 - t_x / t_b)


def energy_reduction(w_c: int, max_iter: int, power_overhead_ratio: float = RATIO_5X5) -> float:
    """Percent energy saved by the XOR variant; the tick frequency cancels."""
    if power_overhead_ratio <= 0:
        raise ValueError("power ratio must be positive")
    t_x = predicted_ticks(Variant.XOR_INTEGRATED, w_c, max_iter)
    t_b = predicted_ticks(Variant.BASELINE, w_c, max_iter)
    return 100.0 * (1 - (t_x / t_b) * power_overhead_ratio)


def reduction_limit(power_overhead_ratio: float) -> float:
    """Reduction as both w_c and max_iter grow without bound."""
    return 100.0 * (1 - 2.0 / 3.0 * power_overhead_ratio)


def energy_spike_count(total_spikes: int, model: EnergyModel = EnergyModel()) -> float:
    if total_spikes < 0:
        raise ValueError("spike count must be nonnegative")
    return total_spikes * model.energy_per_spike_joules


@dataclass(frozen=True)
class SweepRow:
    w_c: int
    max_iter: int
    energy_baseline_j: float
    energy_xor_j: float
    reduction_pct: float


def sweep(w_c_values: Iterable[int], max_iter_values: Iterable[int],
          energy: EnergyModel = EnergyModel(),
          timing: TimingModel = TimingModel()) -> list[SweepRow]:
    """Energy table in w_c-major order."""
    wcs, its = list(w_c_values), list(max_iter_values)
    if not wcs or not its:
        raise ValueError("sweep ranges must be nonempty")
    hz = tick_frequency(timing)
    rows = []
    for w_c in wcs:
        for it in its:
            e_b = energy_power_time(Variant.BASELINE, w_c, it, hz, energy)
            e_x = energy_power_time(Variant.XOR_INTEGRATED, w_c, it, hz, energy)
            rows.append(SweepRow(w_c, it, e_b, e_x, 100.0 * (1 - e_x / e_b)))
    return rows
