"""Run-level figures of merit computed from a cycle log."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

from .framing import DEFAULT_FRAMING, FramingConstants
from .traffic import PacketStream, TrafficSource

INFINITE = math.inf


@dataclass(frozen=True)
class RunMetrics:
    aggregate_throughput: float
    psdu_throughput: float
    delay_fraction: float
    offered_load: float
    mean_cycle_duration: float
    wasted_airtime_fraction: float
    n_cycles: int

    def as_dict(self) -> dict:
        return asdict(self)

    def check(self, n_antennas: int, mcs_rate: float):
        """Raise AssertionError when a run violates a basic invariant."""
        assert 0.0 <= self.delay_fraction <= 1.0, f"delay fraction {self.delay_fraction}"
        assert 0.0 <= self.wasted_airtime_fraction < 1.0, \
            f"wasted airtime fraction {self.wasted_airtime_fraction}"
        assert self.aggregate_throughput < n_antennas * mcs_rate, \
            f"throughput {self.aggregate_throughput} exceeds {n_antennas} streams"


def _check_window(window):
    t0, t1 = window
    if not t1 > t0:
        raise ValueError(f"empty measurement window [{t0}, {t1}]")
    return t0, t1


def _in_window(log, window) -> np.ndarray:
    t0, t1 = window
    return (log.tx_end >= t0) & (log.tx_end <= t1)


def aggregate_throughput(log, window: tuple[float, float]) -> float:
    """Application payload bits per second of cycles ending inside ``window``."""
    t0, t1 = _check_window(window)
    if not len(log):
        return 0.0
    bits = int(log.payload[_in_window(log, window)].sum()) * 8
    return bits / (t1 - t0)


def psdu_throughput(log, window: tuple[float, float]) -> float:
    t0, t1 = _check_window(window)
    if not len(log):
        return 0.0
    return int(log.psdu[_in_window(log, window)].sum()) * 8 / (t1 - t0)


def delay_fraction(log, total_time: float) -> float:
    """Sum of inter-cycle waits divided by ``total_time``."""
    if total_time <= 0:
        raise ValueError("total_time must be positive")
    return float(np.sum(log.delay)) / total_time


def idle_time(log, window: tuple[float, float]) -> float:
    """Time inside ``window`` during which no cycle is on the air.

    Counts every gap between consecutive cycles plus the wait after the last
    cycle, each clipped to the window.
    """
    t0, t1 = _check_window(window)
    starts = np.append(log.tx_start, t1)
    prev_end = np.concatenate([[0.0], log.tx_end])
    lo = np.clip(prev_end, t0, t1)
    hi = np.clip(starts, t0, t1)
    return float(np.sum(np.maximum(hi - lo, 0.0)))


def windowed_delay_fraction(log, window: tuple[float, float]) -> float:
    t0, t1 = _check_window(window)
    return idle_time(log, window) / (t1 - t0)


def offered_load(sources: Sequence[TrafficSource], window: tuple[float, float],
                 framing: FramingConstants = DEFAULT_FRAMING) -> float:
    """Generated payload bits per second with arrival inside ``window``.

    Backlogged sources make the load ``INFINITE``.
    """
    t0, t1 = _check_window(window)
    total = 0
    for src in sources:
        if src.backlogged:
            return INFINITE
        (before, _), (upto, _) = PacketStream(src, framing).cumulative_bits([t0, t1])
        total += upto - before
    return total / (t1 - t0)


def wasted_airtime_fraction(log, window=None) -> float:
    """Share of the data phase's stream-time during which a stream sits idle."""
    if not len(log):
        return 0.0
    air = log.airtime
    if window is not None:
        air = air[_in_window(log, window)]
    if not len(air):
        return 0.0
    longest = air.max(axis=1)
    wasted = (longest[:, None] - air).sum()
    return float(wasted / (air.shape[1] * longest.sum()))


def compute_metrics(log, config) -> RunMetrics:
    window = (config.warmup, config.horizon)
    inside = _in_window(log, window) if len(log) else np.zeros(0, dtype=bool)
    durations = log.duration[inside] if len(log) else np.zeros(0)
    return RunMetrics(
        aggregate_throughput=aggregate_throughput(log, window),
        psdu_throughput=psdu_throughput(log, window),
        delay_fraction=windowed_delay_fraction(log, window),
        offered_load=offered_load(config.sources(), window, config.framing),
        mean_cycle_duration=float(durations.mean()) if len(durations) else 0.0,
        wasted_airtime_fraction=wasted_airtime_fraction(log, window),
        n_cycles=int(inside.sum()),
    )
