"""Per-user packet sources.

Sizes come from a fixed-mean three-point family: the two extreme modes each
carry mass ``w`` and the midpoint carries ``1 - 2w``. Mapping sizes onto [0, 1]
gives a normalized variance of exactly ``w / 2``. The correlated variant repeats
one size class for ``C`` consecutive packets before drawing a new class.

Arrivals come from an exponential ON/OFF source that emits packets back to back
at its peak rate while ON, or from a backlogged source that always has data.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from .framing import DEFAULT_FRAMING, FramingConstants, msdu_len

FIXED = "fixed"
THREE_POINT = "three_point"
THREE_POINT_CORRELATED = "three_point_correlated"
SIZE_KINDS = (FIXED, THREE_POINT, THREE_POINT_CORRELATED)

BACKLOGGED = "backlogged"
ON_OFF = "on_off"
SOURCE_MODES = (BACKLOGGED, ON_OFF)


@dataclass(frozen=True)
class PacketSizeModel:
    kind: str = FIXED
    size_min: int = 0
    size_max: int = 1024
    extreme_weight: float = 0.0
    correlation_coefficient: int = 0

    def __post_init__(self):
        if self.kind not in SIZE_KINDS:
            raise ValueError(f"traffic.kind must be one of {SIZE_KINDS}, got {self.kind!r}")
        if not 0 <= self.size_min < self.size_max:
            raise ValueError("traffic.size_min must be >= 0 and below traffic.size_max")
        if (self.size_min + self.size_max) % 2:
            raise ValueError("traffic.size_min + traffic.size_max must be even "
                             "so the mean size is a whole number of bytes")
        if not 0.0 <= self.extreme_weight <= 0.5:
            raise ValueError("traffic.extreme_weight must lie in [0, 0.5]")
        if self.correlation_coefficient < 0:
            raise ValueError("traffic.correlation_coefficient must be >= 0")

    @property
    def mean(self) -> int:
        return (self.size_min + self.size_max) // 2

    @property
    def weight(self) -> float:
        return 0.0 if self.kind == FIXED else self.extreme_weight

    @property
    def run_length(self) -> int:
        """Consecutive packets sharing one size class (1 means IID)."""
        if self.kind != THREE_POINT_CORRELATED:
            return 1
        return max(1, self.correlation_coefficient)

    @property
    def normalized_variance(self) -> float:
        return self.weight / 2

    @property
    def variance(self) -> float:
        half_span = (self.size_max - self.size_min) / 2
        return 2 * self.weight * half_span ** 2


class PacketSizeSampler:
    """Stateful size sequence for one source.

    Draws are chunk-invariant: ``draw(a)`` followed by ``draw(b)`` yields the
    same sizes as ``draw(a + b)``. That keeps streams reproducible however the
    engine batches its requests.

    With ``random_phase`` the first correlated run is cut to a uniform length
    in ``[1, C]``, so run boundaries of different sources are not locked to a
    common origin. Every later run is exactly ``C`` packets.
    """

    def __init__(self, model: PacketSizeModel, rng: np.random.Generator,
                 random_phase: bool = True):
        self.model = model
        self.rng = rng
        self._run_class = 0
        self._run_left = 0
        m = model
        self._sizes = np.array([m.size_min, m.mean, m.size_max], dtype=np.int64)
        C = m.run_length
        if random_phase and C > 1 and m.weight > 0:
            self._run_left = int(rng.integers(1, C + 1))
            self._run_class = int(self._classes(rng.random(1))[0])

    def _classes(self, u: np.ndarray) -> np.ndarray:
        w = self.model.weight
        cls = np.ones(u.shape, dtype=np.int64)
        cls[u < w] = 0
        cls[u >= 1.0 - w] = 2
        return cls

    def draw(self, n: int) -> np.ndarray:
        m = self.model
        if n <= 0:
            return np.empty(0, dtype=np.int64)
        if m.weight == 0.0:
            return np.full(n, m.mean, dtype=np.int64)
        C = m.run_length
        if C == 1:
            return self._sizes[self._classes(self.rng.random(n))]

        out = np.empty(n, dtype=np.int64)
        take = min(self._run_left, n)
        out[:take] = self._sizes[self._run_class]
        self._run_left -= take
        rest = n - take
        if rest:
            n_runs = -(-rest // C)
            cls = self._classes(self.rng.random(n_runs))
            out[take:] = np.repeat(self._sizes[cls], C)[:rest]
            self._run_class = int(cls[-1])
            self._run_left = n_runs * C - rest
        return out

    def sample(self) -> int:
        return int(self.draw(1)[0])


def sample_packet_size(sampler: PacketSizeSampler) -> int:
    return sampler.sample()


@dataclass(frozen=True)
class TrafficSource:
    user_id: int = 0
    mode: str = BACKLOGGED
    mean_on: float = 10e-3
    mean_off: float = 0.0
    peak_rate: float = 54e6
    size_model: PacketSizeModel = field(default_factory=PacketSizeModel)
    seed: int = 0

    def __post_init__(self):
        if self.mode not in SOURCE_MODES:
            raise ValueError(f"traffic.mode must be one of {SOURCE_MODES}, got {self.mode!r}")
        if self.mode == ON_OFF:
            if self.mean_on <= 0:
                raise ValueError("traffic.mean_on_ms must be positive")
            if self.mean_off < 0:
                raise ValueError("traffic.mean_off_ms must be >= 0")
            if self.peak_rate < 0:
                raise ValueError("traffic.peak_rate_mbps must be >= 0")

    @property
    def backlogged(self) -> bool:
        return self.mode == BACKLOGGED

    def with_ratio(self, ratio: float) -> "TrafficSource":
        """Same source with ``mean_off`` chosen to hit a peak-to-average ratio."""
        if ratio < 1:
            raise ValueError("peak-to-average ratio must be >= 1")
        return _replace(self, mode=ON_OFF, mean_off=(ratio - 1.0) * self.mean_on)


def _replace(obj, **changes):
    from dataclasses import replace
    return replace(obj, **changes)


def peak_to_average_ratio(source: TrafficSource) -> float | str:
    """``1 + mean_off / mean_on``, or the ``BACKLOGGED`` sentinel."""
    if source.backlogged:
        return BACKLOGGED
    return 1.0 + source.mean_off / source.mean_on


def source_rngs(seed: int) -> tuple[np.random.Generator, np.random.Generator]:
    """Independent (size, period) generators for one source."""
    size_ss, period_ss = np.random.SeedSequence(seed).spawn(2)
    return np.random.default_rng(size_ss), np.random.default_rng(period_ss)


@dataclass(frozen=True)
class Packet:
    user_id: int
    arrival_time: float
    payload: int


class PacketStream:
    """Unbounded, lazily generated arrival stream of one source.

    ``next_chunk(n)`` returns the next ``n`` packets as ``(times, payloads)``
    arrays. Backlogged packets all carry arrival time 0 (the queue was full
    before the simulation started). A silent source (``peak_rate == 0``)
    returns empty chunks and reports ``exhausted``.
    """

    def __init__(self, source: TrafficSource,
                 framing: FramingConstants = DEFAULT_FRAMING):
        self.source = source
        self.framing = framing
        size_rng, self._period_rng = source_rngs(source.seed)
        self.sizes = PacketSizeSampler(source.size_model, size_rng)
        self.exhausted = (not source.backlogged) and source.peak_rate == 0
        self._pending = np.empty(0, dtype=np.int64)
        self._exp_buf: list[float] = []
        self._exp_next = 0
        self._start = 0.0
        self._end = 0.0
        self._pos = 0.0
        if not source.backlogged and not self.exhausted:
            self._end = self._on_duration()

    def _unit_exponential(self) -> float:
        if self._exp_next == len(self._exp_buf):
            self._exp_buf = self._period_rng.standard_exponential(256).tolist()
            self._exp_next = 0
        self._exp_next += 1
        return self._exp_buf[self._exp_next - 1]

    def _on_duration(self) -> float:
        if self.source.mean_off == 0:
            return math.inf
        return self.source.mean_on * self._unit_exponential()

    def _next_period(self):
        off = self.source.mean_off * self._unit_exponential()
        self._start = self._end + off
        self._end = self._start + self._on_duration()
        self._pos = self._start

    @property
    def period(self) -> tuple[float, float]:
        """Current ON period as ``(start, end)``."""
        return self._start, self._end

    def _take_sizes(self, n: int) -> np.ndarray:
        have = self._pending
        if len(have) >= n:
            self._pending = have[n:]
            return have[:n]
        self._pending = np.empty(0, dtype=np.int64)
        return np.concatenate([have, self.sizes.draw(n - len(have))])

    def next_chunk(self, n: int) -> tuple[np.ndarray, np.ndarray]:
        if self.exhausted or n <= 0:
            return np.empty(0), np.empty(0, dtype=np.int64)
        if self.source.backlogged:
            return np.zeros(n), self._take_sizes(n)

        if self.source.size_model.weight == 0.0 and not len(self._pending):
            return self._next_chunk_fixed(n)

        peak = self.source.peak_rate
        times_parts, size_parts = [], []
        need = n
        while need:
            if self._pos >= self._end:
                self._next_period()
            sizes = self._take_sizes(need)
            gaps = msdu_len(sizes, self.framing) * 8.0 / peak
            ends = self._pos + np.cumsum(gaps)
            starts = np.empty_like(ends)
            starts[0] = self._pos
            starts[1:] = ends[:-1]
            k = int(np.searchsorted(starts, self._end, side="left"))
            if k < len(sizes):
                self._pending = np.concatenate([sizes[k:], self._pending])
            if k:
                times_parts.append(starts[:k])
                size_parts.append(sizes[:k])
                self._pos = float(ends[k - 1])
                need -= k
            if k < len(sizes):
                self._pos = self._end
        return np.concatenate(times_parts), np.concatenate(size_parts)

    def _next_chunk_fixed(self, n: int) -> tuple[np.ndarray, np.ndarray]:
        size = self.source.size_model.mean
        gap = int(msdu_len(size, self.framing)) * 8.0 / self.source.peak_rate
        starts, counts = [], []
        need = n
        while need:
            if self._pos >= self._end:
                self._next_period()
            k = min(need, math.ceil((self._end - self._pos) / gap)) \
                if self._end != math.inf else need
            starts.append(self._pos)
            counts.append(k)
            need -= k
            self._pos += k * gap
            if self._pos >= self._end:
                self._pos = self._end
        counts = np.asarray(counts)
        offsets = np.arange(n) - np.repeat(np.cumsum(counts) - counts, counts)
        times = np.repeat(np.asarray(starts), counts) + offsets * gap
        return times, np.full(n, size, dtype=np.int64)

    def cumulative_bits(self, edges: Sequence[float],
                        chunk: int = 1 << 16) -> list[tuple[int, int]]:
        """Consume the stream; (payload bits, msdu bits) arrived before each edge.

        ``edges`` must be non-decreasing. Fixed-size sources take a fast path
        that counts packets per ON period arithmetically.
        """
        edges = list(edges)
        if any(b < a for a, b in zip(edges, edges[1:])):
            raise ValueError("edges must be non-decreasing")
        if self.exhausted or self.source.backlogged:
            return [(0, 0)] * len(edges)
        model = self.source.size_model
        if model.weight == 0.0 and not len(self._pending):
            return self._cumulative_fixed(edges)

        out = []
        payload_bits = msdu_bits = 0
        times, sizes = self.next_chunk(chunk)
        for edge in edges:
            while True:
                k = int(np.searchsorted(times, edge, side="left"))
                payload_bits += int(sizes[:k].sum()) * 8
                msdu_bits += int(msdu_len(sizes[:k], self.framing).sum()) * 8
                times, sizes = times[k:], sizes[k:]
                if len(times):
                    break
                times, sizes = self.next_chunk(chunk)
            out.append((payload_bits, msdu_bits))
        return out

    def _cumulative_fixed(self, edges):
        size = self.source.size_model.mean
        msdu = int(msdu_len(size, self.framing))
        gap = msdu * 8.0 / self.source.peak_rate
        packets = 0
        out = []
        for t_end in edges:
            while True:
                if self._pos >= self._end:
                    self._next_period()
                if self._pos >= t_end:
                    break
                stop = min(self._end, t_end)
                k = math.ceil((stop - self._pos) / gap)
                packets += k
                self._pos += k * gap
                if self._pos >= self._end:
                    self._pos = self._end
            out.append((packets * size * 8, packets * msdu * 8))
        return out


def generate_arrivals(source: TrafficSource, horizon: float,
                      framing: FramingConstants = DEFAULT_FRAMING,
                      chunk: int = 4096) -> Iterator[Packet]:
    """Yield packets in arrival order.

    ON/OFF sources stop at ``horizon``. Backlogged sources never stop; consume
    them lazily.
    """
    if horizon <= 0:
        raise ValueError("horizon must be positive")
    stream = PacketStream(source, framing)
    while True:
        times, sizes = stream.next_chunk(chunk)
        if not len(times):
            return
        for t, s in zip(times.tolist(), sizes.tolist()):
            if t >= horizon and not source.backlogged:
                return
            yield Packet(source.user_id, t, s)
