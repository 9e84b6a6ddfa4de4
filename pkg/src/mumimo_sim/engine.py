"""Discrete-event downlink MU-MIMO loop.

Each user's queue is a window onto its packet stream: packets ``head..count``
are buffered, and those with arrival time <= clock are queued. A user is
ready once it holds ``readiness_threshold`` packets. Rather than stepping
through individual arrivals, the loop jumps straight to the instant the M-th
user becomes ready. That instant is the M-th smallest per-user ready time, so
the result is the same as processing every arrival event.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace
from typing import Iterator, Sequence

import numpy as np

from . import kernel
from .framing import DEFAULT_FRAMING, FramingConstants, psdu_airtime, subframe_len
from .overhead import DEFAULT_SOUNDING, SoundingConfig, cycle_overhead
from .traffic import Packet, PacketStream, TrafficSource

REFILL_CHUNK = 4096
LOG_BLOCK = 4096


@dataclass(frozen=True)
class SimConfig:
    n_antennas: int = 4
    n_users: int = 4
    max_agg: int = 40
    readiness_threshold: int | None = None
    horizon: float = 5.0
    warmup: float | None = None
    seed: int = 0
    sounding_every_n_cycles: int = 1
    framing: FramingConstants = DEFAULT_FRAMING
    sounding: SoundingConfig = DEFAULT_SOUNDING
    traffic: TrafficSource = field(default_factory=TrafficSource)

    def __post_init__(self):
        if self.readiness_threshold is None:
            object.__setattr__(self, "readiness_threshold", self.max_agg)
        if self.warmup is None:
            object.__setattr__(self, "warmup", 0.1 * self.horizon)
        self.validate()

    def validate(self):
        if self.n_antennas < 1:
            raise ValueError("sim.n_antennas must be >= 1")
        if self.n_users < self.n_antennas:
            raise ValueError("sim.n_users must be >= sim.n_antennas")
        if not 1 <= self.max_agg <= self.framing.max_aggregation:
            raise ValueError(
                f"sim.max_agg must be in [1, {self.framing.max_aggregation}]")
        if not 1 <= self.readiness_threshold <= self.max_agg:
            raise ValueError("sim.readiness_threshold must be in [1, sim.max_agg]")
        if not self.horizon > self.warmup >= 0:
            raise ValueError("need sim.horizon > sim.warmup >= 0")
        if self.sounding_every_n_cycles < 1:
            raise ValueError("sim.sounding_every_n_cycles must be >= 1")

    def sources(self) -> list[TrafficSource]:
        """One source per user; identical settings, independent seeds."""
        out = []
        for u in range(self.n_users):
            seed = int(np.random.SeedSequence([self.seed, self.traffic.seed, u]).generate_state(1, np.uint64)[0])
            out.append(replace(self.traffic, user_id=u, seed=seed))
        return out

    def overheads(self) -> tuple[float, float]:
        """(cycle overhead with sounding, without sounding)."""
        M = self.n_antennas
        return (cycle_overhead(self.sounding, M, True, self.framing.phy_header),
                cycle_overhead(self.sounding, M, False, self.framing.phy_header))


@dataclass(frozen=True)
class CycleRecord:
    index: int
    tx_start: float
    tx_end: float
    delay: float
    per_user: tuple[tuple[int, int, int, float], ...]
    """(user_id, subframes, payload bytes, stream airtime) per grouped user."""

    @property
    def duration(self) -> float:
        return self.tx_end - self.tx_start

    @property
    def wasted_airtime(self) -> float:
        longest = max(p[3] for p in self.per_user)
        return sum(longest - p[3] for p in self.per_user)


class CycleLog:
    """Column store of executed cycles."""

    def __init__(self, n_slots: int, mcs_rate: float = DEFAULT_FRAMING.mcs_rate):
        self.n_slots = n_slots
        self.mcs_rate = mcs_rate
        self.tx_start = np.empty(0)
        self.tx_end = np.empty(0)
        self.delay = np.empty(0)
        self.sounded = np.empty(0, dtype=bool)
        shape = (0, n_slots)
        self.users = np.empty(shape, dtype=np.int64)
        self.subframes = np.empty(shape, dtype=np.int64)
        self.payload = np.empty(shape, dtype=np.int64)
        self.psdu = np.empty(shape, dtype=np.int64)
        self._parts: list[tuple] = []

    @classmethod
    def from_records(cls, records: Sequence[CycleRecord],
                     mcs_rate: float = DEFAULT_FRAMING.mcs_rate) -> "CycleLog":
        """Build a log from hand-written records (psdu recovered from airtime)."""
        n_slots = len(records[0].per_user) if records else 1
        log = cls(n_slots, mcs_rate)
        if records:
            log.tx_start = np.array([r.tx_start for r in records], dtype=float)
            log.tx_end = np.array([r.tx_end for r in records], dtype=float)
            log.delay = np.array([r.delay for r in records], dtype=float)
            log.sounded = np.ones(len(records), dtype=bool)
            log.users = np.array([[p[0] for p in r.per_user] for r in records], dtype=np.int64)
            log.subframes = np.array([[p[1] for p in r.per_user] for r in records], dtype=np.int64)
            log.payload = np.array([[p[2] for p in r.per_user] for r in records], dtype=np.int64)
            log.psdu = np.array([[round(p[3] * mcs_rate / 8) for p in r.per_user]
                                 for r in records], dtype=np.int64)
        return log

    def _append_block(self, start, end, delay, sounded, users, nsub, payload, psdu, n):
        if n:
            self._parts.append(tuple(a[:n].copy() for a in
                                     (start, end, delay, sounded, users, nsub, payload, psdu)))

    def _finish(self):
        if not self._parts:
            return
        cols = list(zip(*self._parts))
        (self.tx_start, self.tx_end, self.delay, sounded,
         self.users, self.subframes, self.payload, self.psdu) = (np.concatenate(c) for c in cols)
        self.sounded = sounded.astype(bool)
        self._parts = []

    def __len__(self):
        return len(self.tx_start)

    @property
    def airtime(self) -> np.ndarray:
        return psdu_airtime(self.psdu, self.mcs_rate)

    @property
    def duration(self) -> np.ndarray:
        return self.tx_end - self.tx_start

    def record(self, i: int) -> CycleRecord:
        air = self.airtime[i]
        per_user = tuple((int(self.users[i, j]), int(self.subframes[i, j]),
                          int(self.payload[i, j]), float(air[j]))
                         for j in range(self.n_slots))
        return CycleRecord(i, float(self.tx_start[i]), float(self.tx_end[i]),
                           float(self.delay[i]), per_user)

    def __iter__(self) -> Iterator[CycleRecord]:
        for i in range(len(self)):
            yield self.record(i)

    def shifted(self, dt: float) -> "CycleLog":
        out = CycleLog(self.n_slots, self.mcs_rate)
        out.__dict__.update({k: v for k, v in self.__dict__.items() if k != "_parts"})
        out.tx_start = self.tx_start + dt
        out.tx_end = self.tx_end + dt
        if len(self):
            out.delay = self.delay.copy()
            out.delay[0] += dt
        return out

    def to_csv(self, path) -> None:
        header = ["cycle_index", "tx_start_us", "tx_end_us", "delay_us"]
        for j in range(self.n_slots):
            header += [f"user_id_{j}", f"subframes_{j}", f"payload_bytes_{j}"]
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            for i in range(len(self)):
                row = [i, f"{self.tx_start[i] * 1e6:.4f}", f"{self.tx_end[i] * 1e6:.4f}",
                       f"{self.delay[i] * 1e6:.4f}"]
                for j in range(self.n_slots):
                    row += [int(self.users[i, j]), int(self.subframes[i, j]),
                            int(self.payload[i, j])]
                w.writerow(row)


class SimState:
    """Clock, per-user packet buffers and counters for one run."""

    def __init__(self, n_users: int, capacity: int = 2 * REFILL_CHUNK):
        self.times = np.zeros((n_users, capacity))
        self.payload = np.zeros((n_users, capacity), dtype=np.int64)
        self.sublen = np.zeros((n_users, capacity), dtype=np.int64)
        self.head = np.zeros(n_users, dtype=np.int64)
        self.count = np.zeros(n_users, dtype=np.int64)
        self.exhausted = np.zeros(n_users, dtype=np.uint8)
        self.clocks = np.zeros(2)  # [clock, end of previous cycle]
        self.counter = np.zeros(1, dtype=np.int64)
        self.delivered_bits = 0
        self.delivered_psdu_bits = 0

    @classmethod
    def from_queues(cls, queues: Sequence[Sequence[Packet]], clock: float = 0.0,
                    framing: FramingConstants = DEFAULT_FRAMING) -> "SimState":
        """State whose queues hold exactly the given packets (streams closed)."""
        state = cls(len(queues), max(1, max((len(q) for q in queues), default=1)))
        for u, q in enumerate(queues):
            state.append(u, np.array([p.arrival_time for p in q], dtype=float),
                         np.array([p.payload for p in q], dtype=np.int64), framing)
            state.exhausted[u] = 1
        state.clocks[0] = clock
        return state

    @property
    def n_users(self) -> int:
        return len(self.head)

    @property
    def clock(self) -> float:
        return float(self.clocks[0])

    @clock.setter
    def clock(self, value: float):
        if value < self.clocks[0]:
            raise ValueError("clock cannot move backwards")
        self.clocks[0] = value

    def queue_length(self, u: int) -> int:
        h, c = self.head[u], self.count[u]
        return int(np.searchsorted(self.times[u, h:c], self.clock, side="right"))

    def head_of_line(self, u: int) -> float:
        return float(self.times[u, self.head[u]])

    def append(self, u: int, times: np.ndarray, payload: np.ndarray,
               framing: FramingConstants = DEFAULT_FRAMING):
        h, c = int(self.head[u]), int(self.count[u])
        live = c - h
        need = live + len(times)
        if need > self.times.shape[1]:
            self._grow(max(need, 2 * self.times.shape[1]))
        for arr, new in ((self.times, times), (self.payload, payload),
                         (self.sublen, subframe_len(payload, framing))):
            arr[u, :live] = arr[u, h:c]
            arr[u, live:need] = new
        self.head[u] = 0
        self.count[u] = need

    def _grow(self, cap: int):
        for name in ("times", "payload", "sublen"):
            old = getattr(self, name)
            new = np.zeros((old.shape[0], cap), dtype=old.dtype)
            new[:, :old.shape[1]] = old
            setattr(self, name, new)

    def kernel_args(self):
        return (self.times, self.payload, self.sublen, self.head, self.count,
                self.exhausted, self.clocks, self.counter)


def _ready_times(state: SimState, threshold: int) -> list[float]:
    return [kernel._pykernel.ready_time(state.times, state.head, state.count,
                                        state.exhausted, u, threshold)
            for u in range(state.n_users)]


def select_users_fifo(state: SimState, M: int, threshold: int) -> list[int] | None:
    """Group of M ready users at the current clock, or None when not ready.

    Ready means at least ``threshold`` queued packets. Among ready users the
    M with the oldest head-of-line packet win; ties go to the lower user id.
    """
    ready = _ready_times(state, threshold)
    return kernel._pykernel.pick_group(state.times, state.head, ready, state.clock, M)


def execute_cycle(state: SimState, selected: Sequence[int], config: SimConfig) -> CycleRecord:
    """Transmit one A-MPDU per selected user and advance the clock."""
    if len(selected) != config.n_antennas:
        raise ValueError("a cycle serves exactly n_antennas users")
    t = state.clock
    per_user = []
    for u in selected:
        if state.queue_length(u) < 1:
            raise ValueError(f"user {u} has nothing queued")
        n, pay, psdu = kernel._pykernel.dequeue(
            state.times, state.payload, state.sublen, state.head, state.count,
            u, t, config.max_agg)
        per_user.append((int(u), int(n), int(pay),
                         float(psdu_airtime(int(psdu), config.framing.mcs_rate))))
        state.delivered_bits += int(pay) * 8
        state.delivered_psdu_bits += int(psdu) * 8
    with_sounding, without = config.overheads()
    index = int(state.counter[0])
    overhead = with_sounding if index % config.sounding_every_n_cycles == 0 else without
    end = t + overhead + max(p[3] for p in per_user)
    record = CycleRecord(index, t, end, t - float(state.clocks[1]), tuple(per_user))
    state.clocks[:] = end
    state.counter[0] += 1
    return record


def simulate(config: SimConfig, run_cycles=None) -> tuple[CycleLog, SimState]:
    """Run the event loop to the horizon; returns the full cycle log."""
    run_cycles = run_cycles or kernel.run_cycles
    M = config.n_antennas
    streams = [PacketStream(s, config.framing) for s in config.sources()]
    state = SimState(config.n_users)
    with_sounding, without = config.overheads()
    fparams = np.array([config.horizon, with_sounding, without, config.framing.mcs_rate])
    iparams = np.array([M, config.readiness_threshold, config.max_agg,
                        config.sounding_every_n_cycles], dtype=np.int64)
    out = (np.empty(LOG_BLOCK), np.empty(LOG_BLOCK), np.empty(LOG_BLOCK),
           np.empty(LOG_BLOCK, dtype=np.uint8),
           *(np.empty((LOG_BLOCK, M), dtype=np.int64) for _ in range(4)))
    log = CycleLog(M, config.framing.mcs_rate)
    for u, stream in enumerate(streams):
        if stream.exhausted:
            state.exhausted[u] = 1
    filled = 0
    while True:
        status, user, written = run_cycles(*state.kernel_args(), fparams, iparams,
                                           *(a[filled:] for a in out))
        filled += written
        if status != kernel.NEED_MORE:
            log._append_block(*out, filled)
            filled = 0
        if status == kernel.NEED_MORE:
            times, sizes = streams[user].next_chunk(REFILL_CHUNK)
            if len(times):
                state.append(user, times, sizes, config.framing)
            else:
                state.exhausted[user] = 1
        elif status == kernel.DONE:
            break
    log._finish()
    state.delivered_bits = int(log.payload.sum()) * 8
    state.delivered_psdu_bits = int(log.psdu.sum()) * 8
    return log, state


def run(config: SimConfig, run_cycles=None):
    """Simulate and score one configuration: returns (CycleLog, RunMetrics)."""
    from .metrics import compute_metrics

    log, state = simulate(config, run_cycles)
    return log, compute_metrics(log, config)
