import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mumimo_sim.engine import CycleLog, CycleRecord, SimConfig, simulate
from mumimo_sim.metrics import (RunMetrics, aggregate_throughput, compute_metrics,
                                delay_fraction, idle_time, offered_load, wasted_airtime_fraction,
                                windowed_delay_fraction)
from mumimo_sim.traffic import PacketSizeModel, TrafficSource


def log_of(intervals, payload=0, n_slots=1):
    recs, prev = [], 0.0
    for i, (s, e) in enumerate(intervals):
        recs.append(CycleRecord(i, s, e, s - prev, ((0, 1, payload, 1e-4),) * n_slots))
        prev = e
    return CycleLog.from_records(recs)


def test_throughput_empty_window_is_zero():
    assert aggregate_throughput(log_of([]), (0.0, 1.0)) == 0.0


def test_throughput_single_cycle():
    rec = CycleRecord(0, 0.0, 4e-3, 0.0, ((0, 40, 40 * 512, 1e-3),) * 4)
    log = CycleLog.from_records([rec])
    assert aggregate_throughput(log, (0.0, 10e-3)) == pytest.approx(65.536e6)


def test_throughput_rejects_bad_window():
    with pytest.raises(ValueError):
        aggregate_throughput(log_of([(0, 1)]), (1.0, 1.0))


def test_delay_fraction_back_to_back():
    assert delay_fraction(log_of([(0, 2e-3), (2e-3, 4e-3)]), 4e-3) == 0.0


def test_delay_fraction_gap():
    assert delay_fraction(log_of([(0, 2e-3), (3e-3, 5e-3)]), 5e-3) == pytest.approx(0.2)


def test_windowed_delay_counts_trailing_wait():
    log = log_of([(0, 2e-3), (3e-3, 5e-3)])
    assert windowed_delay_fraction(log, (0.0, 10e-3)) == pytest.approx(6e-3 / 10e-3)
    assert windowed_delay_fraction(log, (2.5e-3, 5e-3)) == pytest.approx(0.5e-3 / 2.5e-3)


@given(st.lists(st.tuples(st.floats(0, 5e-3), st.floats(1e-4, 5e-3)), max_size=30),
       st.floats(-1.0, 1.0))
@settings(max_examples=60, deadline=None)
def test_delay_fraction_translation_invariant(gaps_durs, shift):
    t, intervals = 0.0, []
    for gap, dur in gaps_durs:
        intervals.append((t + gap, t + gap + dur))
        t += gap + dur
    log = log_of(intervals)
    total = max(t, 1e-3)
    moved = log.shifted(shift) if log.tx_start.size else log
    # shifting moves the origin too, so the first wait absorbs the shift
    inner = delay_fraction(log, total) - (log.delay[0] / total if len(log) else 0.0)
    inner_moved = delay_fraction(moved, total) - (moved.delay[0] / total if len(log) else 0.0)
    assert inner == pytest.approx(inner_moved, abs=1e-9)
    if len(log):
        w = (float(log.tx_start[0]), float(log.tx_end[-1]) + 1e-3)
        ws = (w[0] + shift, w[1] + shift)
        assert windowed_delay_fraction(log, w) == pytest.approx(
            windowed_delay_fraction(moved, ws), abs=1e-9)


def test_zero_delay_iff_back_to_back():
    assert windowed_delay_fraction(log_of([(0, 1), (1, 2)]), (0, 2)) == 0.0
    assert windowed_delay_fraction(log_of([(0, 1), (1.001, 2)]), (0, 2)) > 0.0


def test_offered_load_no_sources():
    assert offered_load([], (0.0, 1.0)) == 0.0


def test_offered_load_backlogged_is_infinite():
    assert offered_load([TrafficSource(mode="backlogged")], (0.0, 1.0)) == math.inf


def test_offered_load_twelve_bursty_users():
    peak = 54e6
    src = TrafficSource(mode="on_off", mean_on=10e-3, peak_rate=peak,
                        size_model=PacketSizeModel(kind="fixed")).with_ratio(27)
    cfg = SimConfig(n_users=12, horizon=100.0, traffic=src)
    load = offered_load(cfg.sources(), (0.0, 100.0))
    # payload share of each MSDU is 512/540
    assert load == pytest.approx(12 * peak / 27 * 512 / 540, rel=0.05)


def test_wasted_fraction_bounds():
    recs = [CycleRecord(0, 0, 1e-3, 0, ((0, 1, 0, 2e-4), (1, 1, 0, 1e-4))),
            CycleRecord(1, 1e-3, 2e-3, 0, ((0, 1, 0, 1e-4), (1, 1, 0, 1e-4)))]
    frac = wasted_airtime_fraction(CycleLog.from_records(recs))
    assert frac == pytest.approx(1e-4 / (2 * 3e-4), rel=1e-3)


def accounting(cfg):
    log, _ = simulate(cfg)
    m = compute_metrics(log, cfg)
    window = (cfg.warmup, cfg.horizon)
    busy = np.clip(log.tx_end, *window) - np.clip(log.tx_start, *window)
    return log, m, window, float(busy.sum()), idle_time(log, window)


@pytest.mark.parametrize("ratio", [1, 8, 25])
def test_time_accounting_closes(ratio):
    src = TrafficSource(mode="on_off", mean_on=10e-3, peak_rate=270e6).with_ratio(ratio)
    cfg = SimConfig(n_users=12, horizon=5.0, traffic=src)
    log, m, window, busy, idle = accounting(cfg)
    length = window[1] - window[0]
    assert busy + idle == pytest.approx(length, abs=1e-9)
    # unclipped sums differ from the window by at most one boundary cycle
    inside = (log.tx_end >= window[0]) & (log.tx_end <= window[1])
    longest = log.duration.max()
    assert abs(log.duration[inside].sum() + log.delay[inside].sum() - length) <= 2 * longest + \
        max(0.0, window[1] - log.tx_end[-1])
    assert 0 <= m.delay_fraction <= 1


def test_metrics_check_rejects_impossible_rows():
    bad = RunMetrics(300e6, 300e6, 0.0, math.inf, 1e-3, 0.0, 10)
    with pytest.raises(AssertionError):
        bad.check(4, 54e6)
    with pytest.raises(AssertionError):
        RunMetrics(1e6, 1e6, 1.5, 1e6, 1e-3, 0.0, 1).check(4, 54e6)
