import math
from dataclasses import replace
from itertools import islice

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mumimo_sim.traffic import (BACKLOGGED, PacketSizeModel, PacketSizeSampler, PacketStream,
                                TrafficSource, generate_arrivals, peak_to_average_ratio,
                                source_rngs)


def sampler(seed=0, random_phase=True, **kw):
    return PacketSizeSampler(PacketSizeModel(**kw), np.random.default_rng(seed), random_phase)


def test_fixed_model_is_degenerate():
    s = sampler(kind="fixed", size_min=0, size_max=1024)
    assert {s.sample() for _ in range(100)} == {512}


def test_worst_case_is_two_point():
    sizes = sampler(kind="three_point", extreme_weight=0.5).draw(10_000)
    assert set(np.unique(sizes)) == {0, 1024}


@pytest.mark.parametrize("w", [0.0, 0.1, 0.25, 0.4, 0.5])
def test_normalized_variance_is_half_weight(w):
    m = PacketSizeModel(kind="three_point", extreme_weight=w)
    assert m.normalized_variance == w / 2
    # exact three-point moments on the normalized axis
    x = np.array([0.0, 0.5, 1.0])
    p = np.array([w, 1 - 2 * w, w])
    assert np.dot(p, x) == pytest.approx(0.5)
    assert np.dot(p, (x - 0.5) ** 2) == pytest.approx(w / 2)


def moments_within_3se(sizes, w, lo=0, hi=1024):
    n = len(sizes)
    mean = (lo + hi) / 2
    x = (sizes - lo) / (hi - lo)
    var_true = w / 2
    mu4 = 2 * w / 16
    se_mean = math.sqrt(var_true / n) * (hi - lo)
    # exact sampling variance of the variance estimator, incl. the 1/n^2 term
    se_var = math.sqrt((mu4 - var_true ** 2) / n + 2 * var_true ** 2 / n ** 2)
    return (abs(sizes.mean() - mean) <= 3 * se_mean + 1e-9,
            abs(x.var() - var_true) <= 3 * se_var + 1e-12)


@pytest.mark.parametrize("w", [0.0, 0.1, 0.25, 0.5])
def test_sample_moments(w):
    sizes = sampler(seed=11, kind="three_point", extreme_weight=w).draw(10 ** 6)
    assert moments_within_3se(sizes, w) == (True, True)


def test_correlated_blocks_without_phase():
    s = sampler(kind="three_point_correlated", extreme_weight=0.5,
                correlation_coefficient=6, random_phase=False)
    sizes = s.draw(600).reshape(-1, 6)
    assert np.all(sizes == sizes[:, :1])


@given(C=st.integers(2, 64), n=st.integers(1, 2000), seed=st.integers(0, 2 ** 31))
@settings(max_examples=50, deadline=None)
def test_correlated_run_structure(C, n, seed):
    s = sampler(seed=seed, kind="three_point_correlated", extreme_weight=0.4,
                correlation_coefficient=C)
    first = s._run_left
    assert 1 <= first <= C
    sizes = s.draw(n)
    # after the phase run, sizes are constant on consecutive blocks of C
    head, rest = sizes[:first], sizes[first:]
    assert np.all(head == head[0])
    full = len(rest) // C * C
    blocks = rest[:full].reshape(-1, C)
    assert np.all(blocks == blocks[:, :1])
    if len(rest) > full:
        assert np.all(rest[full:] == rest[full])
    # maximal runs of equal sizes: interior ones are whole multiples of C
    edges = np.flatnonzero(np.diff(sizes)) + 1
    bounds = np.concatenate([[0], edges, [n]])
    lengths = np.diff(bounds)
    for L, start in zip(lengths[1:-1], bounds[1:-2]):
        assert L % C == 0 or start == 0


@pytest.mark.parametrize("C", [0, 1])
def test_zero_or_one_coefficient_is_iid(C):
    corr = sampler(seed=5, kind="three_point_correlated", extreme_weight=0.3,
                   correlation_coefficient=C).draw(1000)
    iid = sampler(seed=5, kind="three_point", extreme_weight=0.3).draw(1000)
    assert np.array_equal(corr, iid)


@given(splits=st.lists(st.integers(0, 300), min_size=1, max_size=8),
       C=st.sampled_from([0, 3, 17, 40]))
@settings(max_examples=40, deadline=None)
def test_draws_are_chunk_invariant(splits, C):
    kw = dict(kind="three_point_correlated", extreme_weight=0.35, correlation_coefficient=C)
    whole = sampler(seed=9, **kw).draw(sum(splits))
    s = sampler(seed=9, **kw)
    parts = np.concatenate([s.draw(k) for k in splits])
    assert np.array_equal(whole, parts)


def test_correlated_moments_preserved():
    sizes = sampler(seed=3, kind="three_point_correlated", extreme_weight=0.25,
                    correlation_coefficient=6).draw(600_000)
    # runs of 6 inflate the standard error by sqrt(6)
    assert abs(sizes.mean() - 512) < 3 * math.sqrt(6) * math.sqrt(0.125 / 600_000) * 1024


@pytest.mark.parametrize("kw", [dict(kind="nope"), dict(size_min=10, size_max=5),
                                dict(size_min=0, size_max=1023), dict(extreme_weight=0.6),
                                dict(correlation_coefficient=-1)])
def test_invalid_size_models(kw):
    with pytest.raises(ValueError):
        PacketSizeModel(**kw)


@pytest.mark.parametrize("on, off, ratio", [(10e-3, 0.0, 1.0), (10e-3, 260e-3, 27.0),
                                            (5e-3, 45e-3, 10.0)])
def test_peak_to_average_ratio(on, off, ratio):
    src = TrafficSource(mode="on_off", mean_on=on, mean_off=off)
    assert peak_to_average_ratio(src) == pytest.approx(ratio)


def test_backlogged_ratio_sentinel():
    assert peak_to_average_ratio(TrafficSource(mode=BACKLOGGED)) == BACKLOGGED


def test_with_ratio_round_trip():
    src = TrafficSource(mode="on_off", mean_on=10e-3).with_ratio(27)
    assert src.mean_off == pytest.approx(260e-3)
    assert peak_to_average_ratio(src) == pytest.approx(27)


def test_backlogged_stream_is_unbounded():
    src = TrafficSource(mode=BACKLOGGED)
    pkts = list(islice(generate_arrivals(src, horizon=1e-9), 50_000))
    assert len(pkts) == 50_000
    assert all(p.arrival_time == 0.0 for p in pkts)


def test_always_on_count_matches_closed_form():
    src = TrafficSource(mode="on_off", mean_on=10e-3, mean_off=0.0, peak_rate=54e6,
                        size_model=PacketSizeModel(kind="fixed"))
    n = sum(1 for _ in generate_arrivals(src, 1.0))
    assert abs(n - 54e6 / (540 * 8)) <= 1


def period_oracle(src, n_periods):
    """ON periods rebuilt from the source's own period generator."""
    _, period_rng = source_rngs(src.seed)
    e = period_rng.standard_exponential(2 * n_periods + 1)
    periods, t = [], 0.0
    for k in range(n_periods):
        end = t + src.mean_on * e[2 * k]
        periods.append((t, end))
        t = end + src.mean_off * e[2 * k + 1]
    return periods


@pytest.mark.parametrize("kind, w", [("fixed", 0.0), ("three_point", 0.4)])
def test_arrivals_respect_on_periods(kind, w):
    src = TrafficSource(mode="on_off", mean_on=5e-3, mean_off=20e-3, peak_rate=20e6, seed=4,
                        size_model=PacketSizeModel(kind=kind, extreme_weight=w))
    pkts = list(generate_arrivals(src, 2.0))
    periods = period_oracle(src, 200)
    starts = np.array([p[0] for p in periods])
    times = np.array([p.arrival_time for p in pkts])
    assert np.all(np.diff(times) >= 0)
    idx = np.searchsorted(starts, times, side="right") - 1
    for k in np.unique(idx):
        s, e = periods[k]
        sel = [p for p, i in zip(pkts, idx) if i == k]
        t = np.array([p.arrival_time for p in sel])
        assert t[0] == pytest.approx(s, abs=1e-12)
        assert np.all(t < e + 1e-12)
        assert np.all(np.diff(t) > 0)
        gaps = np.array([(p.payload + 28) * 8 / src.peak_rate for p in sel[:-1]])
        assert np.allclose(np.diff(t), gaps)
        # the next packet would have fallen past the end of the period
        assert t[-1] + (sel[-1].payload + 28) * 8 / src.peak_rate >= e - 1e-12


def test_streams_reproducible():
    src = TrafficSource(mode="on_off", mean_on=5e-3, mean_off=30e-3, peak_rate=100e6, seed=77,
                        size_model=PacketSizeModel(kind="three_point_correlated",
                                                   extreme_weight=0.5, correlation_coefficient=6))
    a = [(p.arrival_time, p.payload) for p in generate_arrivals(src, 1.0)]
    b = [(p.arrival_time, p.payload) for p in generate_arrivals(src, 1.0)]
    c = [(p.arrival_time, p.payload) for p in generate_arrivals(replace(src, seed=78), 1.0)]
    assert a == b and a != c


def test_silent_source():
    src = TrafficSource(mode="on_off", peak_rate=0.0)
    assert list(generate_arrivals(src, 1.0)) == []
    assert PacketStream(src).exhausted


@pytest.mark.parametrize("size_model", [PacketSizeModel(kind="fixed"),
                                        PacketSizeModel(kind="three_point", extreme_weight=0.3)])
def test_cumulative_bits_match_enumeration(size_model):
    src = TrafficSource(mode="on_off", mean_on=10e-3, mean_off=50e-3, peak_rate=80e6, seed=3,
                        size_model=size_model)
    edges = [0.3, 1.0, 2.5]
    got = PacketStream(src).cumulative_bits(edges)
    pkts = list(generate_arrivals(src, 3.0))
    for edge, (pay, msdu) in zip(edges, got):
        sel = [p.payload for p in pkts if p.arrival_time < edge]
        assert pay == 8 * sum(sel)
        assert msdu == 8 * sum(s + 28 for s in sel)


def test_fixed_chunks_match_variable_path():
    """The arithmetic fast path emits the same arrivals as the per-packet path."""
    src = TrafficSource(mode="on_off", mean_on=4e-3, mean_off=30e-3, peak_rate=60e6, seed=8,
                        size_model=PacketSizeModel(kind="fixed"))
    fast = PacketStream(src)
    slow = PacketStream(src)
    slow.source = replace(src, size_model=PacketSizeModel(kind="three_point",
                                                          extreme_weight=0.0))
    # weight 0 still takes the fast path, so force the per-packet path
    slow._pending = np.array([512], dtype=np.int64)
    t_fast, s_fast = fast.next_chunk(5000)
    t_slow, s_slow = slow.next_chunk(5000)
    assert np.array_equal(s_fast, s_slow)
    assert np.allclose(t_fast, t_slow, rtol=0, atol=1e-12)


def renewal_rate(ratio, peak, seeds, horizon, mean_on=10e-3):
    src = TrafficSource(mode="on_off", mean_on=mean_on, peak_rate=peak,
                        size_model=PacketSizeModel(kind="fixed")).with_ratio(ratio)
    bits = sum(PacketStream(replace(src, seed=s)).cumulative_bits([horizon])[0][1]
               for s in seeds)
    return bits / (horizon * len(seeds))


def test_on_off_average_rate_renewal():
    rate = renewal_rate(27, 54e6, range(200), 100.0)
    assert rate == pytest.approx(54e6 / 27, rel=0.05)
