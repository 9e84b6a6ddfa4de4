"""Parameter sweeps behind the three experiments, with CSV output."""

from __future__ import annotations

import csv
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Sequence

from .config import ConfigError, apply_overrides, read_parser, sim_config_from_parser
from .engine import SimConfig, run
from .traffic import (BACKLOGGED, FIXED, ON_OFF, THREE_POINT, THREE_POINT_CORRELATED,
                      PacketSizeModel, TrafficSource)

SWEEP_KINDS = ("variance", "correlation", "burstiness", "custom")
CSV_COLUMNS = ("sweep_kind", "sweep_value", "agg_rate", "seed", "throughput_mbps",
               "psdu_throughput_mbps", "delay_fraction", "offered_load_mbps",
               "mean_cycle_us", "wasted_airtime_fraction")

FIG5_WEIGHTS = (0.0, 0.1, 0.2, 0.3, 0.4, 0.5)
FIG6_COEFFICIENTS = (0, 2, 4, 6, 8, 10, 16, 20, 30, 40, 50, 64)
FIG7_RATIOS = (BACKLOGGED, 1, 2, 4, 6, 8, 10, 12, 14, 16, 18, 20, 21, 22, 23, 24,
               25, 26, 27, 28, 29, 30)
FIG7_PEAK_RATE = 270e6
FIG7_MEAN_ON = 10e-3
FIG7_HORIZON = 30.0
# queues start empty; near the agg-10 critical load they need a few seconds to fill
FIG7_WARMUP = 6.0


@dataclass(frozen=True)
class SweepSpec:
    kind: str
    values: tuple
    agg_rates: tuple[int, ...] = (10, 20, 40)
    seeds: tuple[int, ...] = tuple(range(10))
    base: SimConfig = field(default_factory=SimConfig)
    param: str | None = None
    """``section.key`` swept by a custom sweep."""

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.kind not in SWEEP_KINDS:
            raise ConfigError(f"sweep.kind: must be one of {SWEEP_KINDS}, got {self.kind!r}")
        if not self.values:
            raise ConfigError("sweep.values: must not be empty")
        if not self.agg_rates:
            raise ConfigError("sweep.agg_rates: must not be empty")
        if not self.seeds:
            raise ConfigError("sweep.seeds: must not be empty")
        for v in self.values:
            if self.kind == "variance" and not (isinstance(v, (int, float)) and 0 <= v <= 0.5):
                raise ConfigError(f"sweep.values: extreme weight {v!r} outside [0, 0.5]")
            if self.kind == "correlation" and not (
                    isinstance(v, int) and 0 <= v <= 64):
                raise ConfigError(f"sweep.values: correlation coefficient {v!r} outside [0, 64]")
            if self.kind == "burstiness" and v != BACKLOGGED and not (
                    isinstance(v, (int, float)) and v >= 1):
                raise ConfigError(f"sweep.values: peak-to-average ratio {v!r} must be >= 1 "
                                  f"or {BACKLOGGED!r}")
        if self.kind == "custom" and not self.param:
            raise ConfigError("sweep.param: required for a custom sweep")
        for agg in self.agg_rates:
            if not 1 <= agg <= self.base.framing.max_aggregation:
                raise ConfigError(f"sweep.agg_rates: {agg} outside "
                                  f"[1, {self.base.framing.max_aggregation}]")

    def points(self):
        """(value, agg, seed) in output order."""
        for value in self.values:
            for agg in self.agg_rates:
                for seed in self.seeds:
                    yield value, agg, seed


def _with_size(cfg: SimConfig, **changes) -> SimConfig:
    size = replace(cfg.traffic.size_model, **changes)
    return replace(cfg, traffic=replace(cfg.traffic, size_model=size))


def configure_point(spec: SweepSpec, value, agg: int, seed: int) -> SimConfig:
    base = spec.base
    thr = agg if base.readiness_threshold == base.max_agg else min(base.readiness_threshold, agg)
    cfg = replace(base, max_agg=agg, readiness_threshold=thr, seed=seed)
    if spec.kind == "variance":
        cfg = _with_size(cfg, kind=THREE_POINT, extreme_weight=float(value))
    elif spec.kind == "correlation":
        if value <= 1:
            cfg = _with_size(cfg, kind=THREE_POINT, correlation_coefficient=int(value))
        else:
            cfg = _with_size(cfg, kind=THREE_POINT_CORRELATED,
                             correlation_coefficient=int(value))
    elif spec.kind == "burstiness":
        if value == BACKLOGGED:
            cfg = replace(cfg, traffic=replace(cfg.traffic, mode=BACKLOGGED))
        else:
            cfg = replace(cfg, traffic=cfg.traffic.with_ratio(float(value)))
    else:
        cp = read_parser()
        apply_overrides(cp, [f"{spec.param}={value}"])
        cfg = sim_config_from_parser(cp, cfg)
    return cfg


def make_figure_config(figure: str, seeds: Sequence[int] = tuple(range(10))) -> SweepSpec:
    """Sweep reproducing one of the three experiments."""
    seeds = tuple(seeds)
    if figure == "fig5":
        base = SimConfig(n_antennas=4, n_users=4, horizon=5.0,
                         traffic=TrafficSource(mode=BACKLOGGED,
                                               size_model=PacketSizeModel(kind=THREE_POINT)))
        return SweepSpec("variance", FIG5_WEIGHTS, seeds=seeds, base=base)
    if figure == "fig6":
        size = PacketSizeModel(kind=THREE_POINT_CORRELATED, extreme_weight=0.5)
        base = SimConfig(n_antennas=4, n_users=4, horizon=5.0,
                         traffic=TrafficSource(mode=BACKLOGGED, size_model=size))
        return SweepSpec("correlation", FIG6_COEFFICIENTS, seeds=seeds, base=base)
    if figure == "fig7":
        src = TrafficSource(mode=ON_OFF, mean_on=FIG7_MEAN_ON, mean_off=0.0,
                            peak_rate=FIG7_PEAK_RATE, size_model=PacketSizeModel(kind=FIXED))
        base = SimConfig(n_antennas=4, n_users=12, horizon=FIG7_HORIZON,
                         warmup=FIG7_WARMUP, traffic=src)
        return SweepSpec("burstiness", FIG7_RATIOS, seeds=seeds, base=base)
    raise ConfigError(f"figure: unknown figure id {figure!r} (expected fig5, fig6 or fig7)")


def _fmt_value(v) -> str:
    if isinstance(v, float) and v.is_integer():
        return str(int(v))
    return str(v)


def _fmt(x: float, digits: int = 6) -> str:
    return "inf" if math.isinf(x) else f"{x:.{digits}f}"


def run_point(spec: SweepSpec, value, agg: int, seed: int, dump_dir=None) -> dict:
    cfg = configure_point(spec, value, agg, seed)
    log, m = run(cfg)
    m.check(cfg.n_antennas, cfg.framing.mcs_rate)
    if dump_dir is not None:
        name = f"{spec.kind}_{_fmt_value(value)}_agg{agg}_seed{seed}.csv"
        log.to_csv(os.path.join(dump_dir, name))
    return {
        "sweep_kind": spec.kind,
        "sweep_value": _fmt_value(value),
        "agg_rate": agg,
        "seed": seed,
        "throughput_mbps": _fmt(m.aggregate_throughput / 1e6),
        "psdu_throughput_mbps": _fmt(m.psdu_throughput / 1e6),
        "delay_fraction": _fmt(m.delay_fraction),
        "offered_load_mbps": _fmt(m.offered_load / 1e6),
        "mean_cycle_us": _fmt(m.mean_cycle_duration * 1e6, 3),
        "wasted_airtime_fraction": _fmt(m.wasted_airtime_fraction),
    }


def _run_point_star(args):
    return run_point(*args)


def run_sweep(spec: SweepSpec, jobs: int = 1, dump_dir=None) -> list[dict]:
    """One row per (value, agg rate, seed), in deterministic order."""
    spec.validate()
    if dump_dir is not None:
        os.makedirs(dump_dir, exist_ok=True)
    tasks = [(spec, v, a, s, dump_dir) for v, a, s in spec.points()]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_run_point_star, tasks, chunksize=4))
    return [_run_point_star(t) for t in tasks]


def write_csv(rows: Sequence[dict], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=CSV_COLUMNS, lineterminator="\n")
        w.writeheader()
        w.writerows(rows)


def _parse_list(section, key, raw, conv):
    out = []
    for tok in raw.replace(",", " ").split():
        try:
            out.append(conv(tok))
        except ValueError:
            raise ConfigError(f"{section}.{key}: cannot parse {tok!r}") from None
    return tuple(out)


def _sweep_value(kind):
    def conv(tok):
        if kind == "burstiness" and tok in (BACKLOGGED, "0"):
            return BACKLOGGED
        if kind == "correlation":
            return int(tok)
        if kind == "custom":
            return tok
        return float(tok)
    return conv


def sweep_from_parser(cp, base: SimConfig, figure: str | None = None) -> SweepSpec | None:
    """Sweep described by ``--figure`` and/or a ``[sweep]`` section."""
    spec = make_figure_config(figure) if figure else None
    if not cp.has_section("sweep"):
        if spec is not None and cp.sections():
            # explicit settings refine the figure's base configuration
            spec = replace(spec, base=sim_config_from_parser(cp, spec.base))
        return spec
    items = dict(cp["sweep"])
    for key in items:
        if key not in ("kind", "param", "values", "agg_rates", "seeds"):
            raise ConfigError(f"sweep.{key}: unknown key")
    if spec is not None:
        base = sim_config_from_parser(cp, spec.base)
    kind = items.get("kind", spec.kind if spec else None)
    if kind is None:
        raise ConfigError("sweep.kind: required")
    if kind not in SWEEP_KINDS:
        raise ConfigError(f"sweep.kind: must be one of {SWEEP_KINDS}, got {kind!r}")
    values = (_parse_list("sweep", "values", items["values"], _sweep_value(kind))
              if "values" in items else (spec.values if spec else ()))
    aggs = (_parse_list("sweep", "agg_rates", items["agg_rates"], int)
            if "agg_rates" in items else (spec.agg_rates if spec else (10, 20, 40)))
    seeds = spec.seeds if spec else tuple(range(10))
    if "seeds" in items:
        seeds = _parse_list("sweep", "seeds", items["seeds"], int)
        if len(seeds) == 1:
            seeds = tuple(range(seeds[0]))
    return SweepSpec(kind, values, aggs, seeds, base, items.get("param"))
