"""INI-style run configuration: load, override and print.

Units in key names (``_ms``, ``_us``, ``_mbps``, ``_s``) are converted to SI
on load.
"""

from __future__ import annotations

import configparser
import io
from dataclasses import replace

from .engine import SimConfig

# key -> (attribute, scale to SI, type)
SIM_KEYS = {
    "n_antennas": ("n_antennas", None, int),
    "n_users": ("n_users", None, int),
    "max_agg": ("max_agg", None, int),
    "readiness_threshold": ("readiness_threshold", None, int),
    "horizon_s": ("horizon", 1.0, float),
    "warmup_s": ("warmup", 1.0, float),
    "seed": ("seed", None, int),
    "sounding_every_n_cycles": ("sounding_every_n_cycles", None, int),
}
TRAFFIC_KEYS = {
    "mode": ("mode", None, str),
    "mean_on_ms": ("mean_on", 1e-3, float),
    "mean_off_ms": ("mean_off", 1e-3, float),
    "peak_rate_mbps": ("peak_rate", 1e6, float),
    "seed": ("seed", None, int),
}
SIZE_KEYS = {
    "kind": ("kind", None, str),
    "size_min": ("size_min", None, int),
    "size_max": ("size_max", None, int),
    "extreme_weight": ("extreme_weight", None, float),
    "correlation_coefficient": ("correlation_coefficient", None, int),
}
FRAMING_KEYS = {
    "mac_header": ("mac_header", None, int),
    "delimiter": ("delimiter", None, int),
    "fcs": ("fcs", None, int),
    "ip_header": ("ip_header", None, int),
    "udp_header": ("udp_header", None, int),
    "subframe_pad_align": ("subframe_pad_align", None, int),
    "max_aggregation": ("max_aggregation", None, int),
    "phy_header_us": ("phy_header", 1e-6, float),
    "mcs_rate_mbps": ("mcs_rate", 1e6, float),
}
SOUNDING_KEYS = {
    "bandwidth_mhz": ("bandwidth_mhz", None, float),
    "subcarrier_grouping": ("subcarrier_grouping", None, int),
    "psi_bits": ("psi_bits", None, int),
    "phi_bits": ("phi_bits", None, int),
    "n_tx": ("n_tx", None, int),
    "n_rx_per_user": ("n_rx_per_user", None, int),
    "feedback_subcarriers": ("feedback_subcarriers", None, int),
    "sifs_us": ("sifs", 1e-6, float),
    "ndpa_bytes": ("ndpa_bytes", None, int),
    "ndp_duration_us": ("ndp_duration", 1e-6, float),
    "poll_bytes": ("poll_bytes", None, int),
    "ba_bytes": ("ba_bytes", None, int),
    "control_rate_mbps": ("control_rate", 1e6, float),
    "include_ba": ("include_ba", None, bool),
}
SWEEP_KEYS = ("kind", "param", "values", "agg_rates", "seeds")


class ConfigError(ValueError):
    """Bad configuration; the message names the offending key."""


def _convert(section, key, raw, typ):
    try:
        if typ is bool:
            low = str(raw).strip().lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        if typ is int:
            return int(str(raw).strip())
        return typ(str(raw).strip())
    except ValueError:
        raise ConfigError(f"{section}.{key}: cannot parse {raw!r} as {typ.__name__}") from None


def _apply(obj, section, table, items):
    changes = {}
    for key, raw in items.items():
        if key not in table:
            raise ConfigError(f"{section}.{key}: unknown key")
        attr, scale, typ = table[key]
        val = _convert(section, key, raw, typ)
        changes[attr] = val * scale if scale is not None else val
    return replace(obj, **changes) if changes else obj


def read_parser(text: str | None = None, path=None) -> configparser.ConfigParser:
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=(";", "#"))
    if path is not None:
        with open(path, encoding="utf-8") as fh:
            cp.read_file(fh, source=str(path))
    if text:
        cp.read_string(text)
    return cp


def apply_overrides(cp: configparser.ConfigParser, overrides) -> None:
    """Apply ``section.key=value`` strings (command-line flags win)."""
    for item in overrides or ():
        if "=" not in item or "." not in item.split("=", 1)[0]:
            raise ConfigError(f"override {item!r} must look like section.key=value")
        lhs, value = item.split("=", 1)
        section, key = lhs.strip().split(".", 1)
        if not cp.has_section(section):
            cp.add_section(section)
        cp.set(section, key.strip(), value.strip())


def sim_config_from_parser(cp: configparser.ConfigParser, base: SimConfig | None = None) -> SimConfig:
    known = {"sim", "traffic", "framing", "sounding", "sweep"}
    for section in cp.sections():
        if section not in known:
            raise ConfigError(f"{section}: unknown section")
    base = base or SimConfig()
    try:
        framing = _apply(base.framing, "framing", FRAMING_KEYS,
                         dict(cp["framing"]) if cp.has_section("framing") else {})
        sounding = _apply(base.sounding, "sounding", SOUNDING_KEYS,
                          dict(cp["sounding"]) if cp.has_section("sounding") else {})
        # one PHY preamble length for data and control PPDUs
        sounding = replace(sounding, phy_header=framing.phy_header)
        traffic_items = dict(cp["traffic"]) if cp.has_section("traffic") else {}
        size_items = {k: v for k, v in traffic_items.items() if k in SIZE_KEYS}
        src_items = {k: v for k, v in traffic_items.items() if k not in SIZE_KEYS}
        size_model = _apply(base.traffic.size_model, "traffic", SIZE_KEYS, size_items)
        traffic = _apply(replace(base.traffic, size_model=size_model), "traffic",
                         TRAFFIC_KEYS, src_items)
        sim_items = dict(cp["sim"]) if cp.has_section("sim") else {}
        changes = {"framing": framing, "sounding": sounding, "traffic": traffic}
        for key, raw in sim_items.items():
            if key not in SIM_KEYS:
                raise ConfigError(f"sim.{key}: unknown key")
            attr, scale, typ = SIM_KEYS[key]
            val = _convert("sim", key, raw, typ)
            changes[attr] = val * scale if scale is not None else val
        if "max_agg" in changes and "readiness_threshold" not in changes \
                and base.readiness_threshold == base.max_agg:
            changes["readiness_threshold"] = changes["max_agg"]
        if "horizon" in changes and "warmup" not in changes:
            changes["warmup"] = 0.1 * changes["horizon"]
        return replace(base, **changes)
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _fmt(value, scale):
    if isinstance(value, bool):
        return "true" if value else "false"
    if scale is not None:
        value = value / scale
        return f"{value:g}"
    return str(value)


def dump_config(cfg: SimConfig) -> str:
    """Resolved configuration as INI text."""
    cp = configparser.ConfigParser(interpolation=None)
    cp["sim"] = {k: _fmt(getattr(cfg, a), s) for k, (a, s, _) in SIM_KEYS.items()}
    traffic = {k: _fmt(getattr(cfg.traffic, a), s) for k, (a, s, _) in TRAFFIC_KEYS.items()}
    traffic.update({k: _fmt(getattr(cfg.traffic.size_model, a), s)
                    for k, (a, s, _) in SIZE_KEYS.items()})
    cp["traffic"] = traffic
    cp["framing"] = {k: _fmt(getattr(cfg.framing, a), s) for k, (a, s, _) in FRAMING_KEYS.items()}
    cp["sounding"] = {k: _fmt(getattr(cfg.sounding, a), s)
                      for k, (a, s, _) in SOUNDING_KEYS.items()}
    buf = io.StringIO()
    cp.write(buf)
    return buf.getvalue()

