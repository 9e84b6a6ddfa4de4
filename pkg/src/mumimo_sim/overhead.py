"""Fixed per-cycle airtime: channel sounding, data PHY header, block ACKs.

The sounding exchange follows the usual explicit-feedback sequence::

    NDPA | SIFS | NDP | SIFS | FB(1) | SIFS | POLL | SIFS | FB(2) | ...

Every control/feedback frame pays the 44 us PHY header and is sent at the
control rate. After the data PPDU each grouped user answers with a block ACK.
"""

from __future__ import annotations

from dataclasses import dataclass

FEEDBACK_MAC_OVERHEAD = 28  # bytes: action-frame MAC header + FCS around the report
SNR_FIELD_BITS = 8


@dataclass(frozen=True)
class SoundingConfig:
    bandwidth_mhz: float = 20.0
    subcarrier_grouping: int = 4
    psi_bits: int = 5
    phi_bits: int = 7
    n_tx: int = 4
    n_rx_per_user: int = 1
    feedback_subcarriers: int = 16
    sifs: float = 16e-6
    ndpa_bytes: int = 25
    ndp_duration: float = 44e-6
    poll_bytes: int = 21
    ba_bytes: int = 32
    control_rate: float = 24e6
    phy_header: float = 44e-6
    include_ba: bool = True

    def __post_init__(self):
        if self.psi_bits < 0 or self.phi_bits < 0:
            raise ValueError("sounding quantization bits must be non-negative")
        if (self.psi_bits or self.phi_bits) and not self.psi_bits < self.phi_bits:
            raise ValueError("sounding.psi_bits must be smaller than sounding.phi_bits")
        if self.feedback_subcarriers < 1:
            raise ValueError("sounding.feedback_subcarriers must be >= 1")
        for name in ("sifs", "ndp_duration", "control_rate", "phy_header"):
            if getattr(self, name) <= 0:
                raise ValueError(f"sounding.{name} must be positive")
        for name in ("ndpa_bytes", "poll_bytes", "ba_bytes"):
            if getattr(self, name) <= 0:
                raise ValueError(f"sounding.{name} must be positive")


DEFAULT_SOUNDING = SoundingConfig()


def feedback_angle_counts(n_tx: int, n_rx: int) -> tuple[int, int]:
    """(phi, psi) angle counts of a compressed Nr x Nc steering matrix.

    For Nc columns out of Nr rows, Givens decomposition leaves
    sum_{i=1..min(Nc, Nr-1)} (Nr - i) angles of each kind.
    """
    if n_tx < 2 or n_rx < 1 or n_rx > n_tx:
        raise ValueError(f"unsupported antenna geometry {n_tx}x{n_rx}")
    if n_rx != 1:
        raise ValueError(
            f"unsupported antenna geometry {n_tx}x{n_rx}: only single-antenna users")
    n = sum(n_tx - i for i in range(1, min(n_rx, n_tx - 1) + 1))
    return n, n


def feedback_bits_per_user(cfg: SoundingConfig = DEFAULT_SOUNDING) -> int:
    n_phi, n_psi = feedback_angle_counts(cfg.n_tx, cfg.n_rx_per_user)
    per_subcarrier = n_phi * cfg.phi_bits + n_psi * cfg.psi_bits
    return cfg.feedback_subcarriers * per_subcarrier + SNR_FIELD_BITS * cfg.n_rx_per_user


def _control_airtime(cfg: SoundingConfig, nbits: float) -> float:
    return cfg.phy_header + nbits / cfg.control_rate


def overhead_budget(cfg: SoundingConfig, n_users: int) -> dict[str, float]:
    """Per-component cycle overhead in seconds, in on-air order."""
    if n_users < 1:
        raise ValueError("n_users must be >= 1")
    ndpa = _control_airtime(cfg, cfg.ndpa_bytes * 8)
    feedback = _control_airtime(
        cfg, FEEDBACK_MAC_OVERHEAD * 8 + feedback_bits_per_user(cfg))
    poll = _control_airtime(cfg, cfg.poll_bytes * 8)
    ba = _control_airtime(cfg, cfg.ba_bytes * 8)
    budget = {
        "ndpa": ndpa,
        "sifs_after_ndpa": cfg.sifs,
        "ndp": cfg.ndp_duration,
        "feedback": n_users * (cfg.sifs + feedback),
        "poll": (n_users - 1) * (poll + cfg.sifs),
        "data_phy_header": cfg.phy_header,
        "block_ack": n_users * (cfg.sifs + ba) if cfg.include_ba else 0.0,
    }
    return budget


_SOUNDING_KEYS = ("ndpa", "sifs_after_ndpa", "ndp", "feedback", "poll")


def sounding_duration(cfg: SoundingConfig, n_users: int) -> float:
    budget = overhead_budget(cfg, n_users)
    return sum(budget[k] for k in _SOUNDING_KEYS)


def cycle_overhead(cfg: SoundingConfig, n_users: int, sounding: bool = True,
                   data_phy_header: float | None = None) -> float:
    """Overhead of one transmit cycle serving ``n_users`` streams.

    With ``sounding=False`` the NDPA/NDP/feedback exchange is skipped (CSI is
    reused from an earlier cycle). ``data_phy_header`` overrides the preamble
    of the data PPDU only.
    """
    budget = overhead_budget(cfg, n_users)
    phy = budget["data_phy_header"] if data_phy_header is None else data_phy_header
    total = phy + budget["block_ack"]
    if sounding:
        total += sounding_duration(cfg, n_users)
    return total


def format_budget(cfg: SoundingConfig, n_users: int) -> str:
    budget = overhead_budget(cfg, n_users)
    lines = [f"overhead budget for {n_users} users (us)"]
    for name, value in budget.items():
        lines.append(f"  {name:<16s} {value * 1e6:10.3f}")
    lines.append(f"  {'sounding total':<16s} {sounding_duration(cfg, n_users) * 1e6:10.3f}")
    lines.append(f"  {'cycle total':<16s} {cycle_overhead(cfg, n_users) * 1e6:10.3f}")
    return "\n".join(lines)
