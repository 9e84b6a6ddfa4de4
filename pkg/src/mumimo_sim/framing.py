"""A-MPDU byte accounting and data airtime.

Subframes carry an application payload wrapped in IP/UDP headers (the MSDU),
a MAC header and FCS, a leading delimiter, and 0-3 bytes of padding so every
subframe ends on a 4-byte boundary. The final subframe's EOF padding follows
the same rule.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np

MAX_AGGREGATION_LIMIT = 64


@dataclass(frozen=True)
class FramingConstants:
    mac_header: int = 36
    delimiter: int = 4
    fcs: int = 4
    ip_header: int = 20
    udp_header: int = 8
    subframe_pad_align: int = 4
    max_aggregation: int = MAX_AGGREGATION_LIMIT
    phy_header: float = 44e-6
    mcs_rate: float = 54e6

    def __post_init__(self):
        for name in ("mac_header", "delimiter", "fcs", "ip_header", "udp_header",
                     "subframe_pad_align", "max_aggregation"):
            if getattr(self, name) <= 0:
                raise ValueError(f"framing.{name} must be positive")
        if self.max_aggregation > MAX_AGGREGATION_LIMIT:
            raise ValueError(
                f"framing.max_aggregation must be <= {MAX_AGGREGATION_LIMIT}")
        if self.phy_header <= 0 or self.mcs_rate <= 0:
            raise ValueError("framing.phy_header and framing.mcs_rate must be positive")

    @property
    def msdu_overhead(self) -> int:
        return self.ip_header + self.udp_header

    @property
    def mpdu_overhead(self) -> int:
        """Bytes added around an MSDU before alignment padding."""
        return self.delimiter + self.mac_header + self.fcs


DEFAULT_FRAMING = FramingConstants()


def msdu_len(payload, consts: FramingConstants = DEFAULT_FRAMING):
    """Payload plus IP and UDP headers. Works on scalars and numpy arrays."""
    return payload + consts.msdu_overhead


def subframe_len(payload, consts: FramingConstants = DEFAULT_FRAMING):
    raw = consts.mpdu_overhead + msdu_len(payload, consts)
    align = consts.subframe_pad_align
    return -(-raw // align) * align


def psdu_airtime(psdu, mcs_rate: float = DEFAULT_FRAMING.mcs_rate) -> float:
    """Data-portion airtime in seconds; the PHY header is accounted elsewhere."""
    if np.any(np.asarray(psdu) < 0):
        raise ValueError("psdu length must be non-negative")
    return psdu * 8 / mcs_rate


@dataclass
class Ampdu:
    user_id: int
    subframes: list[tuple[int, int]] = field(default_factory=list)

    @property
    def total_psdu(self) -> int:
        return sum(length for _, length in self.subframes)

    @property
    def payload_total(self) -> int:
        return sum(payload for payload, _ in self.subframes)

    def __len__(self):
        return len(self.subframes)


def build_ampdu(queue: deque, max_agg: int, user_id: int | None = None,
                consts: FramingConstants = DEFAULT_FRAMING) -> Ampdu:
    """Pop up to ``max_agg`` packets off the front of ``queue`` into an A-MPDU.

    ``queue`` holds either ``Packet`` objects or bare payload sizes.
    """
    if not queue:
        raise ValueError("cannot build an A-MPDU from an empty queue")
    if not 1 <= max_agg <= consts.max_aggregation:
        raise ValueError(f"max_agg must be in [1, {consts.max_aggregation}]")
    ampdu = Ampdu(user_id=-1 if user_id is None else user_id)
    for _ in range(min(len(queue), max_agg)):
        pkt = queue.popleft()
        payload = getattr(pkt, "payload", pkt)
        if user_id is None and hasattr(pkt, "user_id"):
            ampdu.user_id = pkt.user_id
        ampdu.subframes.append((int(payload), int(subframe_len(payload, consts))))
    return ampdu
