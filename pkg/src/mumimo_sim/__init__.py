"""MU-MIMO downlink simulator for open-loop traffic dynamics."""

from .engine import CycleLog, CycleRecord, SimConfig, SimState, execute_cycle, run, select_users_fifo, simulate
from .framing import FramingConstants, build_ampdu, msdu_len, psdu_airtime, subframe_len
from .kernel import BACKEND
from .metrics import RunMetrics, aggregate_throughput, delay_fraction, offered_load
from .overhead import SoundingConfig, cycle_overhead, feedback_bits_per_user, sounding_duration
from .traffic import (BACKLOGGED, Packet, PacketSizeModel, PacketSizeSampler, PacketStream,
                      TrafficSource, generate_arrivals, peak_to_average_ratio)

__version__ = "0.1.0"
