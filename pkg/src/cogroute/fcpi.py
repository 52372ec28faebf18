"""Forward channel health index: one byte summarizing 8 outgoing channels.

Bit m-1 of the byte is the pass/fail verdict for outgoing channel m, so
channel 8 is the most significant bit. A channel passes when all four of
its QoS measurements clear the configured thresholds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

Fcpi = int

NUM_CHANNELS = 8


@dataclass(frozen=True)
class ChannelMetrics:
    """One channel's QoS sample: bandwidth fraction, delay, jitter, loss."""

    available_bandwidth_fraction: float
    delay_ms: float
    jitter_ms: float
    loss_fraction: float

    def __post_init__(self):
        for name in ("available_bandwidth_fraction", "delay_ms",
                     "jitter_ms", "loss_fraction"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        if not 0.0 <= self.available_bandwidth_fraction <= 1.0:
            raise ValueError("available_bandwidth_fraction must be in [0, 1]")
        if not 0.0 <= self.loss_fraction <= 1.0:
            raise ValueError("loss_fraction must be in [0, 1]")
        if self.delay_ms < 0.0 or self.jitter_ms < 0.0:
            raise ValueError("delay_ms and jitter_ms must be >= 0")


@dataclass(frozen=True)
class QosThresholds:
    """Pass/fail budgets for the channel evaluator.

    The bandwidth check is a minimum realizable fraction of the demand
    (default 70%); delay, jitter and loss are maximum budgets.
    """

    min_bandwidth_fraction: float = 0.70
    max_delay_ms: float = 100.0
    max_jitter_ms: float = 20.0
    max_loss_fraction: float = 0.05

    def __post_init__(self):
        if not 0.0 < self.min_bandwidth_fraction <= 1.0:
            raise ValueError("min_bandwidth_fraction must be in (0, 1]")
        if self.max_delay_ms <= 0 or self.max_jitter_ms <= 0:
            raise ValueError("delay and jitter budgets must be positive")
        if self.max_loss_fraction <= 0:
            raise ValueError("max_loss_fraction must be positive")


def evaluate_channel(metrics: ChannelMetrics, thresholds: QosThresholds) -> int:
    """1 if every QoS check passes, else 0. All comparisons are inclusive."""
    ok = (metrics.available_bandwidth_fraction >= thresholds.min_bandwidth_fraction
          and metrics.delay_ms <= thresholds.max_delay_ms
          and metrics.jitter_ms <= thresholds.max_jitter_ms
          and metrics.loss_fraction <= thresholds.max_loss_fraction)
    return 1 if ok else 0


def pack_bits(bits) -> Fcpi:
    """Pack 8 channel bits (index i = channel i+1) into one byte."""
    bits = list(bits)
    if len(bits) != NUM_CHANNELS:
        raise ValueError(f"expected {NUM_CHANNELS} bits, got {len(bits)}")
    value = 0
    for i, bit in enumerate(bits):
        if bit not in (0, 1):
            raise ValueError("bits must be 0 or 1")
        value |= bit << i
    return value


def synthesize_fcpi(per_channel, thresholds: QosThresholds) -> Fcpi:
    """Evaluate channels 1..8 and pack the verdicts into a byte.

    Entries may be None for channel indices the router does not have;
    a missing channel reports as 0 since it can never carry traffic.
    """
    per_channel = list(per_channel)
    if len(per_channel) != NUM_CHANNELS:
        raise ValueError(
            f"expected {NUM_CHANNELS} channel entries, got {len(per_channel)}")
    bits = [0 if m is None else evaluate_channel(m, thresholds)
            for m in per_channel]
    return pack_bits(bits)


def unpack(value: Fcpi) -> list[int]:
    """Bits for channels 1..8 (index i = channel i+1)."""
    if not 0 <= value <= 255:
        raise ValueError("index byte must be in [0, 255]")
    return [(value >> i) & 1 for i in range(NUM_CHANNELS)]


def channel_up(value: Fcpi, m: int) -> bool:
    """Whether channel m (1-based) is marked healthy in the byte."""
    if not 1 <= m <= NUM_CHANNELS:
        raise ValueError("channel number must be in [1, 8]")
    return bool((value >> (m - 1)) & 1)
