"""Degradable signal channel: pure transport delay plus zero-order hold.

Each stream (feedback wrench, virtual force, desired pose) runs through its
own channel instance, stepped once per simulation tick. The delay is realised
as a ring buffer of past payloads, rounded to whole ticks; the zero-order
hold then re-emits the delayed signal at the configured sample rate, holding
the last sample in between. Delay is applied before the hold, which models a
slow last hop on the link.

Payloads are opaque to the channel (floats, tuples or arrays); callers must
not mutate a payload after pushing it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any


@dataclass(frozen=True)
class ChannelConfig:
    """Delay in seconds and sampling rate in Hz on a base tick grid."""

    delay: float = 0.0
    sample_rate: float = 0.0  # 0 means "every tick", i.e. 1/base_tick
    base_tick: float = 1e-4

    def __post_init__(self):
        if self.delay < 0.0:
            raise ValueError("delay must be >= 0")
        if self.sample_rate < 0.0:
            raise ValueError("sample_rate must be > 0 (or 0 for full rate)")
        if self.base_tick <= 0.0:
            raise ValueError("base_tick must be > 0")

    @property
    def delay_ticks(self) -> int:
        return int(round(self.delay / self.base_tick))

    @property
    def hold_period(self) -> float:
        if self.sample_rate == 0.0:
            return self.base_tick
        return 1.0 / self.sample_rate


@dataclass
class ChannelState:
    """Ring of in-flight payloads plus the hold latch."""

    neutral: Any
    capacity: int
    ring: list = field(default_factory=list)
    write_idx: int = 0
    count: int = 0
    held_value: Any = None
    last_sample_time: float = float("-inf")

    def __post_init__(self):
        if not self.ring:
            self.ring = [self.neutral] * self.capacity
        if self.held_value is None:
            self.held_value = self.neutral


def make_channel(cfg: ChannelConfig, neutral: Any) -> ChannelState:
    """Fresh channel state emitting `neutral` until real data arrives."""
    return ChannelState(neutral=neutral, capacity=cfg.delay_ticks + 1)


def channel_step(cfg: ChannelConfig, state: ChannelState, payload: Any,
                 now: float) -> tuple[Any, ChannelState]:
    """Push one payload at time `now`, return the degraded output.

    The output is the payload from `now - delay` (neutral during the initial
    fill), passed through the zero-order hold: the held value refreshes only
    when a full hold period has elapsed since the previous sample. `now` must
    be non-decreasing across calls on one state. The state is advanced in
    place and returned.
    """
    ring = state.ring
    ring[state.write_idx] = payload
    state.write_idx = (state.write_idx + 1) % state.capacity
    if state.count < state.capacity:
        state.count += 1
    if state.count == state.capacity:
        # oldest live entry sits in the slot the next write would take
        delayed = ring[state.write_idx]
    else:
        delayed = state.neutral
    # half-tick tolerance keeps accumulated float time off the knife edge
    if now - state.last_sample_time >= cfg.hold_period - 0.5 * cfg.base_tick:
        state.held_value = delayed
        state.last_sample_time = now
    return state.held_value, state
