"""Benchmark configuration shared by clip generation, target assignment, losses, and decoding."""

from __future__ import annotations

import math
from dataclasses import dataclass

#: Number of action classes scored by the benchmark.
NUM_CLASSES = 10


def default_query_count(anticipation_s: float) -> int:
    """Default number of query slots: 8 covers a 5 s window, doubled for longer ones."""
    return 16 if anticipation_s > 5.0 else 8


@dataclass(frozen=True)
class BenchConfig:
    """Knobs of the benchmark protocol.

    ``queries`` defaults to :func:`default_query_count` for the chosen
    anticipation window. ``context_frames`` is derived: the number of frame
    instants ``k / fps`` falling inside ``[0, context_s)`` (32 at the default
    5 s / 6.25 fps).
    """

    context_s: float = 5.0
    anticipation_s: float = 5.0
    fps: float = 6.25
    dilation_radius: int = 4
    queries: int = 0  # 0 = auto from anticipation window
    lambda_detection: float = 1.0
    lambda_class: float = 1.0
    lambda_time: float = 10.0
    lambda_segmentation: float = 1.0
    num_classes: int = NUM_CLASSES

    def __post_init__(self) -> None:
        if self.context_s <= 0:
            raise ValueError("context_s must be positive")
        if self.anticipation_s <= 0:
            raise ValueError("anticipation_s must be positive")
        if self.fps <= 0:
            raise ValueError("fps must be positive")
        if self.dilation_radius < 0:
            raise ValueError("dilation_radius must be non-negative")
        if self.num_classes < 1:
            raise ValueError("num_classes must be at least 1")
        if self.queries == 0:
            object.__setattr__(self, "queries", default_query_count(self.anticipation_s))
        if self.queries < 1:
            raise ValueError("queries must be at least 1")

    @property
    def context_frames(self) -> int:
        # count of sample instants in [0, context_s); epsilon guards float noise
        return math.ceil(self.context_s * self.fps - 1e-9)

    @property
    def context_ms(self) -> int:
        return round(self.context_s * 1000)

    @property
    def anticipation_ms(self) -> int:
        return round(self.anticipation_s * 1000)
