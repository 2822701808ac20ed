"""Synthetic predictors for exercising the scoring pipeline end to end.

Three kinds, from informed to clueless:

* ``oracle``  replays the ground truth, optionally with Gaussian time noise
              and random drops — an upper-bound probe;
* ``prior``   ignores the clip and always predicts the most frequent
              training classes at evenly spread times;
* ``random``  uniform classes, times and confidences.

Outputs must be byte-reproducible across runs, platforms and languages, so
randomness comes from an explicitly documented generator instead of
``random``:

* Stream: SplitMix64 — ``state += 0x9E3779B97F4A7C15`` per step, output is
  ``z = state; z = (z ^ z>>30) * 0xBF58476D1CE4E5B9; z = (z ^ z>>27) *
  0x94D049BB133111EB; z ^ z>>31`` (all mod 2**64).
* Uniform floats: ``((u64 >> 11) + 0.5) / 2**53`` — open interval (0, 1).
* Normal deviates: Box-Muller on two uniforms, ``sqrt(-2 ln u1) * cos/sin
  (2 pi u2)``; produced in pairs, the sine deviate is handed out second.
* Per-clip streams are seeded with ``seed XOR FNV1a64(kind + ":" + clip_id)``
  so clip order and parallelism cannot change the output.

The per-action draw order in the oracle is: one uniform for the drop
decision; if kept and noise_std_s > 0, one normal deviate for the noise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

from .annotations import RETAINED_CLASSES, ClassStats
from .metrics import Prediction
from .windowing import EvalClip

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


class SplitMix64:
    """The documented 64-bit generator (see module docstring)."""

    def __init__(self, seed: int) -> None:
        self._state = seed & _MASK64
        self._spare_gauss: float | None = None

    def next_u64(self) -> int:
        self._state = (self._state + _GOLDEN) & _MASK64
        z = self._state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        return z ^ (z >> 31)

    def next_float(self) -> float:
        """Uniform in the open interval (0, 1)."""
        return ((self.next_u64() >> 11) + 0.5) / 9007199254740992.0  # 2**53

    def next_gauss(self) -> float:
        """Standard normal deviate (Box-Muller, pairwise)."""
        if self._spare_gauss is not None:
            z = self._spare_gauss
            self._spare_gauss = None
            return z
        u1 = self.next_float()
        u2 = self.next_float()
        radius = math.sqrt(-2.0 * math.log(u1))
        self._spare_gauss = radius * math.sin(2.0 * math.pi * u2)
        return radius * math.cos(2.0 * math.pi * u2)


def fnv1a64(text: str) -> int:
    """FNV-1a 64-bit hash of the UTF-8 bytes of ``text``."""
    h = 0xCBF29CE484222325
    for byte in text.encode("utf-8"):
        h = ((h ^ byte) * 0x100000001B3) & _MASK64
    return h


BASELINE_KINDS = ("oracle", "prior", "random")


@dataclass(frozen=True)
class BaselineSpec:
    """Parameters of one baseline run.

    ``noise_std_s`` and ``drop_prob`` only affect the oracle; ``top_k`` only
    the prior; ``per_clip`` only the random predictor.
    """

    kind: str
    noise_std_s: float = 0.0
    drop_prob: float = 0.0
    seed: int = 0
    top_k: int = 3
    per_clip: int = 3

    def __post_init__(self) -> None:
        if self.kind not in BASELINE_KINDS:
            raise ValueError(f"unknown baseline kind {self.kind!r}")
        if not (math.isfinite(self.noise_std_s) and self.noise_std_s >= 0.0):
            raise ValueError(f"noise_std_s must be finite and >= 0, got {self.noise_std_s!r}")
        if not 0.0 <= self.drop_prob <= 1.0:
            raise ValueError(f"drop_prob {self.drop_prob!r} outside [0, 1]")
        if self.top_k < 1:
            raise ValueError(f"top_k must be >= 1, got {self.top_k}")
        if self.per_clip < 1:
            raise ValueError(f"per_clip must be >= 1, got {self.per_clip}")


def _clip_rng(spec: BaselineSpec, clip: EvalClip) -> SplitMix64:
    return SplitMix64(spec.seed ^ fnv1a64(f"{spec.kind}:{clip.clip_id}"))


def _canonical(clips: Iterable[EvalClip]) -> list[EvalClip]:
    return sorted(clips, key=lambda c: (c.game_id, c.half, c.anticipation_start_ms))


def oracle_predictor(clips: Iterable[EvalClip], spec: BaselineSpec) -> list[Prediction]:
    """Ground truth with optional Gaussian time noise and random drops."""
    preds: list[Prediction] = []
    for clip in _canonical(clips):
        rng = _clip_rng(spec, clip)
        limit = clip.window_len_s
        for action in clip.gt_actions:
            if rng.next_float() < spec.drop_prob:
                continue
            time_s = action.offset_s
            if spec.noise_std_s > 0.0:
                time_s += rng.next_gauss() * spec.noise_std_s
            preds.append(
                Prediction(
                    clip_id=clip.clip_id,
                    label=action.label,
                    time_s=min(max(time_s, 0.0), limit),
                    confidence=1.0,
                )
            )
    return preds


def prior_predictor(
    train_stats: ClassStats, clips: Iterable[EvalClip], spec: BaselineSpec
) -> list[Prediction]:
    """The ``top_k`` most frequent training classes at evenly spread times.

    The j-th most frequent class is predicted at the centre of the j-th of
    ``top_k`` equal time bins, with confidence count / train total.
    """
    train = train_stats.counts.get("train")
    if not train:
        raise ValueError("prior baseline needs train-split statistics")
    total = sum(train.values())
    ranked = sorted(train, key=lambda c: (-train[c], c.value))[: spec.top_k]
    preds: list[Prediction] = []
    for clip in _canonical(clips):
        span = clip.window_len_s
        k = len(ranked)
        for j, label in enumerate(ranked):
            preds.append(
                Prediction(
                    clip_id=clip.clip_id,
                    label=label,
                    time_s=(j + 0.5) * span / k,
                    confidence=train[label] / total,
                )
            )
    return preds


def random_predictor(clips: Iterable[EvalClip], spec: BaselineSpec) -> list[Prediction]:
    """``per_clip`` uniform draws of class, time and confidence per clip."""
    preds: list[Prediction] = []
    for clip in _canonical(clips):
        rng = _clip_rng(spec, clip)
        span = clip.window_len_s
        for _ in range(spec.per_clip):
            label = RETAINED_CLASSES[rng.next_u64() % len(RETAINED_CLASSES)]
            time_s = rng.next_float() * span
            confidence = rng.next_float()
            preds.append(
                Prediction(clip_id=clip.clip_id, label=label, time_s=time_s, confidence=confidence)
            )
    return preds


def run_baseline(
    clips: Sequence[EvalClip],
    spec: BaselineSpec,
    train_stats: ClassStats | None = None,
) -> list[Prediction]:
    """Dispatch on ``spec.kind``; the prior additionally needs train stats."""
    if spec.kind == "oracle":
        return oracle_predictor(clips, spec)
    if spec.kind == "prior":
        if train_stats is None:
            raise ValueError("prior baseline needs class statistics")
        return prior_predictor(train_stats, clips, spec)
    return random_predictor(clips, spec)
