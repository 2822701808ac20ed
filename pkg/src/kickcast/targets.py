"""Assignment of ground-truth actions to prediction slots.

Every head predicts a fixed number of slots per clip; training needs each
slot tied to a ground-truth action (or explicitly to "nothing").  The
variants differ in how that pairing is built and in what the unpaired
slots are supervised towards:

* ``q-act``        sequential pairing, unpaired slots only push actionness to 0
* ``q-eos``        sequential pairing, the first unpaired slot learns an
                   end-of-sequence class and later slots carry no loss at all
* ``q-bckg``       sequential pairing, every unpaired slot learns a
                   background class
* ``q-bce``        sequential pairing, classes supervised as independent
                   multi-hot sigmoids instead of a softmax
* ``q-hung-time``  Hungarian pairing on |decoded time - gt time| / T_a
* ``q-hung-class`` Hungarian pairing on 1 - p(gt class)
* ``anchors``      slots are fixed time bins of width T_a/q; each bin adopts
                   the first action falling inside it

Class indices in targets are 0..C-1 for real classes; the sentinel index C
stands for end-of-sequence (``q-eos``) or background (``q-bckg``).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Sequence

from .annotations import CLASS_INDEX
from .config import BenchConfig
from .timecodec import decode_time
from .windowing import GtAction

if TYPE_CHECKING:  # pragma: no cover - import cycle guard, typing only
    from .losses import SlotOutput


class TargetError(ValueError):
    """Raised for malformed assignment inputs."""


class HeadVariant(enum.Enum):
    """Prediction-head flavours (see module docstring)."""

    Q_ACT = "q-act"
    Q_EOS = "q-eos"
    Q_BCKG = "q-bckg"
    Q_BCE = "q-bce"
    Q_HUNG_TIME = "q-hung-time"
    Q_HUNG_CLASS = "q-hung-class"
    ANCHORS = "anchors"


#: Variants whose pairing depends on the model's current outputs.
OUTPUT_DEPENDENT = frozenset({HeadVariant.Q_HUNG_TIME, HeadVariant.Q_HUNG_CLASS})


@dataclass(frozen=True)
class SlotTarget:
    """Supervision for one slot.

    ``None`` fields mean "no supervision for this quantity"; a slot with
    ``actionness=None`` contributes to no loss at all.  ``class_index`` uses
    the sentinel value C for end-of-sequence / background.  ``time`` is the
    regression target in window-relative units: seconds / T_a for query
    heads, bin-relative in [0, 1) for anchors.
    """

    gt_index: int | None
    actionness: float | None
    class_index: int | None = None
    class_multihot: tuple[int, ...] | None = None
    time: float | None = None


#: Slot supervised only towards "no action here".
BLANK = SlotTarget(gt_index=None, actionness=0.0)
#: Slot carrying no supervision whatsoever (q-eos beyond the EoS slot).
UNCONSTRAINED = SlotTarget(gt_index=None, actionness=None)


@dataclass(frozen=True)
class Assignment:
    """Per-slot targets for one clip under one head variant.

    ``truncated`` records that some ground-truth actions could not be
    represented (more actions than slots, or several in one anchor bin).
    """

    variant: HeadVariant
    slots: tuple[SlotTarget, ...]
    truncated: bool = False

    @property
    def paired(self) -> tuple[tuple[int, int], ...]:
        """(slot, gt) index pairs, in slot order."""
        return tuple(
            (i, s.gt_index) for i, s in enumerate(self.slots) if s.gt_index is not None
        )


def _check_gt(gt: Sequence[GtAction], anticipation_ms: int) -> None:
    prev = -1
    for k, action in enumerate(gt):
        if not 0 <= action.offset_ms < anticipation_ms:
            raise TargetError(
                f"gt action #{k} at {action.offset_ms} ms outside window of {anticipation_ms} ms"
            )
        if action.offset_ms < prev:
            raise TargetError("gt actions must be sorted by offset")
        prev = action.offset_ms


def _class_idx(action: GtAction) -> int:
    try:
        return CLASS_INDEX[action.label]
    except KeyError:
        raise TargetError(f"label {action.label!r} is not a retained class") from None


def _slots_from_pairs(
    pairs: Sequence[tuple[int, int]],
    gt: Sequence[GtAction],
    queries: int,
    anticipation_ms: int,
    multihot: bool,
) -> list[SlotTarget]:
    n_classes = len(CLASS_INDEX)
    slots = [BLANK] * queries
    for i, k in pairs:
        action = gt[k]
        tau = action.offset_ms / anticipation_ms
        if multihot:
            hot = [0] * n_classes
            hot[_class_idx(action)] = 1
            slots[i] = SlotTarget(
                gt_index=k, actionness=1.0, class_multihot=tuple(hot), time=tau
            )
        else:
            slots[i] = SlotTarget(
                gt_index=k, actionness=1.0, class_index=_class_idx(action), time=tau
            )
    return slots


def sequential_assign(
    gt: Sequence[GtAction], queries: int, anticipation_s: float
) -> Assignment:
    """Pair slot i with the i-th action in time order; the rest are negatives."""
    if queries <= 0:
        raise TargetError(f"queries must be positive, got {queries}")
    anticipation_ms = round(anticipation_s * 1000)
    _check_gt(gt, anticipation_ms)
    kept = min(len(gt), queries)
    pairs = [(i, i) for i in range(kept)]
    slots = _slots_from_pairs(pairs, gt, queries, anticipation_ms, multihot=False)
    return Assignment(HeadVariant.Q_ACT, tuple(slots), truncated=len(gt) > queries)


def hungarian(cost: Sequence[Sequence[float]]) -> tuple[tuple[int, int], ...]:
    """Minimum-cost one-to-one pairing of rows to columns.

    Solves the rectangular assignment problem (min(R, C) pairs) by shortest
    augmenting paths over the reduced-cost graph, O(n^3).  Among pairings of
    equal total cost the lexicographically smallest (row, col) sequence is
    returned, which keeps training targets reproducible; the tie-break is
    exact whenever the cost arithmetic is (e.g. integer-valued costs).

    Costs must be finite and non-negative.
    """
    n_rows = len(cost)
    n_cols = len(cost[0]) if n_rows else 0
    for i, row in enumerate(cost):
        if len(row) != n_cols:
            raise TargetError(f"cost row {i} has {len(row)} entries, expected {n_cols}")
        for j, value in enumerate(row):
            if not math.isfinite(value) or value < 0:
                raise TargetError(f"cost[{i}][{j}] = {value!r} is not finite and >= 0")
    if n_rows == 0 or n_cols == 0:
        return ()

    # Tie-break: attach a secondary integer cost encoding the pairing as a
    # base-B number with one digit per row (col j -> j+1, no real col -> C+1,
    # B = C+2).  Minimising the secondary among primary-optimal solutions
    # picks the lexicographically smallest pairing.
    base = n_cols + 2
    pad = max(v for row in cost for v in row) + 1.0
    m = max(n_rows, n_cols)
    a: list[list[tuple[float, int]]] = []
    for i in range(n_rows):
        weight = base ** (n_rows - 1 - i)
        row_cost = cost[i]
        a.append(
            [
                (row_cost[j], (j + 1) * weight) if j < n_cols else (pad, (n_cols + 1) * weight)
                for j in range(m)
            ]
        )

    # Shortest-augmenting-path assignment over (primary, secondary) pairs,
    # compared lexicographically; 1-based with column 0 as the virtual root.
    inf = (math.inf, 0)
    zero = (0.0, 0)
    u: list[tuple[float, int]] = [zero] * (n_rows + 1)
    v: list[tuple[float, int]] = [zero] * (m + 1)
    match: list[int] = [0] * (m + 1)
    way = [0] * (m + 1)
    for i in range(1, n_rows + 1):
        match[0] = i
        j0 = 0
        minv = [inf] * (m + 1)
        used = [False] * (m + 1)
        while True:
            used[j0] = True
            i0 = match[j0]
            delta = inf
            j1 = 0
            ui = u[i0]
            row = a[i0 - 1]
            for j in range(1, m + 1):
                if used[j]:
                    continue
                cj = row[j - 1]
                vj = v[j]
                cur = (cj[0] - ui[0] - vj[0], cj[1] - ui[1] - vj[1])
                if cur < minv[j]:
                    minv[j] = cur
                    way[j] = j0
                if minv[j] < delta:
                    delta = minv[j]
                    j1 = j
            for j in range(m + 1):
                if used[j]:
                    uj = u[match[j]]
                    u[match[j]] = (uj[0] + delta[0], uj[1] + delta[1])
                    vj = v[j]
                    v[j] = (vj[0] - delta[0], vj[1] - delta[1])
                else:
                    mj = minv[j]
                    minv[j] = (mj[0] - delta[0], mj[1] - delta[1])
            j0 = j1
            if match[j0] == 0:
                break
        while j0:
            j1 = way[j0]
            match[j0] = match[j1]
            j0 = j1

    pairs = [
        (match[j] - 1, j - 1) for j in range(1, m + 1) if match[j] != 0 and j - 1 < n_cols
    ]
    pairs.sort()
    return tuple(pairs)


def assign_for_variant(
    variant: HeadVariant,
    gt: Sequence[GtAction],
    cfg: BenchConfig,
    outputs: Sequence[SlotOutput] | None = None,
) -> Assignment:
    """Build per-slot targets for one clip.

    ``outputs`` (the model's current slot outputs) is required for the
    Hungarian variants, whose pairing depends on what the model predicts,
    and ignored otherwise.
    """
    ta_ms = cfg.anticipation_ms
    _check_gt(gt, ta_ms)
    q = cfg.queries
    n_classes = cfg.num_classes
    sentinel = SlotTarget(gt_index=None, actionness=0.0, class_index=n_classes)

    if variant is HeadVariant.ANCHORS:
        slots: list[SlotTarget] = [BLANK] * q
        truncated = False
        for k, action in enumerate(gt):
            b = action.offset_ms * q // ta_ms
            if slots[b].gt_index is not None:
                truncated = True
                continue
            # In-bin offset in [0, 1), exact in integer arithmetic.
            slots[b] = SlotTarget(
                gt_index=k,
                actionness=1.0,
                class_index=_class_idx(action),
                time=(action.offset_ms * q - b * ta_ms) / ta_ms,
            )
        return Assignment(variant, tuple(slots), truncated)

    if variant in OUTPUT_DEPENDENT:
        if outputs is None:
            raise TargetError(f"{variant.value} pairing needs model outputs")
        if len(outputs) != q:
            raise TargetError(f"expected {q} slot outputs, got {len(outputs)}")
        if gt:
            if variant is HeadVariant.Q_HUNG_TIME:
                cost = [
                    [
                        abs(decode_time(out.time_raw, cfg.anticipation_s) - g.offset_s)
                        / cfg.anticipation_s
                        for g in gt
                    ]
                    for out in outputs
                ]
            else:
                cost = [
                    [1.0 - out.class_probs[_class_idx(g)] for g in gt] for out in outputs
                ]
            pairs: Sequence[tuple[int, int]] = hungarian(cost)
        else:
            pairs = ()
        slots = _slots_from_pairs(pairs, gt, q, ta_ms, multihot=False)
        return Assignment(variant, tuple(slots), truncated=len(gt) > q)

    base = sequential_assign(gt, q, cfg.anticipation_s)
    slots = list(base.slots)
    if variant is HeadVariant.Q_EOS:
        for i, slot in enumerate(slots):
            if slot.gt_index is None:
                slots[i] = sentinel
                slots[i + 1 :] = [UNCONSTRAINED] * (q - i - 1)
                break
    elif variant is HeadVariant.Q_BCKG:
        slots = [sentinel if s.gt_index is None else s for s in slots]
    elif variant is HeadVariant.Q_BCE:
        empty = SlotTarget(gt_index=None, actionness=0.0, class_multihot=(0,) * n_classes)
        slots = _slots_from_pairs(base.paired, gt, q, ta_ms, multihot=True)
        slots = [empty if s.gt_index is None else s for s in slots]
    elif variant is not HeadVariant.Q_ACT:  # pragma: no cover - enum is exhaustive
        raise TargetError(f"unhandled variant {variant!r}")

    return Assignment(variant, tuple(slots), truncated=base.truncated)
