#!/usr/bin/env python3
"""Regenerate the committed synthetic annotation fixtures.

Three small games (one per split) with a long-tail class mix at roughly 0.3
actions/second, so a 5 s window holds ~1.5 actions on average.  Deliberate
edge cases baked in:

* game-alpha, half 1: an 8-action burst inside the [100 s, 105 s) window
  (the densest window in the corpus);
* game-beta, half 1: an action at exactly 0 ms;
* game-gamma, half 2: an action exactly at the declared half duration;
* half durations both multiples and non-multiples of the 5 s window, so
  final partial windows occur;
* occasional excluded-class actions (Free Kick, Goal).

Deterministic: same seed, same bytes.  Run from the repository root:

    python3 tools/gen_fixtures.py --out-dir fixtures/annotations
"""

from __future__ import annotations

import argparse
from pathlib import Path

from kickcast.annotations import (
    ActionClass,
    ActionInstance,
    GameAnnotations,
    RETAINED_CLASSES,
    filter_classes,
    parse_annotations,
    write_annotations,
)
from kickcast.baselines import SplitMix64, fnv1a64
from kickcast.config import BenchConfig
from kickcast.windowing import make_eval_clips

SEED = 1337

#: Sampling weights: long tail over the retained classes, rare excluded ones.
WEIGHTS: list[tuple[ActionClass, int]] = [
    (ActionClass.PASS, 300),
    (ActionClass.DRIVE, 250),
    (ActionClass.HIGH_PASS, 80),
    (ActionClass.HEADER, 70),
    (ActionClass.OUT, 60),
    (ActionClass.THROW_IN, 45),
    (ActionClass.CROSS, 35),
    (ActionClass.BALL_PLAYER_BLOCK, 25),
    (ActionClass.SHOT, 18),
    (ActionClass.SUCCESSFUL_TACKLE, 8),
    (ActionClass.FREE_KICK, 4),
    (ActionClass.GOAL, 2),
]
TOTAL_WEIGHT = sum(w for _, w in WEIGHTS)

GAMES = [
    ("fixture-league/game-alpha", "train", {1: 612_000, 2: 598_700}),
    ("fixture-league/game-beta", "valid", {1: 603_500, 2: 600_000}),
    ("fixture-league/game-gamma", "test", {1: 607_250, 2: 595_000}),
]

BURST_GAME = "fixture-league/game-alpha"
BURST_HALF = 1
BURST_SKIP = (99_000, 106_000)  # keep natural actions away from the burst window
BURST_TIMES = [100_200 + 600 * k for k in range(8)]  # 8 actions in [100 s, 105 s)


def _draw_class(rng: SplitMix64) -> ActionClass:
    ticket = rng.next_u64() % TOTAL_WEIGHT
    for label, weight in WEIGHTS:
        if ticket < weight:
            return label
        ticket -= weight
    raise AssertionError("unreachable")


def _half_actions(game_id: str, half: int, duration_ms: int) -> list[ActionInstance]:
    rng = SplitMix64(SEED ^ fnv1a64(f"{game_id}:{half}"))
    actions: list[ActionInstance] = []
    t = 1_500 + int(rng.next_float() * 2_000)
    while t < duration_ms - 500:
        if game_id == BURST_GAME and half == BURST_HALF and BURST_SKIP[0] <= t < BURST_SKIP[1]:
            t = BURST_SKIP[1] + int(rng.next_float() * 1_000)
            continue
        actions.append(ActionInstance(game_id=game_id, half=half, time_ms=t, label=_draw_class(rng)))
        t += 700 + int(rng.next_float() * 5_200)
    if game_id == BURST_GAME and half == BURST_HALF:
        for k, burst_t in enumerate(BURST_TIMES):
            label = RETAINED_CLASSES[k % len(RETAINED_CLASSES)]
            actions.append(ActionInstance(game_id=game_id, half=half, time_ms=burst_t, label=label))
    return actions


def build_game(game_id: str, split: str, durations: dict[int, int]) -> GameAnnotations:
    actions = []
    for half, duration in sorted(durations.items()):
        actions.extend(_half_actions(game_id, half, duration))
    if game_id == "fixture-league/game-beta":
        actions.append(ActionInstance(game_id=game_id, half=1, time_ms=0, label=ActionClass.DRIVE))
    if game_id == "fixture-league/game-gamma":
        actions.append(
            ActionInstance(game_id=game_id, half=2, time_ms=durations[2], label=ActionClass.OUT)
        )
    if split == "train":
        # Guarantee every retained class occurs in the train split.
        present = {a.label for a in actions}
        filler = 550_111
        for label in RETAINED_CLASSES:
            if label not in present:
                actions.append(
                    ActionInstance(game_id=game_id, half=2, time_ms=filler, label=label)
                )
                filler += 1_111
    actions.sort(key=lambda a: a.sort_key)
    return GameAnnotations(
        game_id=game_id, split=split, half_durations_ms=durations, actions=tuple(actions)
    )


def check_corpus(games: list[GameAnnotations]) -> None:
    cfg = BenchConfig()
    windows = 0
    retained_total = 0
    max_per_window = 0
    for game in games:
        for clip in make_eval_clips(filter_classes(game), cfg):
            windows += 1
            retained_total += len(clip.gt_actions)
            max_per_window = max(max_per_window, len(clip.gt_actions))
    mean = retained_total / windows
    assert 1.2 <= mean <= 1.8, f"mean actions per window drifted to {mean:.3f}"
    assert max_per_window == 8, f"densest window has {max_per_window} actions, expected 8"
    train_labels = {
        a.label for g in games if g.split == "train" for a in g.actions
    }
    assert set(RETAINED_CLASSES) <= train_labels, "train split is missing retained classes"
    excluded = sum(
        1 for g in games for a in g.actions if a.label not in RETAINED_CLASSES
    )
    assert excluded >= 2, "fixtures should exercise excluded-class filtering"
    print(f"windows={windows} retained={retained_total} mean={mean:.3f} max={max_per_window}")


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out-dir", default="fixtures/annotations", type=Path)
    args = parser.parse_args()
    args.out_dir.mkdir(parents=True, exist_ok=True)

    games = [build_game(*spec) for spec in GAMES]
    check_corpus(games)
    for game in games:
        path = args.out_dir / (game.game_id.rsplit("/", 1)[-1] + ".json")
        write_annotations(game, path)
        reread = parse_annotations(path)
        assert reread == game, f"{path} did not round-trip"
        print(f"wrote {path} ({len(game.actions)} actions)")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
