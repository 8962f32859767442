"""Descriptive statistics of VAD logit tracks: per-label means and onset profiles."""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .attention_pool import DEFAULT_FRAME_HOP_S, VadTrack


@dataclass(frozen=True)
class FrameLabelTrack:
    labels: tuple[str, ...]
    frame_hop_s: float = DEFAULT_FRAME_HOP_S

    def __len__(self) -> int:
        return len(self.labels)


class GroupRow(NamedTuple):
    label: str
    mean: float
    std: float
    count: int


@dataclass(frozen=True)
class TransitionProfile:
    offsets: np.ndarray
    mean: np.ndarray
    std: np.ndarray
    n_used: int
    n_skipped: int


def group_mean_response(track: VadTrack, labels: FrameLabelTrack) -> list[GroupRow]:
    """Mean, population std and frame count of ``v`` per label.

    Rows are sorted by descending mean, then by label.
    """
    if len(labels) != len(track):
        raise ValueError(
            f"label track has {len(labels)} frames but VAD track has {len(track)}"
        )
    keys = np.asarray(labels.labels, dtype=object)
    uniq, inverse = np.unique(keys.astype(str), return_inverse=True)
    counts = np.bincount(inverse, minlength=uniq.size)
    sums = np.bincount(inverse, weights=track.v, minlength=uniq.size)
    means = sums / counts
    dev = track.v - means[inverse]
    stds = np.sqrt(np.bincount(inverse, weights=dev * dev, minlength=uniq.size) / counts)
    rows = [GroupRow(str(u), float(m), float(s), int(c))
            for u, m, s, c in zip(uniq, means, stds, counts)]
    return sorted(rows, key=lambda r: (-r.mean, r.label))


def transition_profile(tracks: Sequence[VadTrack], boundary_frames: Sequence[int],
                       half_width: int = 40) -> TransitionProfile:
    """Align tracks on their boundary frame and average ``v`` at each offset.

    Tracks without ``half_width`` frames of context on both sides of the
    boundary are skipped; their number is reported and warned about.
    """
    if len(tracks) != len(boundary_frames):
        raise ValueError("need exactly one boundary frame per track")
    offsets = np.arange(-half_width, half_width + 1)
    rows = []
    skipped = 0
    for tr, b in zip(tracks, boundary_frames):
        if b - half_width < 0 or b + half_width >= len(tr):
            skipped += 1
            continue
        rows.append(tr.v[b - half_width:b + half_width + 1])
    if skipped:
        warnings.warn(f"{skipped} track(s) skipped: insufficient context around boundary",
                      stacklevel=2)
    if not rows:
        nan = np.full(offsets.size, np.nan)
        return TransitionProfile(offsets, nan, nan.copy(), 0, skipped)
    stack = np.vstack(rows)
    return TransitionProfile(offsets, stack.mean(axis=0), stack.std(axis=0),
                             len(rows), skipped)


def label_transitions(labels: FrameLabelTrack, before: str, after: str) -> list[int]:
    """Frame indices where the label switches from ``before`` to ``after``."""
    lab = labels.labels
    return [t for t in range(1, len(lab)) if lab[t - 1] == before and lab[t] == after]


def read_label_track(text: str, frame_hop_s: float = DEFAULT_FRAME_HOP_S) -> FrameLabelTrack:
    """One label per line; blank lines are ignored."""
    return FrameLabelTrack(tuple(line.strip() for line in text.splitlines() if line.strip()),
                           frame_hop_s)


def group_table_csv(rows: Sequence[GroupRow]) -> str:
    lines = ["label,mean,std,count"]
    lines += [f"{r.label},{r.mean:.9g},{r.std:.9g},{r.count}" for r in rows]
    return "\n".join(lines) + "\n"


def profile_csv(profile: TransitionProfile) -> str:
    lines = ["offset,mean,std"]
    lines += [f"{o},{m:.9g},{s:.9g}"
              for o, m, s in zip(profile.offsets, profile.mean, profile.std)]
    return "\n".join(lines) + "\n"
