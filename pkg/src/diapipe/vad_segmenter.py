"""Turn windowed VAD logits into speech segments."""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence

import numpy as np

from .attention_pool import SpeakerEmbedding, VadTrack


class Segment(NamedTuple):
    onset: float
    offset: float
    speaker: Optional[str] = None

    @property
    def duration(self) -> float:
        return self.offset - self.onset


SegmentList = list  # list[Segment], sorted by onset


@dataclass(frozen=True)
class WindowConfig:
    width_s: float = 2.0
    step_s: float = 1.0

    def __post_init__(self):
        if not 0 < self.step_s <= self.width_s:
            raise ValueError(
                f"window needs 0 < step_s <= width_s, got step_s={self.step_s}, "
                f"width_s={self.width_s}"
            )


@dataclass(frozen=True)
class HysteresisConfig:
    """Two-threshold segmentation plus merge/drop post-processing.

    The thresholds have no universal value; tune them on development data.
    ``min_dur_s`` and ``max_gap_s`` defaults are placeholders.
    """

    theta_on: float
    theta_off: float
    min_dur_s: float = 0.2
    max_gap_s: float = 0.3

    def __post_init__(self):
        if self.theta_on < self.theta_off:
            raise ValueError(
                f"theta_on ({self.theta_on}) must be >= theta_off ({self.theta_off})"
            )
        if self.min_dur_s < 0 or self.max_gap_s < 0:
            raise ValueError("min_dur_s and max_gap_s must be non-negative")


def _frame_offset(start_s: float, origin_s: float, hop: float) -> int:
    return int(round((start_s - origin_s) / hop))


def aggregate_window_logits(tracks: Sequence[VadTrack]) -> VadTrack:
    """Average overlapping window tracks into one recording-level track.

    Window offsets are snapped to the nearest whole frame. Every frame of the
    output must be covered by at least one window.
    """
    if not tracks:
        raise ValueError("need at least one VAD track")
    hop = tracks[0].frame_hop_s
    for i, tr in enumerate(tracks):
        if not np.isclose(tr.frame_hop_s, hop, rtol=1e-9, atol=0.0):
            raise ValueError(
                f"track {i} has frame_hop_s={tr.frame_hop_s}, expected {hop}"
            )
    origin = min(tr.start_s for tr in tracks)
    offsets = [_frame_offset(tr.start_s, origin, hop) for tr in tracks]
    n = max(o + len(tr) for o, tr in zip(offsets, tracks))
    total = np.zeros(n)
    count = np.zeros(n, dtype=np.int64)
    for o, tr in zip(offsets, tracks):
        total[o:o + len(tr)] += tr.v
        count[o:o + len(tr)] += 1
    if np.any(count == 0):
        gap = int(np.flatnonzero(count == 0)[0])
        raise ValueError(f"frame {gap} is not covered by any window")
    return VadTrack(v=total / count, frame_hop_s=hop, start_s=origin)


def hysteresis_segments(track: VadTrack, cfg: HysteresisConfig) -> list[Segment]:
    """Open where ``v >= theta_on``, close at the next frame with ``v < theta_off``.

    A frame can only be an opening or a closing trigger (never both, since
    ``theta_on >= theta_off``), so the state of each frame is the type of the
    most recent trigger at or before it.
    """
    v = track.v
    T = v.size
    trigger = np.zeros(T, dtype=np.int8)  # 1 open, -1 close, 0 keep
    trigger[v < cfg.theta_off] = -1
    trigger[v >= cfg.theta_on] = 1
    idx = np.where(trigger != 0, np.arange(T), -1)
    last = np.maximum.accumulate(idx)
    active = np.zeros(T, dtype=bool)
    has = last >= 0
    active[has] = trigger[last[has]] == 1

    edges = np.diff(np.concatenate([[0], active.astype(np.int8), [0]]))
    starts = np.flatnonzero(edges == 1)
    stops = np.flatnonzero(edges == -1)
    hop, t0 = track.frame_hop_s, track.start_s
    return [Segment(float(t0 + a * hop), float(t0 + b * hop)) for a, b in zip(starts, stops)]


def postprocess_segments(segs: Sequence[Segment], cfg: HysteresisConfig) -> list[Segment]:
    """Merge segments separated by at most ``max_gap_s``, then drop short ones."""
    merged: list[Segment] = []
    for seg in sorted(segs, key=lambda s: (s.onset, s.offset)):
        if merged and seg.onset - merged[-1].offset <= cfg.max_gap_s:
            last = merged[-1]
            merged[-1] = last._replace(offset=max(last.offset, seg.offset))
        else:
            merged.append(seg)
    return [s for s in merged if s.duration >= cfg.min_dur_s]


def gate_windows(segs: Sequence[Segment],
                 windows: Sequence[SpeakerEmbedding]) -> list[SpeakerEmbedding]:
    """Keep windows overlapping some speech segment by a positive amount."""
    if not segs or not windows:
        return []
    ordered = sorted(segs, key=lambda s: s.onset)
    onsets = np.array([s.onset for s in ordered])
    # running max of offsets makes this valid even for overlapping segments
    reach = np.maximum.accumulate(np.array([s.offset for s in ordered]))
    kept = []
    for w in windows:
        i = np.searchsorted(reach, w.window_start_s, side="right")
        if i < len(onsets) and onsets[i] < w.window_end_s:
            kept.append(w)
    return kept


def format_segments(segs: Sequence[Segment]) -> str:
    """Two-column ``onset offset`` text, three decimals."""
    return "".join(f"{s.onset:.3f} {s.offset:.3f}\n" for s in segs)


def parse_segments(text: str) -> list[Segment]:
    segs = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        fields = line.split()
        if len(fields) != 2:
            raise ValueError(f"line {lineno}: expected 'onset offset', got {line!r}")
        try:
            onset, offset = float(fields[0]), float(fields[1])
        except ValueError:
            raise ValueError(f"line {lineno}: non-numeric time in {line!r}") from None
        if not offset > onset:
            raise ValueError(f"line {lineno}: offset must exceed onset")
        segs.append(Segment(onset, offset))
    return sorted(segs)
