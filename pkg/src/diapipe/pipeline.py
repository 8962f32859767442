"""Single-step diarization: one pass yields both VAD logits and embeddings."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import intervals as iv
from .attention_pool import (
    AttentionParams,
    FrameFeatureMatrix,
    SpeakerEmbedding,
    VadTrack,
    pool_window,
)
from .spectral_cluster import ClusterConfig, cluster
from .vad_segmenter import (
    HysteresisConfig,
    Segment,
    WindowConfig,
    aggregate_window_logits,
    gate_windows,
    hysteresis_segments,
    postprocess_segments,
)


@dataclass(frozen=True)
class PipelineConfig:
    hysteresis: HysteresisConfig
    window: WindowConfig = field(default_factory=WindowConfig)
    cluster: ClusterConfig = field(default_factory=ClusterConfig)
    oracle_vad: Optional[tuple[Segment, ...]] = None
    oracle_n: Optional[int] = None


@dataclass
class DiarizationHypothesis:
    recording_id: str
    segments: list[Segment]

    def speakers(self) -> list[str]:
        return sorted({s.speaker for s in self.segments})


def window_features(h: FrameFeatureMatrix, window: WindowConfig) -> list[FrameFeatureMatrix]:
    """Slide a ``width_s`` window by ``step_s``; the last one stops at the end.

    Window boundaries are snapped to whole frames. Windowing stops after the
    first window reaching the end of the recording, so a trailing window may
    be shorter than ``width_s``.
    """
    hop = h.frame_hop_s
    width = max(1, int(round(window.width_s / hop)))
    step = max(1, int(round(window.step_s / hop)))
    T = h.n_frames
    out = []
    start = 0
    while True:
        stop = min(start + width, T)
        out.append(FrameFeatureMatrix(h.data[start:stop], hop, h.start_s + start * hop))
        if stop >= T:
            break
        start += step
    return out


def extract_windows(h: FrameFeatureMatrix, params: AttentionParams,
                    window: WindowConfig) -> tuple[list[SpeakerEmbedding], list[VadTrack]]:
    embeddings, tracks = [], []
    for win in window_features(h, window):
        emb, track = pool_window(win, params)
        embeddings.append(emb)
        tracks.append(track)
    return embeddings, tracks


def detect_speech(tracks: Sequence[VadTrack], cfg: HysteresisConfig) -> tuple[VadTrack, list[Segment]]:
    """Aggregate window tracks and segment them; returns the global track too."""
    track = aggregate_window_logits(tracks)
    return track, postprocess_segments(hysteresis_segments(track, cfg), cfg)


def assign_labels(segs: Sequence[Segment],
                  windows: Sequence[tuple[SpeakerEmbedding, object]],
                  frame_hop_s: float = 0.01, origin_s: float = 0.0,
                  recording_id: str = "rec") -> DiarizationHypothesis:
    """Give every speech frame the label of the nearest-centred covering window.

    Frames lie on the grid ``origin_s + i * frame_hop_s``. Among the windows
    covering a frame's centre, the one whose centre is closest wins, ties
    going to the earlier window. Label changes cut segments at frame
    boundaries; segment edges keep their exact times.
    """
    if not segs:
        return DiarizationHypothesis(recording_id, [])
    ordered = sorted(windows, key=lambda w: (w[0].window_start_s, w[0].window_end_s))
    if not ordered:
        raise ValueError("speech detected but no windows to take labels from")
    starts = np.array([w.window_start_s for w, _ in ordered])
    ends = np.array([w.window_end_s for w, _ in ordered])
    centers = 0.5 * (starts + ends)
    labels = [lab for _, lab in ordered]
    ends_run = np.maximum.accumulate(ends)

    out: list[Segment] = []
    for seg in sorted(segs, key=lambda s: s.onset):
        first = int(np.floor((seg.onset - origin_s) / frame_hop_s + 1e-9))
        last = int(np.ceil((seg.offset - origin_s) / frame_hop_s - 1e-9))
        idx = np.arange(first, max(last, first + 1))
        t = origin_s + (idx + 0.5) * frame_hop_s
        win = _nearest_covering(t, starts, ends, ends_run, centers)
        if np.any(win < 0):
            bad = float(t[np.flatnonzero(win < 0)[0]])
            raise ValueError(f"speech frame at {bad:.3f}s is not covered by any window")
        frame_labels = [labels[j] for j in win]
        cut_start = seg.onset
        for i in range(1, len(idx) + 1):
            if i == len(idx) or frame_labels[i] != frame_labels[i - 1]:
                cut_end = seg.offset if i == len(idx) else origin_s + idx[i] * frame_hop_s
                cut_end = min(max(cut_end, cut_start), seg.offset)
                if cut_end > cut_start:
                    out.append(Segment(cut_start, cut_end, str(frame_labels[i - 1])))
                cut_start = cut_end
    return DiarizationHypothesis(recording_id, _coalesce(out))


def _nearest_covering(t, starts, ends, ends_run, centers) -> np.ndarray:
    """Index of the nearest-centred window covering each time, or -1."""
    # windows sorted by start; running max of ends keeps searchsorted valid
    lo = np.searchsorted(ends_run, t, side="right")
    hi = np.searchsorted(starts, t, side="right") - 1
    result = np.full(t.size, -1, dtype=np.int64)
    for n, (a, b, x) in enumerate(zip(lo, hi, t)):
        best, best_d = -1, np.inf
        for j in range(a, b + 1):
            if starts[j] <= x < ends[j]:
                d = abs(centers[j] - x)
                if d < best_d:
                    best, best_d = j, d
        result[n] = best
    return result


def _coalesce(segs: list[Segment]) -> list[Segment]:
    out: list[Segment] = []
    for s in segs:
        if out and out[-1].speaker == s.speaker and abs(s.onset - out[-1].offset) < 1e-9:
            out[-1] = out[-1]._replace(offset=s.offset)
        else:
            out.append(s)
    return out


def diarize(h: FrameFeatureMatrix, params: AttentionParams, cfg: PipelineConfig,
            recording_id: str = "rec") -> DiarizationHypothesis:
    """Window pooling, speech detection, gating, clustering, label assignment."""
    embeddings, tracks = extract_windows(h, params, cfg.window)
    if cfg.oracle_vad is not None:
        spans = iv.union([(s.onset, s.offset) for s in cfg.oracle_vad])
        speech = [Segment(float(a), float(b)) for a, b in spans]
    else:
        _, speech = detect_speech(tracks, cfg.hysteresis)
    gated = gate_windows(speech, embeddings)
    if not speech or not gated:
        return DiarizationHypothesis(recording_id, [])
    result = cluster(gated, oracle_n=cfg.oracle_n, cfg=cfg.cluster)
    labelled = [(emb, f"spk{int(lab):02d}") for emb, lab in zip(gated, result.labels)]
    return assign_labels(speech, labelled, h.frame_hop_s, h.start_s, recording_id)
