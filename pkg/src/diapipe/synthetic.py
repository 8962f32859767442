"""Synthetic recordings with known ground truth, for tests and demos.

Each speaker is a fixed non-negative direction in feature space, silence
is low-level noise. The matching attention parameters score a frame by
the sum of its rectified features, so speech frames get large logits and
silence frames get negative ones; the embedding projection keeps only the
attentive mean.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .attention_pool import AttentionParams, FrameFeatureMatrix
from .vad_segmenter import Segment

DEFAULT_TURNS = (
    ("A", 1.0, 6.0),
    ("B", 8.5, 13.5),
    ("A", 16.0, 20.0),
    ("B", 22.5, 28.5),
    ("A", 31.0, 35.5),
    ("B", 38.0, 41.0),
)


@dataclass(frozen=True)
class SyntheticRecording:
    features: FrameFeatureMatrix
    params: AttentionParams
    truth: list[Segment]
    theta_on: float
    theta_off: float


def speaker_directions(n_speakers: int, n_channels: int) -> np.ndarray:
    """Disjoint blocks of ones, one block per speaker."""
    if n_channels < n_speakers:
        raise ValueError("need at least one channel per speaker")
    block = n_channels // n_speakers
    dirs = np.zeros((n_speakers, n_channels))
    for i in range(n_speakers):
        dirs[i, i * block:(i + 1) * block] = 1.0
    return dirs


def make_params(n_channels: int, silence_offset: float = 2.0) -> AttentionParams:
    """Attention head scoring a frame by its summed rectified features."""
    C = n_channels
    return AttentionParams(
        W=np.ones((1, C)),
        b=np.zeros(1),
        p=np.ones((C, 1)),
        k=np.full(C, -silence_offset),
        proj_weight=np.hstack([np.eye(C), np.zeros((C, C))]),
        proj_bias=np.zeros(C),
    )


def make_recording(turns: Sequence[tuple[str, float, float]] = DEFAULT_TURNS,
                   duration_s: float = 43.0, n_channels: int = 8,
                   amplitude: float = 2.0, noise: float = 0.05,
                   frame_hop_s: float = 0.01, seed: int = 0) -> SyntheticRecording:
    """Build features from speaker turns given in seconds (on the frame grid)."""
    rng = np.random.default_rng(seed)
    names = sorted({spk for spk, _, _ in turns})
    dirs = speaker_directions(len(names), n_channels)
    T = int(round(duration_s / frame_hop_s))
    data = noise * np.abs(rng.standard_normal((T, n_channels)))
    truth = []
    for spk, onset, offset in turns:
        a, b = int(round(onset / frame_hop_s)), int(round(offset / frame_hop_s))
        direction = dirs[names.index(spk)]
        data[a:b] = amplitude * direction + noise * rng.standard_normal((b - a, n_channels))
        truth.append(Segment(a * frame_hop_s, b * frame_hop_s, spk))
    # speech frames score about amplitude * block - 2, silence about noise * C - 2
    return SyntheticRecording(
        features=FrameFeatureMatrix(data, frame_hop_s, 0.0),
        params=make_params(n_channels),
        truth=sorted(truth),
        theta_on=0.5,
        theta_off=0.0,
    )
