"""
Speech detection from attention logits
======================================

Slide 2 s windows over a synthetic recording, average the per-window speech
scores on the frame grid, then threshold with two levels.
"""

import numpy as np

from diapipe import HysteresisConfig, WindowConfig
from diapipe.synthetic import make_recording
from diapipe.pipeline import detect_speech, extract_windows
from diapipe.vad_segmenter import format_segments

rec = make_recording()
print(f"{rec.features.n_frames} frames, {rec.features.n_channels} channels")

embeddings, tracks = extract_windows(rec.features, rec.params, WindowConfig(2.0, 1.0))
print(len(tracks), "windows")

cfg = HysteresisConfig(theta_on=rec.theta_on, theta_off=rec.theta_off)
track, segments = detect_speech(tracks, cfg)
print("frame score range:", np.round([track.v.min(), track.v.max()], 3))

print("detected:")
print(format_segments(segments), end="")
print("truth:")
print(format_segments(rec.truth), end="")
