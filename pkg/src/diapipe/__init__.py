"""Single-step speaker diarization from attentive-statistics-pooling responses.

The attention head of a channel-wise attentive statistics pooling layer
produces, from one pass over a window, both the speaker embedding and a
per-frame speech logit. This package turns those two outputs into speech
segments, speaker clusters and scored diarization hypotheses.
"""

from .attention_pool import (
    AttentionLogits,
    AttentionParams,
    AttentionWeights,
    FrameFeatureMatrix,
    PooledStats,
    SpeakerEmbedding,
    VadTrack,
    attention_logits,
    attentive_stats,
    embed,
    pool_window,
    temporal_softmax,
    vad_logits,
)
from .pipeline import DiarizationHypothesis, PipelineConfig, assign_labels, diarize, window_features
from .scoring import PRESETS, RttmRecord, ScoreConfig, ScoreReport, der, parse_rttm, vad_error, write_rttm
from .spectral_cluster import ClusterConfig, ClusterResult, cluster
from .vad_segmenter import (
    HysteresisConfig,
    Segment,
    WindowConfig,
    aggregate_window_logits,
    gate_windows,
    hysteresis_segments,
    postprocess_segments,
)

__version__ = "0.1.0"
