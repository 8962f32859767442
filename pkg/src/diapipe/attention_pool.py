"""Channel-wise attentive statistics pooling with VAD logit read-out.

The attention head scores every (frame, channel) cell, the scores are
softmax-normalised over time and used to compute a weighted mean and
standard deviation per channel. The same unnormalised scores, averaged
over channels, give one speech logit per frame.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

DEFAULT_FRAME_HOP_S = 0.01


def _as_matrix(x, name: str) -> np.ndarray:
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr


def _as_vector(x, name: str) -> np.ndarray:
    arr = np.asarray(x, dtype=np.float64).reshape(-1)
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr


@dataclass(frozen=True)
class FrameFeatureMatrix:
    """T x C frame-level features with a time base.

    Row ``t`` covers ``[start_s + t * frame_hop_s, start_s + (t + 1) * frame_hop_s)``.
    """

    data: np.ndarray
    frame_hop_s: float = DEFAULT_FRAME_HOP_S
    start_s: float = 0.0

    def __post_init__(self):
        data = _as_matrix(self.data, "features")
        if data.shape[0] < 1 or data.shape[1] < 1:
            raise ValueError(f"features must have T >= 1 and C >= 1, got {data.shape}")
        if not (self.frame_hop_s > 0 and np.isfinite(self.frame_hop_s)):
            raise ValueError(f"frame_hop_s must be positive, got {self.frame_hop_s}")
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "frame_hop_s", float(self.frame_hop_s))
        object.__setattr__(self, "start_s", float(self.start_s))

    @property
    def n_frames(self) -> int:
        return self.data.shape[0]

    @property
    def n_channels(self) -> int:
        return self.data.shape[1]

    @property
    def end_s(self) -> float:
        return self.start_s + self.n_frames * self.frame_hop_s


@dataclass(frozen=True)
class AttentionParams:
    """Weights of the attention head and the embedding projection.

    Shapes: ``W`` (R, C), ``b`` (R,), ``p`` (C, R), ``k`` (C,),
    ``proj_weight`` (D, 2C), ``proj_bias`` (D,). The bottleneck ``W, b`` is
    shared across channels; ``p[c]`` and ``k[c]`` are per channel.
    """

    W: np.ndarray
    b: np.ndarray
    p: np.ndarray
    k: np.ndarray
    proj_weight: np.ndarray
    proj_bias: np.ndarray

    def __post_init__(self):
        W = _as_matrix(self.W, "W")
        p = _as_matrix(self.p, "p")
        proj_weight = _as_matrix(self.proj_weight, "proj_weight")
        b = _as_vector(self.b, "b")
        k = _as_vector(self.k, "k")
        proj_bias = _as_vector(self.proj_bias, "proj_bias")
        R, C = W.shape
        if b.shape != (R,):
            raise ValueError(f"b has length {b.size}, expected R={R} (rows of W)")
        if p.shape != (C, R):
            raise ValueError(f"p has shape {p.shape}, expected (C, R) = ({C}, {R})")
        if k.shape != (C,):
            raise ValueError(f"k has length {k.size}, expected C={C} (columns of W)")
        if proj_weight.shape[1] != 2 * C:
            raise ValueError(
                f"proj_weight has {proj_weight.shape[1]} columns, expected 2C={2 * C}"
            )
        if proj_bias.shape != (proj_weight.shape[0],):
            raise ValueError(
                f"proj_bias has length {proj_bias.size}, "
                f"expected D={proj_weight.shape[0]} (rows of proj_weight)"
            )
        for name, value in [
            ("W", W), ("b", b), ("p", p), ("k", k),
            ("proj_weight", proj_weight), ("proj_bias", proj_bias),
        ]:
            object.__setattr__(self, name, value)

    @property
    def n_channels(self) -> int:
        return self.W.shape[1]

    @property
    def bottleneck_dim(self) -> int:
        return self.W.shape[0]

    @property
    def embedding_dim(self) -> int:
        return self.proj_weight.shape[0]

    @classmethod
    def random(cls, n_channels: int, bottleneck_dim: int, embedding_dim: int,
               seed: int = 0, scale: float = 1.0) -> "AttentionParams":
        """Seeded Gaussian initialisation, meant for test fixtures only."""
        rng = np.random.default_rng(seed)
        C, R, D = n_channels, bottleneck_dim, embedding_dim
        return cls(
            W=scale * rng.standard_normal((R, C)),
            b=scale * rng.standard_normal(R),
            p=scale * rng.standard_normal((C, R)),
            k=scale * rng.standard_normal(C),
            proj_weight=scale * rng.standard_normal((D, 2 * C)),
            proj_bias=scale * rng.standard_normal(D),
        )


@dataclass(frozen=True)
class AttentionLogits:
    """Unnormalised attention scores ``e`` (T x C) and the source time base."""

    e: np.ndarray
    frame_hop_s: float = DEFAULT_FRAME_HOP_S
    start_s: float = 0.0


@dataclass(frozen=True)
class AttentionWeights:
    alpha: np.ndarray


@dataclass(frozen=True)
class PooledStats:
    mu: np.ndarray
    sigma: np.ndarray


@dataclass(frozen=True)
class SpeakerEmbedding:
    d: np.ndarray
    window_start_s: float
    window_end_s: float

    def __post_init__(self):
        if not self.window_end_s > self.window_start_s:
            raise ValueError(
                f"window_end_s ({self.window_end_s}) must exceed "
                f"window_start_s ({self.window_start_s})"
            )

    @property
    def center_s(self) -> float:
        return 0.5 * (self.window_start_s + self.window_end_s)


@dataclass(frozen=True)
class VadTrack:
    """Per-frame speech logits with a time base."""

    v: np.ndarray
    frame_hop_s: float = DEFAULT_FRAME_HOP_S
    start_s: float = 0.0

    def __post_init__(self):
        v = _as_vector(self.v, "VAD logits")
        if v.size < 1:
            raise ValueError("VAD track must contain at least one frame")
        if not self.frame_hop_s > 0:
            raise ValueError(f"frame_hop_s must be positive, got {self.frame_hop_s}")
        object.__setattr__(self, "v", v)
        object.__setattr__(self, "frame_hop_s", float(self.frame_hop_s))
        object.__setattr__(self, "start_s", float(self.start_s))

    def __len__(self) -> int:
        return self.v.size

    @property
    def end_s(self) -> float:
        return self.start_s + self.v.size * self.frame_hop_s

    def frame_times(self) -> np.ndarray:
        """Start time of every frame."""
        return self.start_s + np.arange(self.v.size) * self.frame_hop_s


def attention_logits(h: FrameFeatureMatrix, params: AttentionParams) -> AttentionLogits:
    """Score every frame and channel: ``e[t, c] = p[c] . relu(W h_t + b) + k[c]``."""
    T, C = h.data.shape
    if params.n_channels != C:
        raise ValueError(
            f"channel mismatch: features have C={C} channels (axis 1) but W "
            f"expects C={params.n_channels} (axis 1 of W)"
        )
    hidden = np.maximum(h.data @ params.W.T + params.b, 0.0)
    e = hidden @ params.p.T + params.k
    return AttentionLogits(e=e, frame_hop_s=h.frame_hop_s, start_s=h.start_s)


def temporal_softmax(e: AttentionLogits) -> AttentionWeights:
    """Softmax over the time axis, independently for every channel."""
    logits = np.asarray(e.e, dtype=np.float64)
    if not np.all(np.isfinite(logits)):
        raise ValueError("attention logits must be finite")
    z = np.exp(logits - logits.max(axis=0, keepdims=True))
    return AttentionWeights(alpha=z / z.sum(axis=0, keepdims=True))


def attentive_stats(h: FrameFeatureMatrix, alpha: AttentionWeights) -> PooledStats:
    """Attention-weighted mean and standard deviation per channel.

    The variance ``E[h^2] - E[h]^2`` is clamped at zero before the square
    root since rounding can push it slightly negative.
    """
    if alpha.alpha.shape != h.data.shape:
        raise ValueError(
            f"attention weights shape {alpha.alpha.shape} does not match "
            f"features shape {h.data.shape}"
        )
    weighted = alpha.alpha * h.data
    mu = weighted.sum(axis=0)
    second = (weighted * h.data).sum(axis=0)
    sigma = np.sqrt(np.maximum(second - mu * mu, 0.0))
    return PooledStats(mu=mu, sigma=sigma)


def vad_logits(e: AttentionLogits) -> VadTrack:
    """Channel-averaged attention score per frame."""
    return VadTrack(v=np.asarray(e.e).mean(axis=1), frame_hop_s=e.frame_hop_s,
                    start_s=e.start_s)


def embed(stats: PooledStats, params: AttentionParams, window_start_s: float = 0.0,
          window_end_s: float | None = None) -> SpeakerEmbedding:
    """Project ``concat(mu, sigma)`` through the final linear layer."""
    pooled = np.concatenate([stats.mu, stats.sigma])
    if params.proj_weight.shape[1] != pooled.size:
        raise ValueError(
            f"proj_weight expects {params.proj_weight.shape[1]} inputs (2C) but "
            f"pooled statistics have {pooled.size}"
        )
    if window_end_s is None:
        window_end_s = window_start_s + 1.0
    d = params.proj_weight @ pooled + params.proj_bias
    return SpeakerEmbedding(d=d, window_start_s=float(window_start_s),
                            window_end_s=float(window_end_s))


def pool_window(h: FrameFeatureMatrix,
                params: AttentionParams) -> tuple[SpeakerEmbedding, VadTrack]:
    """Embedding and VAD logits of one window from a single scoring pass."""
    e = attention_logits(h, params)
    stats = attentive_stats(h, temporal_softmax(e))
    emb = embed(stats, params, window_start_s=h.start_s, window_end_s=h.end_s)
    return emb, vad_logits(e)
