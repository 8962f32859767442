"""
Attentive statistics pooling by hand
====================================

One window of frame features goes through the attention scorer. The same
logits give a per-channel weighted mean and std (the embedding input) and,
averaged over channels, a per-frame speech score.
"""

import numpy as np

from diapipe import AttentionParams, FrameFeatureMatrix, pool_window
from diapipe.attention_pool import attention_logits, attentive_stats, temporal_softmax

rng = np.random.default_rng(0)

# 200 frames at 10 ms, 6 channels; the middle second is louder
data = 0.1 * rng.standard_normal((200, 6))
data[50:150] += 1.0
h = FrameFeatureMatrix(data, frame_hop_s=0.01)

params = AttentionParams.random(n_channels=6, bottleneck_dim=4, embedding_dim=8, seed=1)

e = attention_logits(h, params)
alpha = temporal_softmax(e)
print("logits shape:", e.e.shape)
print("weights sum per channel:", np.round(alpha.alpha.sum(axis=0), 12))

stats = attentive_stats(h, alpha)
print("weighted mean:", np.round(stats.mu, 3))
print("weighted std: ", np.round(stats.sigma, 3))

# the one-call version returns both outputs of the single scoring pass.
# These weights are random, so the VAD logit has no speech meaning yet.
emb, track = pool_window(h, params)
print("embedding:", np.round(emb.d, 3))
print("mean VAD logit, quiet vs loud frames:",
      round(float(track.v[:50].mean()), 3), round(float(track.v[50:150].mean()), 3))
