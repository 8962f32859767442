"""
Counting speakers with the eigengap
===================================
"""

import numpy as np

from diapipe import ClusterConfig, cluster
from diapipe.spectral_cluster import cosine_affinity, normalized_laplacian, prune_topk

rng = np.random.default_rng(3)

# three speakers, 15 windows each, in a 32-dim embedding space
centres = np.linalg.qr(rng.standard_normal((32, 32)))[0][:, :3].T
X = np.vstack([c + 0.05 * rng.standard_normal((15, 32)) for c in centres])

A = prune_topk(cosine_affinity(X), top_k=10)
L = normalized_laplacian(A)
vals = np.linalg.eigvalsh(L)
print("smallest eigenvalues:", np.round(vals[:6], 4))
print("gaps:", np.round(np.diff(vals[:6]), 4))

res = cluster(X, cfg=ClusterConfig(seed=0))
print("estimated speakers:", res.n_speakers)
print("labels:", res.labels.reshape(3, 15))

# with the count known, the eigengap step is skipped
print("oracle n=2:", np.bincount(cluster(X, oracle_n=2).labels))
