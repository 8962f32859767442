"""Spectral clustering of speaker embeddings with eigengap speaker counting."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .attention_pool import SpeakerEmbedding


@dataclass(frozen=True)
class ClusterConfig:
    top_k: int = 10
    max_speakers: int = 20
    kmeans_restarts: int = 10
    kmeans_iters: int = 300
    seed: int = 0
    row_normalize: bool = False

    def __post_init__(self):
        if self.top_k < 1:
            raise ValueError(f"top_k must be >= 1, got {self.top_k}")
        if self.max_speakers < 1:
            raise ValueError(f"max_speakers must be >= 1, got {self.max_speakers}")
        if self.kmeans_restarts < 1 or self.kmeans_iters < 1:
            raise ValueError("kmeans_restarts and kmeans_iters must be >= 1")


@dataclass(frozen=True)
class AffinityMatrix:
    a: np.ndarray
    pruned: bool = False


@dataclass(frozen=True)
class ClusterResult:
    labels: np.ndarray
    n_speakers: int
    eigenvalues: np.ndarray


def _embedding_matrix(embeddings) -> np.ndarray:
    if len(embeddings) and isinstance(embeddings[0], SpeakerEmbedding):
        return np.stack([np.asarray(e.d, dtype=np.float64) for e in embeddings])
    return np.atleast_2d(np.asarray(embeddings, dtype=np.float64))


def cosine_affinity(embeddings) -> AffinityMatrix:
    """Pairwise cosine similarity, negatives clamped to 0, unit diagonal.

    ``embeddings`` is a sequence of :class:`SpeakerEmbedding` or an (N, D)
    array.
    """
    X = _embedding_matrix(embeddings)
    if X.shape[0] < 1:
        raise ValueError("need at least one embedding")
    norms = np.linalg.norm(X, axis=1)
    zero = np.flatnonzero(norms == 0)
    if zero.size:
        raise ValueError(f"embedding {int(zero[0])} has zero norm")
    U = X / norms[:, None]
    a = np.clip(U @ U.T, 0.0, 1.0)
    np.fill_diagonal(a, 1.0)
    return AffinityMatrix(a=a, pruned=False)


def prune_topk(aff: AffinityMatrix, top_k: int) -> AffinityMatrix:
    """Keep the ``top_k`` largest off-diagonal entries of each row.

    The diagonal is always kept. The row-pruned matrix is symmetrised with an
    element-wise max. Ties are resolved toward the lower column index.
    """
    a = aff.a
    n = a.shape[0]
    k = min(top_k, n - 1)
    if k >= n - 1:
        return AffinityMatrix(a=a.copy(), pruned=True)
    off = a.copy()
    np.fill_diagonal(off, -np.inf)
    order = np.argsort(-off, axis=1, kind="stable")[:, :k]
    keep = np.zeros_like(a, dtype=bool)
    np.put_along_axis(keep, order, True, axis=1)
    np.fill_diagonal(keep, True)
    rows = np.where(keep, a, 0.0)
    return AffinityMatrix(a=np.maximum(rows, rows.T), pruned=True)


def normalized_laplacian(aff) -> np.ndarray:
    """``I - D^-1/2 A D^-1/2``; zero-degree nodes get identity rows."""
    a = aff.a if isinstance(aff, AffinityMatrix) else np.asarray(aff, dtype=np.float64)
    deg = a.sum(axis=1)
    inv_sqrt = np.zeros_like(deg)
    pos = deg > 0
    inv_sqrt[pos] = 1.0 / np.sqrt(deg[pos])
    L = np.eye(a.shape[0]) - inv_sqrt[:, None] * a * inv_sqrt[None, :]
    return 0.5 * (L + L.T)


def estimate_speakers_eigengap(eigenvalues: Sequence[float], max_speakers: int) -> int:
    """Index (1-based) of the largest gap between consecutive eigenvalues.

    Only the first ``min(max_speakers, len - 1)`` gaps are searched; ties go
    to the smaller count.
    """
    lam = np.asarray(eigenvalues, dtype=np.float64)
    if lam.size < 2:
        raise ValueError("need at least two eigenvalues")
    m = min(max_speakers, lam.size - 1)
    gaps = np.diff(lam[: m + 1])
    return int(np.argmax(gaps)) + 1


def _kmeans_pp(X: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = X.shape[0]
    centers = np.empty((k, X.shape[1]))
    centers[0] = X[rng.integers(n)]
    d2 = np.sum((X - centers[0]) ** 2, axis=1)
    for j in range(1, k):
        total = d2.sum()
        if total > 0:
            idx = rng.choice(n, p=d2 / total)
        else:
            idx = rng.integers(n)
        centers[j] = X[idx]
        d2 = np.minimum(d2, np.sum((X - centers[j]) ** 2, axis=1))
    return centers


def _assign(X: np.ndarray, centers: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    d2 = ((X[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
    labels = np.argmin(d2, axis=1)
    return labels, d2[np.arange(len(X)), labels]


def _fill_empty(X, labels, dist, k):
    # move the worst-fitting point of a multi-member cluster into each empty one
    for j in range(k):
        if np.any(labels == j):
            continue
        counts = np.bincount(labels, minlength=k)
        movable = counts[labels] > 1
        cand = np.where(movable, dist, -1.0)
        i = int(np.argmax(cand))
        labels[i] = j
        dist[i] = 0.0
    return labels


def _lloyd(X: np.ndarray, k: int, iters: int, rng: np.random.Generator):
    centers = _kmeans_pp(X, k, rng)
    labels, dist = _assign(X, centers)
    for _ in range(iters):
        labels = _fill_empty(X, labels, dist, k)
        new_centers = np.stack([X[labels == j].mean(axis=0) for j in range(k)])
        new_labels, dist = _assign(X, new_centers)
        converged = np.array_equal(new_labels, labels) and np.allclose(new_centers, centers)
        centers, labels = new_centers, new_labels
        if converged:
            break
    labels = _fill_empty(X, labels, dist, k)
    centers = np.stack([X[labels == j].mean(axis=0) for j in range(k)])
    inertia = float(((X - centers[labels]) ** 2).sum())
    return labels, inertia


def kmeans(X: np.ndarray, k: int, restarts: int = 10, iters: int = 300,
           seed: int = 0) -> tuple[np.ndarray, float]:
    """Lloyd's k-means with k-means++ seeding; lowest inertia wins.

    Each restart draws from its own child seed, and the winner is picked by
    ``(inertia, restart index)``, so the result does not depend on the order
    the restarts are evaluated in.
    """
    X = np.asarray(X, dtype=np.float64)
    if k > X.shape[0]:
        raise ValueError(f"cannot form {k} clusters from {X.shape[0]} points")
    children = np.random.SeedSequence(seed).spawn(restarts)
    runs = [_lloyd(X, k, iters, np.random.default_rng(s)) for s in children]
    best = min(range(restarts), key=lambda r: (runs[r][1], r))
    return runs[best]


def _canonical_labels(labels: np.ndarray) -> np.ndarray:
    """Relabel clusters in order of first appearance."""
    values, first = np.unique(labels, return_index=True)
    remap = np.empty(values.max() + 1, dtype=np.int64)
    remap[values[np.argsort(first)]] = np.arange(values.size)
    return remap[labels]


def spectral_kmeans(L: np.ndarray, n: int, cfg: ClusterConfig,
                    eig: Optional[tuple[np.ndarray, np.ndarray]] = None) -> ClusterResult:
    """k-means on the rows of the ``n`` smallest-eigenvalue eigenvectors of ``L``."""
    L = np.asarray(L, dtype=np.float64)
    N = L.shape[0]
    if n < 1:
        raise ValueError(f"number of speakers must be >= 1, got {n}")
    if n > N:
        raise ValueError(f"cannot find {n} speakers among {N} embeddings")
    vals, vecs = eig if eig is not None else np.linalg.eigh(L)
    if n == 1:
        return ClusterResult(labels=np.zeros(N, dtype=np.int64), n_speakers=1,
                             eigenvalues=vals)
    X = vecs[:, :n]
    if cfg.row_normalize:
        norms = np.linalg.norm(X, axis=1, keepdims=True)
        X = X / np.where(norms > 0, norms, 1.0)
    labels, _ = kmeans(X, n, cfg.kmeans_restarts, cfg.kmeans_iters, cfg.seed)
    labels = _canonical_labels(labels)
    return ClusterResult(labels=labels, n_speakers=int(labels.max()) + 1,
                         eigenvalues=vals)


def cluster(embeddings, oracle_n: Optional[int] = None,
            cfg: ClusterConfig = ClusterConfig()) -> ClusterResult:
    """Full recipe: affinity, pruning, Laplacian, speaker count, k-means."""
    X = _embedding_matrix(embeddings)
    N = X.shape[0]
    if N < 1:
        raise ValueError("need at least one embedding")
    if N == 1:
        if oracle_n is not None and oracle_n > 1:
            raise ValueError(f"cannot find {oracle_n} speakers among 1 embedding")
        return ClusterResult(labels=np.zeros(1, dtype=np.int64), n_speakers=1,
                             eigenvalues=np.zeros(1))
    aff = prune_topk(cosine_affinity(X), cfg.top_k)
    L = normalized_laplacian(aff)
    vals, vecs = np.linalg.eigh(L)
    n = oracle_n if oracle_n is not None else estimate_speakers_eigengap(vals, cfg.max_speakers)
    return spectral_kmeans(L, n, cfg, eig=(vals, vecs))


def format_debug_csv(result: ClusterResult) -> str:
    """Eigenvalues and labels as CSV (``index,eigenvalue,label``)."""
    lines = ["index,eigenvalue,label"]
    for i in range(max(result.eigenvalues.size, result.labels.size)):
        ev = f"{result.eigenvalues[i]:.12g}" if i < result.eigenvalues.size else ""
        lab = str(int(result.labels[i])) if i < result.labels.size else ""
        lines.append(f"{i},{ev},{lab}")
    return "\n".join(lines) + "\n"
