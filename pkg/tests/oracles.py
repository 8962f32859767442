"""Slow, independent reference implementations used only by the tests.

Everything here is written with plain Python loops over scalars so that it
shares no code path with the vectorised library.
"""

import itertools
import math


# ------------------------------------------------------------ attention pool

def logits_loop(h, W, b, p, k):
    T, C = len(h), len(h[0])
    R = len(W)
    e = [[0.0] * C for _ in range(T)]
    for t in range(T):
        hidden = []
        for r in range(R):
            acc = b[r]
            for c in range(C):
                acc += W[r][c] * h[t][c]
            hidden.append(acc if acc > 0 else 0.0)
        for c in range(C):
            acc = k[c]
            for r in range(R):
                acc += p[c][r] * hidden[r]
            e[t][c] = acc
    return e


def softmax_loop(e):
    T, C = len(e), len(e[0])
    alpha = [[0.0] * C for _ in range(T)]
    for c in range(C):
        top = max(e[t][c] for t in range(T))
        z = [math.exp(e[t][c] - top) for t in range(T)]
        s = math.fsum(z)
        for t in range(T):
            alpha[t][c] = z[t] / s
    return alpha


def stats_loop(h, alpha):
    T, C = len(h), len(h[0])
    mu, sigma = [], []
    for c in range(C):
        m = math.fsum(alpha[t][c] * h[t][c] for t in range(T))
        sq = math.fsum(alpha[t][c] * h[t][c] * h[t][c] for t in range(T))
        mu.append(m)
        sigma.append(math.sqrt(max(0.0, sq - m * m)))
    return mu, sigma


def vad_loop(e):
    return [math.fsum(row) / len(row) for row in e]


def embed_loop(mu, sigma, weight, bias):
    x = list(mu) + list(sigma)
    return [bias[d] + math.fsum(weight[d][i] * x[i] for i in range(len(x)))
            for d in range(len(weight))]


# ---------------------------------------------------------------- segmenter

def hysteresis_automaton(v, on, off, hop, start):
    segs = []
    is_open = False
    begin = 0
    for i, x in enumerate(v):
        if not is_open and x >= on:
            is_open, begin = True, i
        elif is_open and x < off:
            segs.append((start + begin * hop, start + i * hop))
            is_open = False
    if is_open:
        segs.append((start + begin * hop, start + len(v) * hop))
    return segs


def merge_fixpoint(segs, max_gap, min_dur):
    """Repeatedly fuse any two segments within max_gap until nothing changes."""
    cur = [list(s) for s in segs]
    changed = True
    while changed:
        changed = False
        for i in range(len(cur)):
            for j in range(len(cur)):
                if i == j:
                    continue
                a, b = cur[i], cur[j]
                gap = max(a[0], b[0]) - min(a[1], b[1])
                if gap <= max_gap:
                    cur[i] = [min(a[0], b[0]), max(a[1], b[1])]
                    del cur[j]
                    changed = True
                    break
            if changed:
                break
    return sorted((a, b) for a, b in cur if b - a >= min_dur)


def aggregate_counting(tracks, hop):
    """tracks: list of (start_frame, values)."""
    n = max(s + len(v) for s, v in tracks)
    sums = [0.0] * n
    counts = [0] * n
    for s, vals in tracks:
        for i, x in enumerate(vals):
            sums[s + i] += x
            counts[s + i] += 1
    return [sums[i] / counts[i] for i in range(n)]


def gate_pairwise(segs, windows):
    kept = []
    for w in windows:
        for s in segs:
            if min(w[1], s[1]) - max(w[0], s[0]) > 0:
                kept.append(w)
                break
    return kept


# --------------------------------------------------------------- clustering

def cosine_direct(X):
    n = len(X)
    out = [[0.0] * n for _ in range(n)]
    for i in range(n):
        for j in range(n):
            dot = math.fsum(a * b for a, b in zip(X[i], X[j]))
            ni = math.sqrt(math.fsum(a * a for a in X[i]))
            nj = math.sqrt(math.fsum(b * b for b in X[j]))
            out[i][j] = 1.0 if i == j else max(0.0, dot / (ni * nj))
    return out


def prune_rowsort(a, top_k):
    n = len(a)
    k = min(top_k, n - 1)
    rows = [[0.0] * n for _ in range(n)]
    for i in range(n):
        others = sorted((j for j in range(n) if j != i), key=lambda j: (-a[i][j], j))
        for j in others[:k] + [i]:
            rows[i][j] = a[i][j]
    return [[max(rows[i][j], rows[j][i]) for j in range(n)] for i in range(n)]


def laplacian_elementwise(a):
    n = len(a)
    deg = [math.fsum(row) for row in a]
    L = [[0.0] * n for _ in range(n)]
    for i in range(n):
        for j in range(n):
            if deg[i] > 0 and deg[j] > 0:
                val = a[i][j] / math.sqrt(deg[i] * deg[j])
            else:
                val = 0.0
            L[i][j] = (1.0 if i == j else 0.0) - val
    return L


# ------------------------------------------------------------------ scoring

GRID = 0.001


def _active(segs, t):
    return any(a <= t < b for a, b in segs)


def grid_scores(ref, hyp, collar, skip_overlap):
    """Count 1 ms cells; ref/hyp are lists of (onset, offset, speaker).

    Returns (fa, miss, conf, scored_speech, vad_fa, vad_miss, scored_time),
    all in seconds, plus the best mapping total from exhaustive search.
    """
    end = max([s[1] for s in ref + hyp] + [0.0])
    n = int(round(end / GRID))
    half = collar / 2
    ref_spk = sorted({s[2] for s in ref})
    hyp_spk = sorted({s[2] for s in hyp})
    ref_by = {k: [(a, b) for a, b, s in ref if s == k] for k in ref_spk}
    hyp_by = {k: [(a, b) for a, b, s in hyp if s == k] for k in hyp_spk}
    bounds = [x for a, b, _ in ref for x in (a, b)]

    cells = []
    for i in range(n):
        t = (i + 0.5) * GRID
        if any(abs(t - x) <= half for x in bounds) and half > 0:
            continue
        r_act = [k for k in ref_spk if _active(ref_by[k], t)]
        if skip_overlap and len(r_act) >= 2:
            continue
        h_act = [k for k in hyp_spk if _active(hyp_by[k], t)]
        cells.append((r_act, h_act))

    overlap = [[0.0] * len(hyp_spk) for _ in ref_spk]
    for r_act, h_act in cells:
        for r in r_act:
            for h in h_act:
                overlap[ref_spk.index(r)][hyp_spk.index(h)] += GRID

    size = max(len(ref_spk), len(hyp_spk))
    best_total, best_map = -1.0, {}
    for perm in itertools.permutations(range(size)):
        total = 0.0
        mapping = {}
        for i in range(len(ref_spk)):
            j = perm[i]
            if j < len(hyp_spk):
                total += overlap[i][j]
                mapping[ref_spk[i]] = hyp_spk[j]
        if total > best_total + 1e-12:
            best_total, best_map = total, mapping

    fa = miss = conf = speech = vfa = vmiss = 0.0
    for r_act, h_act in cells:
        nr, nh = len(r_act), len(h_act)
        ok = sum(1 for r in r_act if best_map.get(r) in h_act)
        miss += GRID * max(nr - nh, 0)
        fa += GRID * max(nh - nr, 0)
        conf += GRID * (min(nr, nh) - ok)
        speech += GRID * nr
        if nr and not nh:
            vmiss += GRID
        if nh and not nr:
            vfa += GRID
    return dict(fa=fa, miss=miss, conf=conf, speech=speech, vad_fa=vfa,
                vad_miss=vmiss, scored_time=GRID * len(cells), best_total=best_total)


def best_mapping_total(overlap):
    """Exhaustive search over injective reference->hypothesis mappings."""
    n_ref = len(overlap)
    n_hyp = len(overlap[0]) if n_ref else 0
    size = max(n_ref, n_hyp)
    best = 0.0
    for perm in itertools.permutations(range(size)):
        total = sum(overlap[i][perm[i]] for i in range(n_ref) if perm[i] < n_hyp)
        best = max(best, total)
    return best


# --------------------------------------------------------------- assignment

def nearest_center_labels(frame_centers, windows):
    """windows: list of (start, end, label); nearest covering centre, ties earlier."""
    order = sorted(range(len(windows)), key=lambda i: (windows[i][0], windows[i][1]))
    out = []
    for t in frame_centers:
        best, best_d = None, math.inf
        for i in order:
            s, e, lab = windows[i]
            if s <= t < e:
                d = abs((s + e) / 2 - t)
                if d < best_d:
                    best, best_d = lab, d
        out.append(best)
    return out
