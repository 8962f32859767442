"""Acceptance gate: one printed PASS/FAIL line per headline criterion.

Run with ``pytest tests/test_acceptance.py -v`` (lines are printed even when
output capture is on).
"""

import time

import numpy as np
import pytest

from diapipe import fileio, scoring
from diapipe.attention_pool import (
    AttentionLogits,
    AttentionParams,
    FrameFeatureMatrix,
    VadTrack,
    attention_logits,
    attentive_stats,
    embed,
    temporal_softmax,
    vad_logits,
)
from diapipe.cli import main
from diapipe.config import RunConfig
from diapipe.pipeline import PipelineConfig, diarize
from diapipe.scoring import PRESETS, ScoreConfig, der, optimal_mapping, vad_error
from diapipe.spectral_cluster import (
    AffinityMatrix,
    ClusterConfig,
    cluster,
    cosine_affinity,
    estimate_speakers_eigengap,
    normalized_laplacian,
    prune_topk,
)
from diapipe.synthetic import make_recording
from diapipe.vad_segmenter import HysteresisConfig, hysteresis_segments, postprocess_segments

from blobs import purity, unit_blobs
from instances import as_tuples, random_instance
from oracles import (
    best_mapping_total,
    embed_loop,
    grid_scores,
    hysteresis_automaton,
    logits_loop,
    softmax_loop,
    stats_loop,
    vad_loop,
)


@pytest.fixture
def verdict(capsys):
    def report(name, failures, detail=""):
        ok = not failures
        with capsys.disabled():
            line = f"{'PASS' if ok else 'FAIL'}: {name}"
            print(f"\n{line} ({detail})" if detail else f"\n{line}")
        assert ok, "; ".join(failures[:5])
    return report


def max_err(a, b):
    return float(np.max(np.abs(np.asarray(a, dtype=float) - np.asarray(b, dtype=float)),
                        initial=0.0))


def random_pool_case(seed):
    rng = np.random.default_rng(seed)
    T, C, R, D = (int(x) for x in rng.integers(1, [9, 5, 5, 5]))
    h = FrameFeatureMatrix(rng.standard_normal((T, C)))
    return h, AttentionParams.random(C, R, D, seed=seed + 10_000)


def test_equation_oracles(verdict):
    n_cases, tol = 1000, 1e-12
    failures, worst = [], 0.0
    t0 = time.perf_counter()
    for seed in range(n_cases):
        h, prm = random_pool_case(seed)
        e = attention_logits(h, prm)
        alpha = temporal_softmax(e)
        stats = attentive_stats(h, alpha)
        d = embed(stats, prm).d
        v = vad_logits(e).v

        hl = h.data.tolist()
        e_ref = logits_loop(hl, prm.W.tolist(), prm.b.tolist(), prm.p.tolist(), prm.k.tolist())
        # each stage is fed the library's own upstream output so errors stay local
        a_ref = softmax_loop(e.e.tolist())
        mu_ref, sg_ref = stats_loop(hl, alpha.alpha.tolist())
        d_ref = embed_loop(stats.mu.tolist(), stats.sigma.tolist(),
                           prm.proj_weight.tolist(), prm.proj_bias.tolist())
        v_ref = vad_loop(e.e.tolist())
        errs = {"logits": max_err(e.e, e_ref), "softmax": max_err(alpha.alpha, a_ref),
                "mu": max_err(stats.mu, mu_ref), "sigma": max_err(stats.sigma, sg_ref),
                "embed": max_err(d, d_ref), "vad": max_err(v, v_ref)}
        for name, err in errs.items():
            worst = max(worst, err)
            if err > tol:
                failures.append(f"seed {seed} {name} off by {err:.3g}")
    elapsed = time.perf_counter() - t0
    if elapsed >= 10.0:
        failures.append(f"runtime {elapsed:.2f}s >= 10s")
    verdict("equation-oracle suite", failures,
            f"{n_cases} instances, max err {worst:.2e}, {elapsed:.2f}s")


def test_softmax_and_statistics_invariants(verdict):
    failures = []
    for seed in range(1000):
        rng = np.random.default_rng(seed)
        h, prm = random_pool_case(seed)
        e = attention_logits(h, prm)
        alpha = temporal_softmax(e)
        stats = attentive_stats(h, alpha)
        if max_err(alpha.alpha.sum(axis=0), 1.0) > 1e-6:
            failures.append(f"seed {seed}: alpha does not sum to 1")
        if np.any(stats.sigma < 0):
            failures.append(f"seed {seed}: negative sigma")

        flat = temporal_softmax(AttentionLogits(np.tile(rng.standard_normal(h.n_channels),
                                                        (h.n_frames, 1))))
        plain = attentive_stats(h, flat)
        if max_err(plain.mu, h.data.mean(axis=0)) > 1e-9 or \
                max_err(plain.sigma, h.data.std(axis=0)) > 1e-9:
            failures.append(f"seed {seed}: uniform logits differ from population stats")

        kappa = rng.uniform(-5, 5, h.n_channels)
        shifted = AttentionParams(prm.W, prm.b, prm.p, prm.k + kappa, prm.proj_weight,
                                  prm.proj_bias)
        e2 = attention_logits(h, shifted)
        alpha2 = temporal_softmax(e2)
        stats2 = attentive_stats(h, alpha2)
        diffs = [max_err(alpha2.alpha, alpha.alpha), max_err(stats2.mu, stats.mu),
                 max_err(stats2.sigma, stats.sigma),
                 max_err(embed(stats2, shifted).d, embed(stats, prm).d),
                 max_err(vad_logits(e2).v - vad_logits(e).v, kappa.mean())]
        if max(diffs) > 1e-9:
            failures.append(f"seed {seed}: channel shift changed outputs by {max(diffs):.3g}")
    verdict("softmax/statistics invariants", failures, "1000 instances")


def test_segmentation_suite(verdict):
    failures = []
    for seed in range(500):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(1, 400))
        v = np.cumsum(rng.standard_normal(n)) * 0.2 if seed % 2 else rng.standard_normal(n)
        off = float(rng.normal())
        on = off + float(rng.uniform(0, 1.5))
        track = VadTrack(v, 0.01, float(rng.uniform(0, 5)))
        segs = hysteresis_segments(track, HysteresisConfig(on, off))
        got = [(s.onset, s.offset) for s in segs]
        if got != hysteresis_automaton(v.tolist(), on, off, 0.01, track.start_s):
            failures.append(f"seed {seed}: automaton mismatch")

        bump = float(rng.uniform(0, 1))
        total = sum(s.duration for s in segs)
        hi_on = hysteresis_segments(track, HysteresisConfig(on + bump, off))
        lo_off = hysteresis_segments(track, HysteresisConfig(on, off - bump))
        if sum(s.duration for s in hi_on) > total + 1e-9 or \
                sum(s.duration for s in lo_off) < total - 1e-9:
            failures.append(f"seed {seed}: threshold monotonicity violated")

        cfg = HysteresisConfig(on, off, min_dur_s=float(rng.uniform(0, 0.5)),
                               max_gap_s=float(rng.uniform(0, 0.5)))
        once = postprocess_segments(segs, cfg)
        if postprocess_segments(once, cfg) != once:
            failures.append(f"seed {seed}: postprocess not idempotent")
    verdict("segmentation suite", failures, "500 random tracks")


def block_affinity(sizes, value):
    n = sum(sizes)
    a = np.zeros((n, n))
    start = 0
    for size in sizes:
        a[start:start + size, start:start + size] = value
        start += size
    np.fill_diagonal(a, 1.0)
    return AffinityMatrix(a)


def test_clustering_suite(verdict):
    failures = []
    t0 = time.perf_counter()
    eig_lo, eig_hi = np.inf, -np.inf
    for seed in range(50):
        X, truth = unit_blobs(seed)
        res = cluster(X, cfg=ClusterConfig(seed=seed))
        if res.n_speakers != 3:
            failures.append(f"seed {seed}: estimated n = {res.n_speakers}")
        if purity(res.labels, truth) != 1.0:
            failures.append(f"seed {seed}: purity {purity(res.labels, truth):.3f}")
        for aff in (cosine_affinity(X), prune_topk(cosine_affinity(X), 10)):
            vals = np.linalg.eigvalsh(normalized_laplacian(aff))
            eig_lo, eig_hi = min(eig_lo, vals.min()), max(eig_hi, vals.max())
        rng = np.random.default_rng(seed)
        vals = np.linalg.eigvalsh(normalized_laplacian(
            cosine_affinity(rng.standard_normal((int(rng.integers(2, 40)), 8)))))
        eig_lo, eig_hi = min(eig_lo, vals.min()), max(eig_hi, vals.max())
    if eig_lo < -1e-9 or eig_hi > 2 + 1e-9:
        failures.append(f"eigenvalues span [{eig_lo:.3g}, {eig_hi:.3g}]")

    for sizes in ([3], [2, 5], [4, 4, 1], [1, 1, 1, 1], [6, 2, 3, 5], [10] * 6):
        vals = np.linalg.eigvalsh(normalized_laplacian(block_affinity(sizes, 0.7)))
        zeros = int(np.sum(np.abs(vals) < 1e-9))
        if zeros != len(sizes):
            failures.append(f"blocks {sizes}: {zeros} zero eigenvalues")
        if estimate_speakers_eigengap(vals, 20) != len(sizes) and len(sizes) < sum(sizes):
            failures.append(f"blocks {sizes}: eigengap picked {estimate_speakers_eigengap(vals, 20)}")
    elapsed = time.perf_counter() - t0
    if elapsed >= 30.0:
        failures.append(f"runtime {elapsed:.2f}s >= 30s")
    verdict("clustering suite", failures, f"50/50 seeds, {elapsed:.2f}s")


def test_scoring_suite(verdict):
    failures = []
    for seed in range(500):
        rng = np.random.default_rng(seed)
        ref, hyp = random_instance(rng, length_ms=6000)
        cfg = ScoreConfig(collar_s=float(rng.choice([0.0, 0.25, 0.5])),
                          skip_overlap=bool(rng.integers(2)))
        g = grid_scores(as_tuples(ref), as_tuples(hyp), cfg.collar_s, cfg.skip_overlap)
        tol = 0.0002 * (2 * len(ref) + 2 * len(hyp))
        d, v = der(ref, hyp, cfg), vad_error(ref, hyp, cfg)
        pairs = [(d.false_alarm_s, g["fa"]), (d.missed_s, g["miss"]),
                 (d.confusion_s, g["conf"]), (d.scored_speech_s, g["speech"]),
                 (d.correct_s, g["best_total"]),
                 (v.false_alarm_s, g["vad_fa"]), (v.missed_s, g["vad_miss"]),
                 (v.scored_time_s, g["scored_time"])]
        if any(abs(a - b) > tol for a, b in pairs):
            failures.append(f"seed {seed}: grid oracle mismatch")

        self_score = der(ref, ref, cfg)
        if self_score.der != 0.0:
            failures.append(f"seed {seed}: DER(ref, ref) = {self_score.der}")

        ov = rng.random((int(rng.integers(1, 5)), int(rng.integers(1, 5))))
        ov[rng.random(ov.shape) < 0.3] = 0.0
        mapping = optimal_mapping(ov)
        got = sum(ov[r, mapping[r]] for r in sorted(mapping))
        if got != best_mapping_total(ov.tolist()):
            failures.append(f"seed {seed}: Hungarian total {got} != exhaustive")

        text = scoring.write_rttm(scoring.segments_to_records(f"rec{seed}", ref))
        if scoring.write_rttm(scoring.parse_rttm(text)) != text:
            failures.append(f"seed {seed}: RTTM round trip not canonical")
    verdict("scoring suite", failures, "500 randomized instances")


def test_end_to_end_fixture(verdict, tmp_path):
    rec = make_recording()
    strict = ScoreConfig(collar_s=0.0)
    failures = []
    modes = {"estimated-n": {}, "oracle-n": {"oracle_n": 2}}
    for mode, extra in modes.items():
        cfg = PipelineConfig(hysteresis=HysteresisConfig(rec.theta_on, rec.theta_off), **extra)
        runs = [scoring.write_rttm(scoring.segments_to_records(
            "synth", diarize(rec.features, rec.params, cfg, "synth").segments)) for _ in range(2)]
        hyp = scoring.records_to_segments(scoring.parse_rttm(runs[0]))["synth"]
        d, v = der(rec.truth, hyp, strict), vad_error(rec.truth, hyp, strict)
        if d.der != 0.0 or v.vad_error != 0.0:
            failures.append(f"{mode}: DER {d.der:.4f}, VAD {v.vad_error:.4f}")
        if runs[0] != runs[1]:
            failures.append(f"{mode}: library reruns differ")

    fileio.write_features(tmp_path / "synth.fmv", rec.features)
    fileio.write_params(tmp_path / "params.bin", rec.params)
    outs = []
    for i in range(2):
        out = tmp_path / f"run{i}.rttm"
        main(["diarize", str(tmp_path / "synth.fmv"), str(tmp_path / "params.bin"),
              "--set", f"hysteresis.theta_on={rec.theta_on}",
              "--set", f"hysteresis.theta_off={rec.theta_off}", "--out", str(out)])
        outs.append(out.read_bytes())
    if outs[0] != outs[1]:
        failures.append("CLI reruns differ")
    hyp = scoring.records_to_segments(scoring.parse_rttm(outs[0].decode()))["synth"]
    if der(rec.truth, hyp, strict).der != 0.0:
        failures.append("CLI output does not score DER 0")
    verdict("end-to-end synthetic fixture", failures, "estimated-n and oracle-n")


def test_protocol_presets(verdict):
    expected = {"ami": (0.25, True), "voxconverse": (0.25, False), "dihard": (0.0, False)}
    failures = []
    for name, (collar, skip) in expected.items():
        sc = RunConfig.resolve(name).score_config()
        if (sc.collar_s, sc.skip_overlap) != (collar, skip) or PRESETS[name] != sc:
            failures.append(f"{name} expands to collar {sc.collar_s}, skip {sc.skip_overlap}")
    if set(PRESETS) != set(expected):
        failures.append(f"unexpected presets {sorted(PRESETS)}")
    verdict("protocol presets", failures, ", ".join(expected))
