"""
Single-step diarization on a synthetic recording
================================================

Features, VAD, embeddings, clustering and scoring in one script. The
estimated run and the oracle run should both score zero.
"""

from diapipe import HysteresisConfig, PipelineConfig, ScoreConfig, der, diarize
from diapipe.synthetic import make_recording
from diapipe.scoring import segments_to_records, write_rttm

rec = make_recording(seed=7)
strict = ScoreConfig(collar_s=0.0)
base = HysteresisConfig(rec.theta_on, rec.theta_off)

estimated = diarize(rec.features, rec.params, PipelineConfig(hysteresis=base), "synth")
print(write_rttm(segments_to_records("synth", estimated.segments)), end="")
print("speakers found:", estimated.speakers())
print(f"DER estimated: {der(rec.truth, estimated.segments, strict).der:.2f}%")

oracle = PipelineConfig(hysteresis=base, oracle_vad=tuple(rec.truth), oracle_n=2)
hyp = diarize(rec.features, rec.params, oracle, "synth")
print(f"DER oracle VAD + n: {der(rec.truth, hyp.segments, strict).der:.2f}%")
