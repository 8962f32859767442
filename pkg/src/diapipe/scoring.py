"""RTTM I/O, VAD error and diarization error rate.

All time arithmetic is exact: durations come from an endpoint sweep over
span sets, never from a sampled grid.

Collar convention: each reference boundary is surrounded by an excluded
band of total width ``collar_s``, i.e. ``[boundary - collar_s / 2,
boundary + collar_s / 2]``. Some toolkits use ``+/- collar_s`` instead.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from . import intervals as iv
from .vad_segmenter import Segment


@dataclass(frozen=True)
class RttmRecord:
    recording_id: str
    channel: str
    onset_s: float
    duration_s: float
    speaker_id: str

    @property
    def offset_s(self) -> float:
        return self.onset_s + self.duration_s


@dataclass(frozen=True)
class ScoreConfig:
    collar_s: float = 0.25
    skip_overlap: bool = False

    def __post_init__(self):
        if self.collar_s < 0:
            raise ValueError(f"collar_s must be non-negative, got {self.collar_s}")


PRESETS = {
    "ami": ScoreConfig(collar_s=0.25, skip_overlap=True),
    "voxconverse": ScoreConfig(collar_s=0.25, skip_overlap=False),
    "dihard": ScoreConfig(collar_s=0.0, skip_overlap=False),
}


@dataclass
class ScoreReport:
    """Error durations over the scored regions of one or more recordings.

    ``metric`` decides the denominator of the FA/MS/CONF percentages: total
    scored time for ``"vad"``, scored reference speech for ``"der"``.
    """

    false_alarm_s: float = 0.0
    missed_s: float = 0.0
    confusion_s: float = 0.0
    scored_speech_s: float = 0.0
    scored_time_s: float = 0.0
    metric: str = "der"
    correct_s: float = 0.0

    def __add__(self, other: "ScoreReport") -> "ScoreReport":
        if self.metric != other.metric:
            raise ValueError("cannot add VAD and DER reports")
        return ScoreReport(
            false_alarm_s=self.false_alarm_s + other.false_alarm_s,
            missed_s=self.missed_s + other.missed_s,
            confusion_s=self.confusion_s + other.confusion_s,
            scored_speech_s=self.scored_speech_s + other.scored_speech_s,
            scored_time_s=self.scored_time_s + other.scored_time_s,
            metric=self.metric,
            correct_s=self.correct_s + other.correct_s,
        )

    @property
    def denominator_s(self) -> float:
        return self.scored_time_s if self.metric == "vad" else self.scored_speech_s

    def _pct(self, value: float) -> float:
        if self.denominator_s > 0:
            return 100.0 * value / self.denominator_s
        return 0.0 if value == 0 else float("inf")

    @property
    def fa(self) -> float:
        return self._pct(self.false_alarm_s)

    @property
    def ms(self) -> float:
        return self._pct(self.missed_s)

    @property
    def conf(self) -> float:
        return self._pct(self.confusion_s)

    @property
    def vad_error(self) -> float:
        return self.fa + self.ms

    @property
    def der(self) -> float:
        err = self.false_alarm_s + self.missed_s + self.confusion_s
        if self.scored_speech_s > 0:
            return 100.0 * err / self.scored_speech_s
        return 0.0 if err == 0 else float("inf")


# --------------------------------------------------------------------- RTTM

def parse_rttm(text: str) -> list[RttmRecord]:
    """Parse ``SPEAKER`` lines; blank lines and ``;;`` comments are skipped."""
    records = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith(";;"):
            continue
        fields = line.split()
        if len(fields) != 10:
            raise ValueError(f"RTTM line {lineno}: expected 10 fields, got {len(fields)}")
        if fields[0] != "SPEAKER":
            continue
        try:
            onset, dur = float(fields[3]), float(fields[4])
        except ValueError:
            raise ValueError(
                f"RTTM line {lineno}: non-numeric onset/duration "
                f"{fields[3]!r} {fields[4]!r}"
            ) from None
        if not np.isfinite(onset) or not np.isfinite(dur) or onset < 0 or dur <= 0:
            raise ValueError(f"RTTM line {lineno}: need onset >= 0 and duration > 0")
        records.append(RttmRecord(fields[1], fields[2], onset, dur, fields[7]))
    return records


def write_rttm(records: Iterable[RttmRecord]) -> str:
    ordered = sorted(records, key=lambda r: (r.recording_id, r.onset_s, r.speaker_id,
                                             r.duration_s))
    return "".join(
        f"SPEAKER {r.recording_id} {r.channel} {r.onset_s:.3f} {r.duration_s:.3f} "
        f"<NA> <NA> {r.speaker_id} <NA> <NA>\n"
        for r in ordered
    )


def records_to_segments(records: Iterable[RttmRecord]) -> dict[str, list[Segment]]:
    """Group records by recording id into labeled segment lists."""
    out: dict[str, list[Segment]] = defaultdict(list)
    for r in records:
        out[r.recording_id].append(Segment(r.onset_s, r.offset_s, r.speaker_id))
    return {k: sorted(v) for k, v in out.items()}


def segments_to_records(recording_id: str, segs: Sequence[Segment],
                        channel: str = "1") -> list[RttmRecord]:
    return [
        RttmRecord(recording_id, channel, s.onset, s.offset - s.onset,
                   s.speaker if s.speaker is not None else "speech")
        for s in segs
    ]


# ------------------------------------------------------------------ regions

def _by_speaker(segs: Sequence[Segment]) -> dict[str, np.ndarray]:
    groups: dict[str, list] = defaultdict(list)
    for s in segs:
        groups[s.speaker if s.speaker is not None else "speech"].append((s.onset, s.offset))
    return {spk: iv.union(spans) for spk, spans in sorted(groups.items())}


def excluded_regions(ref: Sequence[Segment], cfg: ScoreConfig) -> np.ndarray:
    """Collar bands around reference boundaries, plus overlap if requested."""
    half = cfg.collar_s / 2.0
    bands = []
    if half > 0:
        for s in ref:
            bands.append((s.onset - half, s.onset + half))
            bands.append((s.offset - half, s.offset + half))
    if cfg.skip_overlap:
        per_spk = list(_by_speaker(ref).values())
        edges = np.unique(np.concatenate([p.reshape(-1) for p in per_spk])) if per_spk else []
        if len(edges) > 1:
            counts = iv.coverage_count(per_spk, edges)
            for i in np.flatnonzero(counts >= 2):
                bands.append((edges[i], edges[i + 1]))
    return iv.union(bands)


def _extent(*segment_lists) -> tuple[float, float]:
    hi = 0.0
    for segs in segment_lists:
        for s in segs:
            hi = max(hi, s.offset)
    return 0.0, hi


def scoring_regions(ref: Sequence[Segment], cfg: ScoreConfig,
                    extent: Optional[tuple[float, float]] = None) -> np.ndarray:
    """Scored spans: ``extent`` minus the excluded regions.

    ``extent`` defaults to ``[0, last reference offset)``.
    """
    lo, hi = extent if extent is not None else _extent(ref)
    return iv.complement(excluded_regions(ref, cfg), lo, hi)


# ------------------------------------------------------------------ metrics

def vad_error(ref: Sequence[Segment], hyp: Sequence[Segment],
              cfg: ScoreConfig = ScoreConfig(),
              extent: Optional[tuple[float, float]] = None) -> ScoreReport:
    """Speech/non-speech errors; FA and MS are percentages of scored time.

    Speaker labels are ignored. ``extent`` defaults to ``[0, last offset)``
    over both inputs.
    """
    if extent is None:
        extent = _extent(ref, hyp)
    scored = scoring_regions(ref, cfg, extent)
    ref_speech = iv.intersect([(s.onset, s.offset) for s in ref], scored)
    hyp_speech = iv.intersect([(s.onset, s.offset) for s in hyp], scored)
    fa = iv.total(iv.subtract(hyp_speech, ref_speech))
    ms = iv.total(iv.subtract(ref_speech, hyp_speech))
    return ScoreReport(false_alarm_s=fa, missed_s=ms,
                       scored_speech_s=iv.total(ref_speech),
                       scored_time_s=iv.total(scored), metric="vad",
                       correct_s=iv.total(ref_speech) - ms)


def overlap_matrix(ref: dict[str, np.ndarray], hyp: dict[str, np.ndarray],
                   scored: np.ndarray) -> np.ndarray:
    """Scored co-activity duration of every (reference, hypothesis) speaker pair."""
    ref_s = [iv.intersect(r, scored) for r in ref.values()]
    hyp_s = [iv.intersect(h, scored) for h in hyp.values()]
    M = np.zeros((len(ref_s), len(hyp_s)))
    for i, r in enumerate(ref_s):
        for j, h in enumerate(hyp_s):
            M[i, j] = iv.total(iv.intersect(r, h))
    return M


def optimal_mapping(overlap: np.ndarray) -> dict[int, int]:
    """One-to-one reference -> hypothesis mapping maximising total overlap."""
    if overlap.size == 0:
        return {}
    rows, cols = linear_sum_assignment(overlap, maximize=True)
    return {int(r): int(c) for r, c in zip(rows, cols) if overlap[r, c] > 0}


def der(ref: Sequence[Segment], hyp: Sequence[Segment],
        cfg: ScoreConfig = ScoreConfig()) -> ScoreReport:
    """Diarization error rate under the optimal one-to-one speaker mapping.

    Per elementary piece of the scored timeline with ``R`` active reference
    speakers, ``H`` active hypothesis speakers and ``K`` correctly mapped
    pairs: miss ``max(R - H, 0)``, false alarm ``max(H - R, 0)``, confusion
    ``min(R, H) - K``.
    """
    ref_spk = _by_speaker(ref)
    hyp_spk = _by_speaker(hyp)
    scored = scoring_regions(ref, cfg, _extent(ref, hyp))
    mapping = optimal_mapping(overlap_matrix(ref_spk, hyp_spk, scored))

    ref_list = list(ref_spk.values())
    hyp_list = list(hyp_spk.values())
    pieces = [scored.reshape(-1)]
    pieces += [s.reshape(-1) for s in ref_list + hyp_list]
    edges = np.unique(np.concatenate(pieces)) if pieces else np.zeros(0)
    if edges.size < 2:
        return ScoreReport(metric="der")
    mids = 0.5 * (edges[:-1] + edges[1:])
    width = np.diff(edges) * iv.active_mask(scored, mids)

    ref_act = [iv.active_mask(s, mids) for s in ref_list]
    hyp_act = [iv.active_mask(s, mids) for s in hyp_list]
    n_ref = np.sum(ref_act, axis=0) if ref_act else np.zeros(mids.size)
    n_hyp = np.sum(hyp_act, axis=0) if hyp_act else np.zeros(mids.size)
    n_ok = np.zeros(mids.size)
    for r, h in mapping.items():
        n_ok += ref_act[r] & hyp_act[h]

    missed = float(np.sum(width * np.maximum(n_ref - n_hyp, 0)))
    fa = float(np.sum(width * np.maximum(n_hyp - n_ref, 0)))
    conf = float(np.sum(width * (np.minimum(n_ref, n_hyp) - n_ok)))
    return ScoreReport(false_alarm_s=fa, missed_s=missed, confusion_s=conf,
                       scored_speech_s=float(np.sum(width * n_ref)),
                       scored_time_s=iv.total(scored), metric="der",
                       correct_s=float(np.sum(width * n_ok)))


def format_table(rows: Sequence[tuple[str, ScoreReport]], metric: str = "der") -> str:
    """Fixed-order report: FA, MS, VAD or FA, MS, CONF, DER."""
    if metric == "vad":
        header = f"{'recording':<24}{'FA':>8}{'MS':>8}{'VAD':>8}"
        fmt = lambda r: f"{r.fa:8.2f}{r.ms:8.2f}{r.vad_error:8.2f}"  # noqa: E731
    else:
        header = f"{'recording':<24}{'FA':>8}{'MS':>8}{'CONF':>8}{'DER':>8}"
        fmt = lambda r: f"{r.fa:8.2f}{r.ms:8.2f}{r.conf:8.2f}{r.der:8.2f}"  # noqa: E731
    lines = [header]
    for name, rep in rows:
        lines.append(f"{name:<24}{fmt(rep)}")
    if rows:
        total = rows[0][1]
        for _, rep in rows[1:]:
            total = total + rep
        lines.append(f"{'TOTAL':<24}{fmt(total)}")
    return "\n".join(lines) + "\n"
