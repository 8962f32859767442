"""Command-line entry point: ``diapipe {vad,diarize,score,analyze}``."""

from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import analysis, fileio, scoring
from .attention_pool import VadTrack
from .config import RunConfig, parse_config_text
from .pipeline import detect_speech, diarize, extract_windows
from .scoring import PRESETS
from .vad_segmenter import format_segments, parse_segments


class CliError(Exception):
    pass


def _read_text(path) -> str:
    try:
        return Path(path).read_text()
    except OSError as err:
        raise CliError(f"cannot read {path}: {err.strerror}") from None


def _emit(text: str, out) -> None:
    if out:
        fileio.write_text(out, text)
    else:
        sys.stdout.write(text)


def _run_config(args) -> RunConfig:
    file_values = parse_config_text(_read_text(args.config), args.config) if args.config else {}
    overrides = {}
    for item in args.set or []:
        if "=" not in item:
            raise CliError(f"--set expects KEY=VALUE, got {item!r}")
        key, value = item.split("=", 1)
        overrides[key.strip()] = value.strip()
    if args.seed is not None:
        overrides["seed"] = str(args.seed)
    if getattr(args, "oracle_n", None) is not None:
        overrides["pipeline.oracle_n"] = str(args.oracle_n)
    if getattr(args, "oracle_vad", None) is not None:
        overrides["pipeline.oracle_vad"] = args.oracle_vad
    return RunConfig.resolve(args.preset, file_values, overrides)


def _load_inputs(features, params):
    try:
        h = fileio.read_features(features)
    except OSError as err:
        raise CliError(f"cannot read {features}: {err.strerror}") from None
    try:
        p = fileio.read_params(params)
    except OSError as err:
        raise CliError(f"cannot read {params}: {err.strerror}") from None
    return h, p


def cmd_vad(args) -> int:
    cfg = _run_config(args)
    features = args.features or cfg["input.features"]
    params = args.params or cfg["input.params"]
    if not features or not params:
        raise CliError("vad needs a feature file and a parameter file")
    h, p = _load_inputs(features, params)
    _, tracks = extract_windows(h, p, cfg.window_config())
    track, segs = detect_speech(tracks, cfg.hysteresis_config())
    if args.track_out:
        fileio.write_track(args.track_out, track)
    _emit(format_segments(segs), args.out or cfg["output.path"])
    return 0


def _diarize_one(recording_id, features, params, cfg: RunConfig) -> str:
    h, p = _load_inputs(features, params)
    oracle = None
    if cfg["pipeline.oracle_vad"]:
        oracle = parse_segments(_read_text(cfg["pipeline.oracle_vad"]))
    hyp = diarize(h, p, cfg.pipeline_config(oracle_vad=oracle), recording_id=recording_id)
    return scoring.write_rttm(scoring.segments_to_records(recording_id, hyp.segments))


def _read_manifest(path) -> list[tuple[str, str, str]]:
    rows = []
    base = Path(path).parent
    for lineno, line in enumerate(_read_text(path).splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        fields = line.split()
        if len(fields) != 3:
            raise CliError(f"{path}:{lineno}: expected 'recording_id features ref_rttm'")
        rec, feat, ref = fields
        rows.append((rec, str(base / feat), str(base / ref)))
    return rows


def _workers() -> int:
    value = os.environ.get("DIAPIPE_THREADS")
    if value:
        try:
            return max(1, int(value))
        except ValueError:
            raise CliError(f"DIAPIPE_THREADS must be an integer, got {value!r}") from None
    return min(8, os.cpu_count() or 1)


def cmd_diarize(args) -> int:
    cfg = _run_config(args)
    if args.manifest:
        params = args.inputs[0] if args.inputs else cfg["input.params"]
        if not params or len(args.inputs) > 1:
            raise CliError("with --manifest, give exactly one parameter file")
        out_dir = Path(args.out or cfg["output.path"] or ".")
        out_dir.mkdir(parents=True, exist_ok=True)
        rows = _read_manifest(args.manifest)

        def run(row):
            rec, feat, ref = row
            rttm = _diarize_one(rec, feat, params, cfg)
            fileio.write_text(out_dir / f"{rec}.rttm", rttm)
            ref_segs = scoring.records_to_segments(scoring.parse_rttm(_read_text(ref))).get(rec, [])
            hyp_segs = scoring.records_to_segments(scoring.parse_rttm(rttm)).get(rec, [])
            return rec, scoring.der(ref_segs, hyp_segs, cfg.score_config())

        with ThreadPoolExecutor(max_workers=_workers()) as pool:
            results = list(pool.map(run, rows))
        sys.stdout.write(scoring.format_table(sorted(results, key=lambda r: r[0]), "der"))
        return 0

    if len(args.inputs) == 2:
        features, params = args.inputs
    elif not args.inputs:
        features, params = cfg["input.features"], cfg["input.params"]
    else:
        raise CliError("diarize needs FEATURES PARAMS")
    if not features or not params:
        raise CliError("diarize needs a feature file and a parameter file")
    rec = args.recording_id or Path(features).stem
    _emit(_diarize_one(rec, features, params, cfg), args.out or cfg["output.path"])
    return 0


def cmd_score(args) -> int:
    cfg = _run_config(args)
    score_cfg = cfg.score_config()
    ref = scoring.records_to_segments(scoring.parse_rttm(_read_text(args.ref)))
    hyp = scoring.records_to_segments(scoring.parse_rttm(_read_text(args.hyp)))
    metric = "vad" if args.vad else "der"
    rows = []
    for rec in sorted(set(ref) | set(hyp)):
        r, h = ref.get(rec, []), hyp.get(rec, [])
        report = scoring.vad_error(r, h, score_cfg) if args.vad else scoring.der(r, h, score_cfg)
        rows.append((rec, report))
    _emit(scoring.format_table(rows, metric), args.out or cfg["output.path"])
    return 0


def cmd_analyze(args) -> int:
    if len(args.track) != len(args.labels):
        raise CliError("give one --labels file per --track file")
    tracks, labels = [], []
    for tpath, lpath in zip(args.track, args.labels):
        try:
            tr = fileio.read_track(tpath)
        except OSError as err:
            raise CliError(f"cannot read {tpath}: {err.strerror}") from None
        lab = analysis.read_label_track(_read_text(lpath), tr.frame_hop_s)
        if len(lab) != len(tr):
            raise CliError(f"{lpath}: {len(lab)} labels for {len(tr)} frames in {tpath}")
        tracks.append(tr)
        labels.append(lab)

    if args.mode == "group":
        merged = VadTrack(np.concatenate([t.v for t in tracks]), tracks[0].frame_hop_s)
        merged_labels = analysis.FrameLabelTrack(
            tuple(x for lab in labels for x in lab.labels), tracks[0].frame_hop_s)
        text = analysis.group_table_csv(analysis.group_mean_response(merged, merged_labels))
    else:
        aligned, bounds = [], []
        for tr, lab in zip(tracks, labels):
            for b in analysis.label_transitions(lab, args.before, args.after):
                aligned.append(tr)
                bounds.append(b)
        profile = analysis.transition_profile(aligned, bounds, args.half_width)
        if profile.n_skipped:
            print(f"diapipe: skipped {profile.n_skipped} boundary(ies) without enough context",
                  file=sys.stderr)
        text = analysis.profile_csv(profile)
    _emit(text, args.out)
    return 0


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="flat 'key = value' config file")
    p.add_argument("--preset", choices=sorted(PRESETS), help="scoring protocol preset")
    p.add_argument("--seed", type=int, help="random seed (default 0)")
    p.add_argument("--set", action="append", metavar="KEY=VALUE",
                   help="override a config key (repeatable)")
    p.add_argument("--out", help="output path (default: stdout)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="diapipe", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("vad", help="speech segments from attention logits")
    p.add_argument("features", nargs="?")
    p.add_argument("params", nargs="?")
    p.add_argument("--track-out", help="write the aggregated VAD track (FMV1)")
    _add_common(p)
    p.set_defaults(func=cmd_vad)

    p = sub.add_parser("diarize", help="single-step diarization to RTTM")
    p.add_argument("inputs", nargs="*", metavar="FILE",
                   help="FEATURES PARAMS, or PARAMS only with --manifest")
    p.add_argument("--oracle-vad", help="reference speech segments ('onset offset' lines)")
    p.add_argument("--oracle-n", type=int, help="known number of speakers")
    p.add_argument("--recording-id", help="RTTM recording id (default: feature file stem)")
    p.add_argument("--manifest", help="batch file of 'recording_id features ref_rttm' lines")
    _add_common(p)
    p.set_defaults(func=cmd_diarize)

    p = sub.add_parser("score", help="DER or VAD error of a hypothesis RTTM")
    p.add_argument("ref")
    p.add_argument("hyp")
    p.add_argument("--vad", action="store_true", help="report FA, MS, VAD instead of DER")
    _add_common(p)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("analyze", help="per-label or boundary-aligned logit statistics")
    p.add_argument("mode", choices=["group", "transition"])
    p.add_argument("--track", action="append", required=True, help="VAD track file")
    p.add_argument("--labels", action="append", required=True, help="frame label file")
    p.add_argument("--half-width", type=int, default=40)
    p.add_argument("--before", default="nonspeech")
    p.add_argument("--after", default="speech")
    p.add_argument("--out")
    p.set_defaults(func=cmd_analyze)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (CliError, ValueError) as err:
        print(f"diapipe: error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
