"""
Diarization error rate with a forgiveness collar
================================================
"""

from diapipe import PRESETS, Segment, der, vad_error
from diapipe.scoring import format_table, parse_rttm, records_to_segments

ref_text = """\
SPEAKER meeting 1 0.00 5.00 <NA> <NA> alice <NA> <NA>
SPEAKER meeting 1 5.00 5.00 <NA> <NA> bob <NA> <NA>
SPEAKER meeting 1 9.00 3.00 <NA> <NA> carol <NA> <NA>
"""
ref = records_to_segments(parse_rttm(ref_text))["meeting"]

# the system splits bob across two labels and stops a second early
hyp = [Segment(0.0, 5.1, "s1"), Segment(5.1, 8.0, "s2"), Segment(8.0, 11.0, "s3")]

for name, cfg in PRESETS.items():
    print(f"--- {name}: collar {cfg.collar_s}, skip overlap {cfg.skip_overlap}")
    print(format_table([("meeting", der(ref, hyp, cfg))], "der"), end="")
    print(format_table([("meeting", vad_error(ref, hyp, cfg))], "vad"), end="")
