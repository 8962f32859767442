"""Binary and text containers for features, parameters and VAD tracks.

FMV1 block layout (little endian)::

    b"FMV1"  u32 T  u32 C  f64 frame_hop_s  f64 start_s  f32[T*C] (row major)

A parameter file is a sequence of named FMV1 blocks, each preceded by
``u32 name_length`` and the UTF-8 name. Vectors are stored as T x 1 blocks.
"""

from __future__ import annotations

import io
import os
import struct
import tempfile
from pathlib import Path

import numpy as np

from .attention_pool import DEFAULT_FRAME_HOP_S, AttentionParams, FrameFeatureMatrix, VadTrack

MAGIC = b"FMV1"
_HEADER = struct.Struct("<4sIIdd")
_NAME_LEN = struct.Struct("<I")
PARAM_NAMES = ("W", "b", "p", "k", "proj_weight", "proj_bias")
_VECTORS = {"b", "k", "proj_bias"}


class FormatError(ValueError):
    """Raised for malformed container files."""


def encode_block(data: np.ndarray, frame_hop_s: float = DEFAULT_FRAME_HOP_S,
                 start_s: float = 0.0) -> bytes:
    arr = np.asarray(data, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[:, None]
    T, C = arr.shape
    return (_HEADER.pack(MAGIC, T, C, float(frame_hop_s), float(start_s))
            + arr.astype("<f4").tobytes(order="C"))


def decode_block(buf: bytes, offset: int = 0, source: str = "<bytes>"):
    """Decode one block at ``offset``; returns ``(matrix, hop, start, next_offset)``."""
    if len(buf) - offset < _HEADER.size:
        raise FormatError(f"{source}: truncated FMV1 header")
    magic, T, C, hop, start = _HEADER.unpack_from(buf, offset)
    if magic != MAGIC:
        raise FormatError(f"{source}: bad magic {magic!r}, expected {MAGIC!r}")
    offset += _HEADER.size
    nbytes = 4 * T * C
    if len(buf) - offset < nbytes:
        raise FormatError(f"{source}: truncated FMV1 payload ({T}x{C} expected)")
    data = np.frombuffer(buf, dtype="<f4", count=T * C, offset=offset)
    return data.reshape(T, C).astype(np.float64), hop, start, offset + nbytes


def _read_csv_matrix(path: Path) -> np.ndarray:
    rows = []
    for lineno, line in enumerate(path.read_text().splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        try:
            rows.append([float(x) for x in line.split(",")])
        except ValueError:
            raise FormatError(f"{path}: line {lineno}: non-numeric value") from None
    if not rows or len({len(r) for r in rows}) != 1:
        raise FormatError(f"{path}: expected a non-empty rectangular CSV matrix")
    return np.array(rows, dtype=np.float64)


def read_features(path, frame_hop_s: float | None = None) -> FrameFeatureMatrix:
    """Load an FMV1 file, or a CSV matrix when the name ends in ``.csv``."""
    path = Path(path)
    if path.suffix.lower() == ".csv":
        data = _read_csv_matrix(path)
        return FrameFeatureMatrix(data, frame_hop_s or DEFAULT_FRAME_HOP_S, 0.0)
    data, hop, start, end = decode_block(path.read_bytes(), 0, str(path))
    return FrameFeatureMatrix(data, frame_hop_s or hop, start)


def write_features(path, h: FrameFeatureMatrix) -> None:
    _atomic_write(path, encode_block(h.data, h.frame_hop_s, h.start_s))


def read_track(path) -> VadTrack:
    """Load a VAD track stored as a T x 1 FMV1 block (or one-column CSV)."""
    h = read_features(path)
    if h.n_channels != 1:
        raise FormatError(f"{path}: VAD track must have one column, got {h.n_channels}")
    return VadTrack(h.data[:, 0], h.frame_hop_s, h.start_s)


def write_track(path, track: VadTrack) -> None:
    _atomic_write(path, encode_block(track.v, track.frame_hop_s, track.start_s))


def encode_params(params: AttentionParams) -> bytes:
    out = io.BytesIO()
    for name in PARAM_NAMES:
        raw = name.encode("utf-8")
        out.write(_NAME_LEN.pack(len(raw)))
        out.write(raw)
        out.write(encode_block(getattr(params, name), 1.0, 0.0))
    return out.getvalue()


def decode_params(buf: bytes, source: str = "<bytes>") -> AttentionParams:
    blocks = {}
    offset = 0
    while offset < len(buf):
        if len(buf) - offset < _NAME_LEN.size:
            raise FormatError(f"{source}: truncated block name length")
        (n,) = _NAME_LEN.unpack_from(buf, offset)
        offset += _NAME_LEN.size
        name = buf[offset:offset + n].decode("utf-8", errors="replace")
        offset += n
        data, _, _, offset = decode_block(buf, offset, f"{source}[{name}]")
        blocks[name] = data
    missing = [n for n in PARAM_NAMES if n not in blocks]
    if missing:
        raise FormatError(f"{source}: missing parameter blocks {missing}")
    unknown = sorted(set(blocks) - set(PARAM_NAMES))
    if unknown:
        raise FormatError(f"{source}: unknown parameter blocks {unknown}")
    kwargs = {n: (blocks[n].reshape(-1) if n in _VECTORS else blocks[n]) for n in PARAM_NAMES}
    try:
        return AttentionParams(**kwargs)
    except ValueError as err:
        raise FormatError(f"{source}: {err}") from None


def read_params(path) -> AttentionParams:
    path = Path(path)
    return decode_params(path.read_bytes(), str(path))


def write_params(path, params: AttentionParams) -> None:
    _atomic_write(path, encode_params(params))


def _atomic_write(path, payload: bytes | str) -> None:
    """Write via a temporary file in the target directory, then rename."""
    path = Path(path)
    data = payload.encode("utf-8") if isinstance(payload, str) else payload
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_text(path, text: str) -> None:
    _atomic_write(path, text)
