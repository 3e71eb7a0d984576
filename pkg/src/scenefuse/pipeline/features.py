"""Binary feature files.

Layout: ``b"MMDF"``, u32 version (1), u32 header length, UTF-8 JSON header
``{"dtype": "f64", "shape": [S, D], "modality": ..., "sample_id": ...}``,
then S*D little-endian f64 values in row-major order.
"""
from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..errors import FormatError, ValidationError

MAGIC = b"MMDF"
VERSION = 1
INPUT_MODALITIES = ("image", "lidar", "occ", "desc", "question")
OUTPUT_KINDS = ("fused", "abstract")
_PREFIX = struct.Struct("<4sII")


@dataclass(frozen=True)
class FeatureFile:
    matrix: np.ndarray
    modality: str
    sample_id: str = ""

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=np.float64)
        if m.ndim != 2:
            raise ValidationError(f"feature matrix must be 2-D, got shape {m.shape}")
        if self.modality not in INPUT_MODALITIES + OUTPUT_KINDS:
            raise ValidationError(f"unknown modality {self.modality!r}")
        object.__setattr__(self, "matrix", m)


def encode_feature(ff: FeatureFile) -> bytes:
    header = json.dumps({
        "dtype": "f64",
        "shape": list(ff.matrix.shape),
        "modality": ff.modality,
        "sample_id": ff.sample_id,
    }, sort_keys=True).encode("utf-8")
    payload = np.ascontiguousarray(ff.matrix, dtype="<f8").tobytes()
    return _PREFIX.pack(MAGIC, VERSION, len(header)) + header + payload


def decode_feature(data: bytes) -> FeatureFile:
    if len(data) < _PREFIX.size:
        raise FormatError("truncated prefix", len(data))
    magic, version, hlen = _PREFIX.unpack_from(data)
    if magic != MAGIC:
        raise FormatError(f"bad magic {magic!r}", 0)
    if version != VERSION:
        raise FormatError(f"unsupported version {version}", 4)
    start = _PREFIX.size
    if len(data) < start + hlen:
        raise FormatError(f"header needs {hlen} bytes, file has {len(data) - start}", len(data))
    try:
        header = json.loads(data[start:start + hlen].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise FormatError(f"unreadable header: {exc}", start) from None
    if not isinstance(header, dict) or header.get("dtype") != "f64":
        raise FormatError("header dtype must be 'f64'", start)
    shape = header.get("shape")
    if (not isinstance(shape, list) or len(shape) != 2
            or not all(isinstance(s, int) and not isinstance(s, bool) and s >= 0 for s in shape)):
        raise FormatError(f"bad shape {shape!r}", start)
    modality = header.get("modality")
    if modality not in INPUT_MODALITIES + OUTPUT_KINDS:
        raise FormatError(f"unknown modality {modality!r}", start)
    offset = start + hlen
    expected = 8 * shape[0] * shape[1]
    actual = len(data) - offset
    if actual < expected:
        raise FormatError(f"payload truncated: expected {expected} bytes, found {actual}", len(data))
    if actual > expected:
        raise FormatError(f"payload has {actual - expected} trailing bytes", offset + expected)
    matrix = np.frombuffer(data, dtype="<f8", count=shape[0] * shape[1], offset=offset)
    return FeatureFile(matrix.reshape(shape).astype(np.float64), modality, str(header.get("sample_id", "")))


def write_feature(path, matrix, modality: str, sample_id: str = "") -> None:
    Path(path).write_bytes(encode_feature(FeatureFile(matrix, modality, sample_id)))


def read_feature(path) -> FeatureFile:
    return decode_feature(Path(path).read_bytes())


def read_sample_dir(path) -> dict[str, FeatureFile]:
    """Load every ``*.mmdf`` in a directory, keyed by modality."""
    out = {}
    for f in sorted(Path(path).glob("*.mmdf")):
        ff = read_feature(f)
        if ff.modality in out:
            raise ValidationError(f"{path}: more than one {ff.modality!r} feature file")
        out[ff.modality] = ff
    missing = [m for m in INPUT_MODALITIES if m not in out]
    if missing:
        raise ValidationError(f"{path}: missing feature files for {', '.join(missing)}")
    return out
