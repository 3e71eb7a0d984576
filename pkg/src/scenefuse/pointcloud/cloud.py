"""Point-cloud container and its file formats.

ASCII: one ``x y z`` line per point (``#`` comments and blank lines are
skipped); clouds with normals are written as ``x y z nx ny nz``.

Binary: ``b"MMPC"``, u32 version (1), u64 point count, then per point three
little-endian f64 coordinates. Clouds with normals append three f64 normal
components and one u8 validity byte to every point record.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..errors import FormatError, UsageError, ValidationError

MAGIC = b"MMPC"
VERSION = 1
_HEADER = struct.Struct("<4sIQ")
_PLAIN = np.dtype([("p", "<f8", (3,))])
_WITH_NORMALS = np.dtype([("p", "<f8", (3,)), ("n", "<f8", (3,)), ("v", "u1")])


@dataclass(frozen=True)
class PointCloud:
    points: np.ndarray
    normals: np.ndarray | None = None
    valid: np.ndarray | None = None

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64).reshape(-1, 3)
        if not np.isfinite(pts).all():
            raise ValidationError("point coordinates must be finite")
        object.__setattr__(self, "points", pts)
        if self.normals is not None:
            normals = np.asarray(self.normals, dtype=np.float64).reshape(-1, 3)
            if normals.shape != pts.shape:
                raise ValidationError(f"normals shape {normals.shape} does not match points {pts.shape}")
            valid = (np.ones(len(pts), dtype=bool) if self.valid is None
                     else np.asarray(self.valid, dtype=bool).reshape(-1))
            if valid.shape != (len(pts),):
                raise ValidationError("validity flags must have one entry per point")
            norms = np.linalg.norm(normals[valid], axis=1)
            if norms.size and np.abs(norms - 1.0).max() > 1e-9:
                raise ValidationError("valid normals must have unit length")
            object.__setattr__(self, "normals", normals)
            object.__setattr__(self, "valid", valid)

    def __len__(self):
        return len(self.points)

    @property
    def has_normals(self) -> bool:
        return self.normals is not None


@dataclass(frozen=True)
class NeighborhoodQuery:
    radius: float = 1.0
    k_max: int = 16

    def __post_init__(self):
        if not self.radius > 0:
            raise ValidationError(f"radius must be positive, got {self.radius}")
        if int(self.k_max) < 1:
            raise ValidationError(f"k_max must be at least 1, got {self.k_max}")


def read_cloud(path) -> PointCloud:
    data = Path(path).read_bytes()
    if data[:4] == MAGIC:
        return decode_binary(data)
    return parse_ascii(data.decode("utf-8"))


def parse_ascii(text: str) -> PointCloud:
    rows = []
    width = None
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            values = [float(tok) for tok in line.split()]
        except ValueError as exc:
            raise ValidationError(f"line {lineno}: {exc}") from None
        if len(values) not in (3, 6) or (width is not None and len(values) != width):
            raise ValidationError(f"line {lineno}: expected 3 or 6 columns, got {len(values)}")
        width = len(values)
        rows.append(values)
    if not rows:
        return PointCloud(np.zeros((0, 3)))
    arr = np.array(rows, dtype=np.float64)
    if width == 3:
        return PointCloud(arr)
    normals = arr[:, 3:]
    return PointCloud(arr[:, :3], normals, np.any(normals != 0.0, axis=1))


def format_ascii(cloud: PointCloud) -> str:
    arr = cloud.points if not cloud.has_normals else np.hstack([cloud.points, cloud.normals])
    return "".join(" ".join(repr(float(v)) for v in row) + "\n" for row in arr)


def decode_binary(data: bytes) -> PointCloud:
    if len(data) < _HEADER.size:
        raise FormatError("truncated header", len(data))
    magic, version, n = _HEADER.unpack_from(data, 0)
    if magic != MAGIC:
        raise FormatError(f"bad magic {magic!r}", 0)
    if version != VERSION:
        raise FormatError(f"unsupported version {version}", 4)
    payload = len(data) - _HEADER.size
    if payload == n * _PLAIN.itemsize:
        rec = np.frombuffer(data, dtype=_PLAIN, count=n, offset=_HEADER.size)
        return PointCloud(rec["p"].copy())
    if payload == n * _WITH_NORMALS.itemsize:
        rec = np.frombuffer(data, dtype=_WITH_NORMALS, count=n, offset=_HEADER.size)
        return PointCloud(rec["p"].copy(), rec["n"].copy(), rec["v"] != 0)
    expected = _HEADER.size + n * _PLAIN.itemsize
    raise FormatError(f"payload of {payload} bytes does not hold {n} points", min(len(data), expected))


def encode_binary(cloud: PointCloud) -> bytes:
    n = len(cloud)
    if cloud.has_normals:
        rec = np.zeros(n, dtype=_WITH_NORMALS)
        rec["n"] = cloud.normals
        rec["v"] = cloud.valid
    else:
        rec = np.zeros(n, dtype=_PLAIN)
    rec["p"] = cloud.points
    return _HEADER.pack(MAGIC, VERSION, n) + rec.tobytes()


def write_cloud(path, cloud: PointCloud, binary: bool | None = None) -> None:
    path = Path(path)
    if binary is None:
        binary = path.suffix.lower() in (".mmpc", ".bin")
    if binary:
        path.write_bytes(encode_binary(cloud))
    else:
        path.write_text(format_ascii(cloud))


def augment(cloud: PointCloud) -> np.ndarray:
    """Stack coordinates and normals into an (N, 6) matrix."""
    if not cloud.has_normals:
        raise UsageError("augment() needs a cloud with estimated normals")
    normals = np.where(cloud.valid[:, None], cloud.normals, 0.0)
    return np.hstack([cloud.points, normals])
