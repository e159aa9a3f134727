"""RSEB embedding file format, plus the JSONL row-ids sidecar.

RSEB layout (little-endian):

    magic   4 bytes  b"RSEB"
    version u32      1
    rows    u64
    dim     u64
    flags   u32      bit 0 = rows are L2-normalized
    data    rows*dim IEEE-754 binary32, row-major

Round-trips are bit-exact.  The sidecar is UTF-8 JSONL, one object per row:
{"row": <int>, "id": "<string>", "label": <int or null>}.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .errors import BadMagicError, TruncatedFileError, VersionUnsupportedError
from .matrix import EmbeddingMatrix

MAGIC = b"RSEB"
VERSION = 1
_HEADER = struct.Struct("<4sIQQI")
FLAG_NORMALIZED = 0x1


def write_embeddings(m: EmbeddingMatrix, path: str | Path) -> None:
    """Write a matrix to an RSEB file."""
    flags = FLAG_NORMALIZED if m.normalized else 0
    header = _HEADER.pack(MAGIC, VERSION, m.rows, m.dim, flags)
    data = np.ascontiguousarray(m.data, dtype="<f4")
    with open(path, "wb") as f:
        f.write(header)
        f.write(data.tobytes())


def read_embeddings(path: str | Path) -> EmbeddingMatrix:
    """Read an RSEB file back into a matrix.

    Raises BadMagicError / VersionUnsupportedError / TruncatedFileError when
    the file does not conform.
    """
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise TruncatedFileError(f"{path}: {len(raw)} bytes is shorter than the {_HEADER.size}-byte header")
    magic, version, rows, dim, flags = _HEADER.unpack_from(raw, 0)
    if magic != MAGIC:
        raise BadMagicError(f"{path}: magic {magic!r}, expected {MAGIC!r}")
    if version != VERSION:
        raise VersionUnsupportedError(f"{path}: version {version}, reader understands {VERSION}")
    expected = _HEADER.size + rows * dim * 4
    if len(raw) != expected:
        raise TruncatedFileError(f"{path}: {len(raw)} bytes, header promises {expected}")
    data = np.frombuffer(raw, dtype="<f4", count=rows * dim, offset=_HEADER.size)
    data = data.reshape(rows, dim).copy()
    return EmbeddingMatrix(data, normalized=bool(flags & FLAG_NORMALIZED))


def write_ids(path: str | Path, ids: list[str], labels: list[int | None] | None = None) -> None:
    """Write the row-ids sidecar; labels default to null."""
    if labels is None:
        labels = [None] * len(ids)
    if len(labels) != len(ids):
        raise ValueError(f"{len(ids)} ids but {len(labels)} labels")
    with open(path, "w", encoding="utf-8") as f:
        for row, (id_, label) in enumerate(zip(ids, labels)):
            f.write(json.dumps({"row": row, "id": id_, "label": label}) + "\n")


def read_ids(path: str | Path) -> tuple[list[str], list[int | None]]:
    """Read a sidecar file; rows must be 0..N-1 in order."""
    ids: list[str] = []
    labels: list[int | None] = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f):
            line = line.strip()
            if not line:
                continue
            obj = json.loads(line)
            if obj.get("row") != len(ids):
                raise ValueError(f"{path}:{lineno + 1}: row {obj.get('row')}, expected {len(ids)}")
            ids.append(str(obj["id"]))
            label = obj.get("label")
            labels.append(None if label is None else int(label))
    return ids, labels
