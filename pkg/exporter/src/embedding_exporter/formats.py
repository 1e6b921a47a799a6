"""Writers for the analysis toolkit's file formats.

Implemented against the published format contract (not by importing the
toolkit), so the exporter stays decoupled from the consumer:

* HYPE: magic ``HYPE``, u32 version=1, u32 rows, u32 cols, float32 LE
  row-major payload.
* HTOK: magic ``HTOK``, u32 version=1, u32 count, u32 LE ids.
* frequency TSV ``id<TAB>count``; vocabulary TSV ``id<TAB>string`` with
  backslash escapes for tab/newline/carriage-return/backslash; prompt
  ranges ``start end`` (half-open) per line.

All writes are atomic: temp file in the target directory, then rename.
"""

from __future__ import annotations

import os
import struct
import tempfile
from pathlib import Path

import numpy as np

FORMAT_VERSION = 1


def _atomic_write(path: Path, payload: bytes):
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_hype(path, matrix: np.ndarray):
    matrix = np.asarray(matrix, dtype=np.float32)
    if matrix.ndim != 2:
        raise ValueError("embedding matrix must be 2-d")
    header = b"HYPE" + struct.pack("<III", FORMAT_VERSION, *matrix.shape)
    _atomic_write(path, header + matrix.astype("<f4").tobytes(order="C"))


def write_htok(path, ids):
    ids = np.asarray(ids)
    if ids.ndim != 1 or ids.size == 0:
        raise ValueError("token stream must be a nonempty 1-d array")
    header = b"HTOK" + struct.pack("<II", FORMAT_VERSION, ids.size)
    _atomic_write(path, header + ids.astype("<u4").tobytes())


def write_freq_tsv(path, counts: dict[int, int]):
    body = "".join(f"{tok}\t{counts[tok]}\n" for tok in sorted(counts))
    _atomic_write(path, body.encode("utf-8"))


_ESCAPES = {"\\": "\\\\", "\t": "\\t", "\n": "\\n", "\r": "\\r"}


def _escape(token: str) -> str:
    for raw, esc in _ESCAPES.items():
        token = token.replace(raw, esc)
    return token


def write_vocab_tsv(path, vocab: dict[int, str]):
    body = "".join(f"{tok}\t{_escape(vocab[tok])}\n" for tok in sorted(vocab))
    _atomic_write(path, body.encode("utf-8"))


def write_prompt_ranges(path, ranges: list[tuple[int, int]]):
    body = "".join(f"{start} {end}\n" for start, end in ranges)
    _atomic_write(path, body.encode("utf-8"))
