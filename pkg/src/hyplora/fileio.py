"""Binary and delimited file formats shared across the toolkit.

Binary layouts (all little-endian):

* ``HYPE`` embeddings: magic, u32 version, u32 rows, u32 cols, then
  rows*cols float32 row-major.
* ``HTOK`` token stream: magic, u32 version, u32 count, then count u32 ids.
* ``HLRA`` adapter checkpoint: magic, u32 version, u32 d, u32 k, u32 r,
  u32 variant (0 rotation / 1 boost), f64 K, f64 norm scale, then A and
  B as float64 row-major.
* ``HFRZ`` frozen-weights blob: magic, u32 version, u32 entry count,
  then per entry u32 name length, utf-8 name, u32 ndim, u32 dims,
  float64 payload.

Text formats: frequency TSV ``id<TAB>count``; vocabulary TSV
``id<TAB>string`` with backslash escapes for tab/newline/backslash;
prompt ranges ``start end`` (half-open) per line; edge lists ``u v``
per line, 0-based.
"""

from __future__ import annotations

import struct

import numpy as np

from .adapter import AdapterParams
from .errors import FormatError, ValidationError
from .graphs import Graph
from .lorentz import BOOST, ROTATION, CurvedSpace

FORMAT_VERSION = 1
_VARIANT_CODE = {ROTATION: 0, BOOST: 1}
_CODE_VARIANT = {v: k for k, v in _VARIANT_CODE.items()}


def _read_exact(fh, n: int, what: str) -> bytes:
    blob = fh.read(n)
    if len(blob) != n:
        raise FormatError(f"truncated file while reading {what}", field=what)
    return blob


def _check_magic(fh, expected: bytes):
    magic = _read_exact(fh, 4, "magic")
    if magic != expected:
        raise FormatError(
            f"bad magic {magic!r}; expected {expected!r}", field="magic"
        )


def _check_version(fh):
    (version,) = struct.unpack("<I", _read_exact(fh, 4, "version"))
    if version != FORMAT_VERSION:
        raise FormatError(f"unsupported format version {version}", field="version")
    return version


# -- HYPE ----------------------------------------------------------------

def write_hype(path, matrix: np.ndarray):
    matrix = np.asarray(matrix, dtype=np.float32)
    if matrix.ndim != 2:
        raise ValidationError("embedding matrix must be 2-d")
    with open(path, "wb") as fh:
        fh.write(b"HYPE")
        fh.write(struct.pack("<III", FORMAT_VERSION, matrix.shape[0], matrix.shape[1]))
        fh.write(matrix.astype("<f4").tobytes(order="C"))


def read_hype(path) -> np.ndarray:
    with open(path, "rb") as fh:
        _check_magic(fh, b"HYPE")
        _check_version(fh)
        rows, cols = struct.unpack("<II", _read_exact(fh, 8, "rows/cols"))
        if rows == 0 or cols == 0:
            raise FormatError(f"degenerate shape {rows}x{cols}", field="rows/cols")
        payload = _read_exact(fh, rows * cols * 4, "payload")
        extra = fh.read(1)
    if extra:
        raise FormatError("trailing bytes after payload", field="payload")
    return np.frombuffer(payload, dtype="<f4").reshape(rows, cols).astype(np.float64)


# -- HTOK ----------------------------------------------------------------

def write_htok(path, ids: np.ndarray):
    ids = np.asarray(ids)
    if ids.ndim != 1 or ids.size == 0:
        raise ValidationError("token stream must be a nonempty 1-d array")
    if ids.min() < 0:
        raise ValidationError("token ids must be nonnegative")
    with open(path, "wb") as fh:
        fh.write(b"HTOK")
        fh.write(struct.pack("<II", FORMAT_VERSION, ids.size))
        fh.write(ids.astype("<u4").tobytes())


def read_htok(path) -> np.ndarray:
    with open(path, "rb") as fh:
        _check_magic(fh, b"HTOK")
        _check_version(fh)
        (count,) = struct.unpack("<I", _read_exact(fh, 4, "count"))
        if count == 0:
            raise FormatError("empty token stream", field="count")
        payload = _read_exact(fh, count * 4, "payload")
        extra = fh.read(1)
    if extra:
        raise FormatError("trailing bytes after payload", field="payload")
    return np.frombuffer(payload, dtype="<u4").astype(np.int64)


# -- HLRA adapter checkpoint ----------------------------------------------

def save_adapter(path, p: AdapterParams):
    with open(path, "wb") as fh:
        fh.write(b"HLRA")
        fh.write(struct.pack(
            "<IIIII", FORMAT_VERSION, p.d, p.k, p.rank, _VARIANT_CODE[p.variant]
        ))
        fh.write(struct.pack("<dd", p.space.K, p.norm_scale))
        fh.write(p.A.astype("<f8").tobytes(order="C"))
        fh.write(p.B.astype("<f8").tobytes(order="C"))


def load_adapter(path, W: np.ndarray) -> AdapterParams:
    """Read adapter factors and attach them to the caller-held frozen W."""
    W = np.asarray(W, dtype=float)
    with open(path, "rb") as fh:
        _check_magic(fh, b"HLRA")
        _check_version(fh)
        d, k, r, vcode = struct.unpack("<IIII", _read_exact(fh, 16, "d/k/r/variant"))
        if vcode not in _CODE_VARIANT:
            raise FormatError(f"unknown variant code {vcode}", field="variant")
        variant = _CODE_VARIANT[vcode]
        K, scale = struct.unpack("<dd", _read_exact(fh, 16, "K/norm_scale"))
        a_cols = k if variant == ROTATION else k + 1
        b_cols = r if variant == ROTATION else r + 1
        a_blob = _read_exact(fh, r * a_cols * 8, "A payload")
        b_blob = _read_exact(fh, d * b_cols * 8, "B payload")
        extra = fh.read(1)
    if extra:
        raise FormatError("trailing bytes after payload", field="payload")
    if W.shape != (d, k):
        raise FormatError(
            f"checkpoint is for W of shape {(d, k)}, got {W.shape}", field="d/k"
        )
    return AdapterParams(
        W=W,
        A=np.frombuffer(a_blob, dtype="<f8").reshape(r, a_cols).copy(),
        B=np.frombuffer(b_blob, dtype="<f8").reshape(d, b_cols).copy(),
        rank=r,
        space=CurvedSpace(K, k),
        norm_scale=scale,
        variant=variant,
    )


# -- HFRZ frozen weights ---------------------------------------------------

def save_frozen(path, arrays: dict[str, np.ndarray]):
    with open(path, "wb") as fh:
        fh.write(b"HFRZ")
        fh.write(struct.pack("<II", FORMAT_VERSION, len(arrays)))
        for name in sorted(arrays):
            arr = np.asarray(arrays[name], dtype=np.float64)
            blob = name.encode("utf-8")
            fh.write(struct.pack("<I", len(blob)))
            fh.write(blob)
            fh.write(struct.pack("<I", arr.ndim))
            fh.write(struct.pack(f"<{arr.ndim}I", *arr.shape))
            fh.write(arr.astype("<f8").tobytes(order="C"))


def load_frozen(path) -> dict[str, np.ndarray]:
    out: dict[str, np.ndarray] = {}
    with open(path, "rb") as fh:
        _check_magic(fh, b"HFRZ")
        _check_version(fh)
        (count,) = struct.unpack("<I", _read_exact(fh, 4, "count"))
        for _ in range(count):
            (name_len,) = struct.unpack("<I", _read_exact(fh, 4, "name length"))
            name = _read_exact(fh, name_len, "name").decode("utf-8")
            (ndim,) = struct.unpack("<I", _read_exact(fh, 4, "ndim"))
            shape = struct.unpack(f"<{ndim}I", _read_exact(fh, 4 * ndim, "dims"))
            size = int(np.prod(shape)) if ndim else 1
            blob = _read_exact(fh, size * 8, f"payload of {name}")
            out[name] = np.frombuffer(blob, dtype="<f8").reshape(shape).copy()
        extra = fh.read(1)
    if extra:
        raise FormatError("trailing bytes after payload", field="payload")
    return out


# -- delimited text formats -----------------------------------------------

def write_freq_tsv(path, counts: dict[int, int]):
    with open(path, "w", encoding="utf-8") as fh:
        for tok in sorted(counts):
            fh.write(f"{tok}\t{counts[tok]}\n")


def read_freq_tsv(path) -> dict[int, int]:
    counts: dict[int, int] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise FormatError(f"line {lineno}: expected id<TAB>count", field="line")
            try:
                tok, cnt = int(parts[0]), int(parts[1])
            except ValueError as exc:
                raise FormatError(f"line {lineno}: non-integer field", field="line") from exc
            if cnt < 1:
                raise FormatError(f"line {lineno}: count must be >= 1", field="count")
            counts[tok] = cnt
    if not counts:
        raise FormatError("frequency file holds no entries", field="line")
    return counts


_ESCAPES = {"\\": "\\\\", "\t": "\\t", "\n": "\\n", "\r": "\\r"}


def _escape(token: str) -> str:
    for raw, esc in _ESCAPES.items():
        token = token.replace(raw, esc)
    return token


def _unescape(token: str) -> str:
    out: list[str] = []
    i = 0
    while i < len(token):
        ch = token[i]
        if ch == "\\" and i + 1 < len(token):
            nxt = token[i + 1]
            mapped = {"\\": "\\", "t": "\t", "n": "\n", "r": "\r"}.get(nxt)
            if mapped is not None:
                out.append(mapped)
                i += 2
                continue
        out.append(ch)
        i += 1
    return "".join(out)


def write_vocab_tsv(path, vocab: dict[int, str]):
    with open(path, "w", encoding="utf-8") as fh:
        for tok in sorted(vocab):
            fh.write(f"{tok}\t{_escape(vocab[tok])}\n")


def read_vocab_tsv(path) -> dict[int, str]:
    vocab: dict[int, str] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise FormatError(f"line {lineno}: expected id<TAB>string", field="line")
            try:
                vocab[int(parts[0])] = _unescape(parts[1])
            except ValueError as exc:
                raise FormatError(f"line {lineno}: non-integer id", field="line") from exc
    if not vocab:
        raise FormatError("vocabulary file holds no entries", field="line")
    return vocab


def write_prompt_ranges(path, ranges: list[tuple[int, int]]):
    with open(path, "w", encoding="utf-8") as fh:
        for start, end in ranges:
            fh.write(f"{start} {end}\n")


def read_prompt_ranges(path) -> list[tuple[int, int]]:
    ranges: list[tuple[int, int]] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 2:
                raise FormatError(f"line {lineno}: expected 'start end'", field="line")
            try:
                start, end = int(parts[0]), int(parts[1])
            except ValueError as exc:
                raise FormatError(f"line {lineno}: non-integer bound", field="line") from exc
            if start < 0 or end <= start:
                raise FormatError(f"line {lineno}: need 0 <= start < end", field="line")
            ranges.append((start, end))
    if not ranges:
        raise FormatError("prompt-range file holds no entries", field="line")
    return ranges


def write_edge_list(path, g: Graph):
    with open(path, "w", encoding="utf-8") as fh:
        for u, v in g.edges():
            fh.write(f"{u} {v}\n")


def read_edge_list(path) -> Graph:
    edges: list[tuple[int, int]] = []
    max_node = -1
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 2:
                raise FormatError(f"line {lineno}: expected 'u v'", field="line")
            try:
                u, v = int(parts[0]), int(parts[1])
            except ValueError as exc:
                raise FormatError(f"line {lineno}: non-integer vertex", field="line") from exc
            if u < 0 or v < 0:
                raise FormatError(f"line {lineno}: vertices must be >= 0", field="line")
            edges.append((u, v))
            max_node = max(max_node, u, v)
    if max_node < 0:
        raise FormatError("edge list holds no edges", field="line")
    g = Graph(max_node + 1)
    for u, v in edges:
        g.add_edge(u, v)
    return g


def write_distance_matrix_tsv(path, d: np.ndarray):
    d = np.asarray(d, dtype=float)
    with open(path, "w", encoding="utf-8") as fh:
        for row in d:
            fh.write("\t".join(repr(float(x)) for x in row))
            fh.write("\n")
