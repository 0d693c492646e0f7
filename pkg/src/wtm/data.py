"""Binary datasets, their on-disk formats and the input encoders.

WTMD layout (all integers little-endian)::

    b"WTMD"  u8 version  u32 o  u32 n_classes  u64 rows
    rows x ( u32 label  ceil(o/8) bytes of features, bit k of byte k//8
             holds feature k, least significant bit first )

The text format is one row per line, ``<label> <o characters of 0/1>``.
Blank lines and lines starting with ``#`` are skipped; a ``# classes=K``
line fixes the class count, otherwise it is ``max(label) + 1``.

Connect-4 labels are ``win=0, loss=1, draw=2`` (outcome for the first
player).
"""
from __future__ import annotations

import gzip
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .sampling import Rng

MAGIC = b"WTMD"
VERSION = 1
_HEADER = struct.Struct("<4sBIIQ")

MNIST_THRESHOLD = 77
CONNECT4_ROWS, CONNECT4_COLS = 6, 7
CONNECT4_CELLS = CONNECT4_ROWS * CONNECT4_COLS
CONNECT4_LABELS = ("win", "loss", "draw")
CONNECT4_SYMBOLS = {"b": 0, "x": 1, "o": 2}


class ParseError(ValueError):
    """A dataset file could not be read."""


class MissingHeaderError(ParseError):
    pass


class TruncatedError(ParseError):
    pass


class LabelRangeError(ParseError):
    pass


class RowWidthError(ParseError):
    pass


@dataclass
class BinaryDataset:
    """``features`` is an ``(n, o)`` uint8 array of 0/1, ``labels`` int64."""

    features: np.ndarray
    labels: np.ndarray
    n_classes: int

    def __post_init__(self):
        self.features = np.ascontiguousarray(self.features, dtype=np.uint8)
        self.labels = np.ascontiguousarray(self.labels, dtype=np.int64)
        if self.features.ndim != 2:
            raise ValueError("features must be a 2-d array")
        if self.labels.shape != (self.features.shape[0],):
            raise ValueError("need exactly one label per row")
        if self.n_classes < 1:
            raise ValueError("need at least one class")
        if self.features.size and self.features.max() > 1:
            raise ValueError("features must be 0/1")
        if self.labels.size and (self.labels.min() < 0 or self.labels.max() >= self.n_classes):
            raise ValueError(f"labels must lie in [0, {self.n_classes})")

    @property
    def o(self) -> int:
        return self.features.shape[1]

    def __len__(self) -> int:
        return self.features.shape[0]

    def __eq__(self, other):
        if not isinstance(other, BinaryDataset):
            return NotImplemented
        return (
            self.n_classes == other.n_classes
            and np.array_equal(self.features, other.features)
            and np.array_equal(self.labels, other.labels)
        )

    def subset(self, index) -> "BinaryDataset":
        return BinaryDataset(self.features[index], self.labels[index], self.n_classes)

    def class_counts(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.n_classes)


# ---------------------------------------------------------------------------
# encoders


def binarize_grayscale(pixels, threshold: int = MNIST_THRESHOLD) -> np.ndarray:
    """1 where ``pixel >= threshold``; works on any array shape."""
    if not 0 <= threshold <= 255:
        raise ValueError(f"threshold must lie in [0, 255], got {threshold}")
    pixels = np.asarray(pixels)
    if pixels.size and (pixels.min() < 0 or pixels.max() > 255):
        raise ValueError("pixels must lie in [0, 255]")
    return (pixels >= threshold).astype(np.uint8)


def encode_connect4(board) -> np.ndarray:
    """84 bits: player-one plane then player-two plane.

    ``board`` is 42 cells in UCI order (a1..a6, b1..b6, ..., g1..g6), given
    as symbols ``b/x/o`` or codes ``0/1/2``, or a 6x7 grid indexed
    ``[row][column]`` with row 0 at the bottom.
    """
    cells = np.asarray(board, dtype=object)
    if cells.shape == (CONNECT4_ROWS, CONNECT4_COLS):
        cells = cells.T.reshape(-1)
    if cells.shape != (CONNECT4_CELLS,):
        raise ParseError(f"a board has {CONNECT4_CELLS} cells, got shape {cells.shape}")
    codes = np.empty(CONNECT4_CELLS, dtype=np.uint8)
    for i, c in enumerate(cells):
        if isinstance(c, str):
            if c not in CONNECT4_SYMBOLS:
                raise ParseError(f"unknown Connect-4 cell symbol {c!r}")
            codes[i] = CONNECT4_SYMBOLS[c]
        elif c in (0, 1, 2):
            codes[i] = c
        else:
            raise ParseError(f"unknown Connect-4 cell value {c!r}")
    return np.concatenate((codes == 1, codes == 2)).astype(np.uint8)


def _open_text(path):
    path = Path(path)
    if path.suffix == ".gz":
        return gzip.open(path, "rt")
    return open(path)


def read_connect4(path) -> BinaryDataset:
    """Read the UCI comma-separated Connect-4 file (optionally gzipped)."""
    features, labels = [], []
    with _open_text(path) as f:
        for lineno, line in enumerate(f, 1):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != CONNECT4_CELLS + 1:
                raise RowWidthError(f"line {lineno}: expected {CONNECT4_CELLS + 1} fields, got {len(parts)}")
            if parts[-1] not in CONNECT4_LABELS:
                raise LabelRangeError(f"line {lineno}: unknown outcome {parts[-1]!r}")
            try:
                features.append(encode_connect4(parts[:-1]))
            except ParseError as e:
                raise ParseError(f"line {lineno}: {e}") from None
            labels.append(CONNECT4_LABELS.index(parts[-1]))
    if not features:
        raise MissingHeaderError(f"{path}: no rows")
    return BinaryDataset(np.array(features), np.array(labels), len(CONNECT4_LABELS))


# ---------------------------------------------------------------------------
# IDX containers

_IDX_TYPES = {0x08: np.uint8, 0x09: np.int8, 0x0B: ">i2", 0x0C: ">i4", 0x0D: ">f4", 0x0E: ">f8"}


def _open_binary(path, mode="rb"):
    path = Path(path)
    return gzip.open(path, mode) if path.suffix == ".gz" else open(path, mode)


def read_idx(path) -> np.ndarray:
    with _open_binary(path) as f:
        raw = f.read()
    if len(raw) < 4 or raw[0] or raw[1]:
        raise MissingHeaderError(f"{path}: not an IDX file")
    dtype, ndim = raw[2], raw[3]
    if dtype not in _IDX_TYPES:
        raise ParseError(f"{path}: unknown IDX element type 0x{dtype:02x}")
    if len(raw) < 4 + 4 * ndim:
        raise TruncatedError(f"{path}: truncated IDX header")
    shape = struct.unpack(f">{ndim}I", raw[4 : 4 + 4 * ndim])
    dt = np.dtype(_IDX_TYPES[dtype])
    need = int(np.prod(shape)) * dt.itemsize
    body = raw[4 + 4 * ndim :]
    if len(body) < need:
        raise TruncatedError(f"{path}: expected {need} payload bytes, got {len(body)}")
    return np.frombuffer(body[:need], dtype=dt).reshape(shape)


def write_idx(path, array: np.ndarray):
    array = np.ascontiguousarray(array, dtype=np.uint8)
    with _open_binary(path, "wb") as f:
        f.write(bytes((0, 0, 0x08, array.ndim)))
        f.write(struct.pack(f">{array.ndim}I", *array.shape))
        f.write(array.tobytes())


def read_idx_pair(images, labels, threshold: int = MNIST_THRESHOLD, n_classes: int | None = None) -> BinaryDataset:
    """Binarize an IDX image file and pair it with an IDX label file."""
    img = read_idx(images)
    lab = read_idx(labels).astype(np.int64)
    if img.ndim < 2:
        raise ParseError("IDX images need at least two dimensions")
    if lab.ndim != 1 or lab.shape[0] != img.shape[0]:
        raise ParseError(f"{img.shape[0]} images but labels have shape {lab.shape}")
    bits = binarize_grayscale(img.reshape(img.shape[0], -1), threshold)
    k = n_classes if n_classes is not None else int(lab.max()) + 1 if lab.size else 1
    if lab.size and lab.max() >= k:
        raise LabelRangeError(f"label {lab.max()} >= {k} classes")
    return BinaryDataset(bits, lab, k)


# ---------------------------------------------------------------------------
# WTMD and text


def save_dataset(d: BinaryDataset, path):
    o = d.o
    packed = np.packbits(d.features, axis=1, bitorder="little")
    rows = np.empty((len(d), 4 + packed.shape[1]), dtype=np.uint8)
    rows[:, :4] = d.labels.astype("<u4").view(np.uint8).reshape(-1, 4)
    rows[:, 4:] = packed
    with open(path, "wb") as f:
        f.write(_HEADER.pack(MAGIC, VERSION, o, d.n_classes, len(d)))
        f.write(rows.tobytes())


def _load_wtmd(raw: bytes, name) -> BinaryDataset:
    if len(raw) < _HEADER.size:
        raise MissingHeaderError(f"{name}: header is {len(raw)} bytes, need {_HEADER.size}")
    magic, version, o, n_classes, n = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise MissingHeaderError(f"{name}: bad magic {magic!r}")
    if version != VERSION:
        raise ParseError(f"{name}: unsupported version {version}")
    if n_classes < 1:
        raise ParseError(f"{name}: header declares no classes")
    width = 4 + (o + 7) // 8
    body = raw[_HEADER.size :]
    if len(body) < n * width:
        raise TruncatedError(f"{name}: {n} rows need {n * width} bytes, found {len(body)}")
    if len(body) > n * width:
        raise ParseError(f"{name}: {len(body) - n * width} unexpected trailing bytes")
    rows = np.frombuffer(body, dtype=np.uint8).reshape(n, width)
    labels = rows[:, :4].copy().view("<u4").reshape(-1).astype(np.int64)
    bad = np.flatnonzero(labels >= n_classes)
    if bad.size:
        raise LabelRangeError(f"{name}: row {bad[0]} has label {labels[bad[0]]} >= {n_classes} classes")
    bits = np.unpackbits(rows[:, 4:], axis=1, count=o, bitorder="little") if n else np.zeros((0, o), np.uint8)
    return BinaryDataset(bits, labels, n_classes)


def _load_text(text: str, name) -> BinaryDataset:
    features, labels, n_classes = [], [], None
    width = None
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            key, _, value = line[1:].strip().partition("=")
            if key.strip() == "classes":
                n_classes = int(value)
            continue
        parts = line.split()
        if len(parts) != 2 or not parts[0].isdigit() or set(parts[1]) - {"0", "1"}:
            raise ParseError(f"{name}: line {lineno}: expected '<label> <bits>'")
        if width is None:
            width = len(parts[1])
        elif len(parts[1]) != width:
            raise RowWidthError(f"{name}: line {lineno} has {len(parts[1])} bits, expected {width}")
        labels.append(int(parts[0]))
        features.append(np.frombuffer(parts[1].encode(), dtype=np.uint8) - ord("0"))
    if width is None:
        raise MissingHeaderError(f"{name}: no rows")
    k = n_classes if n_classes is not None else max(labels) + 1
    for lineno, y in enumerate(labels):
        if y >= k:
            raise LabelRangeError(f"{name}: row {lineno} has label {y} >= {k} classes")
    return BinaryDataset(np.array(features), np.array(labels), k)


def save_text(d: BinaryDataset, path):
    with open(path, "w") as f:
        f.write(f"# classes={d.n_classes}\n")
        for bits, y in zip(d.features, d.labels):
            f.write(f"{y} {''.join('1' if b else '0' for b in bits)}\n")


def load_dataset(path, format: str | None = None) -> BinaryDataset:
    """Load a WTMD or text dataset; ``format`` is ``wtmd``, ``text`` or auto."""
    with open(path, "rb") as f:
        raw = f.read()
    if format is None:
        format = "wtmd" if raw[:4] == MAGIC or not raw else "text"
    if format == "wtmd":
        return _load_wtmd(raw, path)
    if format == "text":
        try:
            return _load_text(raw.decode("ascii"), path)
        except UnicodeDecodeError:
            raise ParseError(f"{path}: text datasets must be ASCII") from None
    raise ValueError(f"unknown dataset format {format!r}")


def split_dataset(d: BinaryDataset, test_fraction: float, rng: Rng) -> tuple[BinaryDataset, BinaryDataset]:
    """Random disjoint (train, test) split with ``round(n * test_fraction)`` test rows."""
    if not 0.0 < test_fraction < 1.0:
        raise ValueError(f"test fraction must lie in (0, 1), got {test_fraction}")
    order = rng.permutation(len(d))
    n_test = int(round(len(d) * test_fraction))
    return d.subset(np.sort(order[n_test:])), d.subset(np.sort(order[:n_test]))
