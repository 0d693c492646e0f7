"""WTMM model files.

Layout (little-endian)::

    b"WTMM"  u8 version
    u32 o  u32 n_classes  u32 pos_clauses  u32 neg_clauses  u32 n_states  u32 threshold
    f64 sparsity  f64 learning_rate  u64 seed
    i32 states[n_classes][clauses][2*o]
    f64 weights[n_classes][clauses]
    u64 saved_at (unix seconds)
    32 bytes SHA-256 of everything before saved_at

The timestamp is left out of the checksum, so two runs with the same seed
produce the same checksum.
"""
from __future__ import annotations

import hashlib
import struct
import time
from dataclasses import dataclass

import numpy as np

from .machine import MulticlassWTM, WTMParams

MAGIC = b"WTMM"
VERSION = 1
_HEADER = struct.Struct("<4sB6IddQ")
_STAMP = struct.Struct("<Q")
_DIGEST = 32


class ModelFileError(ValueError):
    """A model file is malformed or corrupted."""


@dataclass
class ModelFile:
    machine: MulticlassWTM
    seed: int
    saved_at: int = 0
    checksum: str = ""


def _payload(mm: MulticlassWTM, seed: int) -> bytes:
    p = mm.params
    head = _HEADER.pack(MAGIC, VERSION, p.n_features, mm.n_classes, p.pos_clauses, p.neg_clauses, p.n_states,
                        p.threshold, p.sparsity, p.learning_rate, seed)
    return head + mm.states.astype("<i4").tobytes() + mm.weights.astype("<f8").tobytes()


def model_checksum(mm: MulticlassWTM, seed: int) -> str:
    return hashlib.sha256(_payload(mm, seed)).hexdigest()


def save_model(mm: MulticlassWTM, path, seed: int, saved_at: int | None = None) -> str:
    """Write ``mm`` to ``path`` and return the hex checksum."""
    body = _payload(mm, seed)
    digest = hashlib.sha256(body)
    stamp = int(time.time()) if saved_at is None else saved_at
    with open(path, "wb") as f:
        f.write(body)
        f.write(_STAMP.pack(stamp))
        f.write(digest.digest())
    return digest.hexdigest()


def load_model(path) -> ModelFile:
    with open(path, "rb") as f:
        raw = f.read()
    if len(raw) < _HEADER.size:
        raise ModelFileError(f"{path}: too short for a model header")
    magic, version, o, k, pos, neg, n_states, threshold, sparsity, lr, seed = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise ModelFileError(f"{path}: bad magic {magic!r}")
    if version != VERSION:
        raise ModelFileError(f"{path}: unsupported version {version}")
    clauses = pos + neg
    n_states_bytes = 4 * k * clauses * 2 * o
    n_weight_bytes = 8 * k * clauses
    end = _HEADER.size + n_states_bytes + n_weight_bytes
    if len(raw) != end + _STAMP.size + _DIGEST:
        raise ModelFileError(f"{path}: expected {end + _STAMP.size + _DIGEST} bytes, found {len(raw)}")
    digest = hashlib.sha256(raw[:end])
    if digest.digest() != raw[end + _STAMP.size :]:
        raise ModelFileError(f"{path}: checksum mismatch")
    try:
        params = WTMParams(o, pos, neg, threshold, sparsity, lr, n_states)
    except ValueError as e:
        raise ModelFileError(f"{path}: {e}") from None
    states = np.frombuffer(raw, "<i4", k * clauses * 2 * o, _HEADER.size).reshape(k, clauses, 2 * o)
    weights = np.frombuffer(raw, "<f8", k * clauses, _HEADER.size + n_states_bytes).reshape(k, clauses)
    if states.min() < 1 or states.max() > 2 * n_states:
        raise ModelFileError(f"{path}: automaton state out of range")
    mm = MulticlassWTM(params, k, states=states.astype(np.int32), weights=weights.astype(np.float64))
    (stamp,) = _STAMP.unpack_from(raw, end)
    return ModelFile(mm, seed, stamp, digest.hexdigest())
