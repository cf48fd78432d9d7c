"""Self-describing binary container for tensor trains and solver checkpoints."""

from __future__ import annotations

import io
import struct
from typing import Sequence

import numpy as np

from .ttcore import TTOperator, TTVector

_MAGIC = b"TTEZ"
_CKPT_MAGIC = b"TTCK"
_VERSION = 1
_KIND_VECTOR = 1
_KIND_OPERATOR = 2
_LITTLE = 1  # all payloads are little-endian float64


def tt_to_bytes(obj) -> bytes:
    """Serialize a TTVector or TTOperator."""
    if isinstance(obj, TTVector):
        kind = _KIND_VECTOR
    elif isinstance(obj, TTOperator):
        kind = _KIND_OPERATOR
    else:
        raise TypeError(f"cannot serialize {type(obj).__name__}")
    d = obj.d
    buf = io.BytesIO()
    buf.write(_MAGIC)
    buf.write(struct.pack("<HBB", _VERSION, kind, _LITTLE))
    buf.write(struct.pack("<I", d))
    buf.write(struct.pack(f"<{d}I", *obj.dims))
    buf.write(struct.pack(f"<{d + 1}I", *obj.ranks))
    for core in obj.cores:
        buf.write(np.ascontiguousarray(core, dtype="<f8").tobytes())
    return buf.getvalue()


def tt_from_bytes(data: bytes):
    buf = io.BytesIO(data)
    return _read_tt(buf)


def _read_tt(buf):
    magic = buf.read(4)
    if magic != _MAGIC:
        raise ValueError("not a tensor-train container")
    version, kind, endian = struct.unpack("<HBB", buf.read(4))
    if version != _VERSION:
        raise ValueError(f"unsupported container version {version}")
    if endian != _LITTLE:
        raise ValueError("unsupported endianness tag")
    (d,) = struct.unpack("<I", buf.read(4))
    dims = struct.unpack(f"<{d}I", buf.read(4 * d))
    ranks = struct.unpack(f"<{d + 1}I", buf.read(4 * (d + 1)))
    cores = []
    for k in range(d):
        if kind == _KIND_VECTOR:
            shape = (ranks[k], dims[k], ranks[k + 1])
        else:
            shape = (ranks[k], dims[k], dims[k], ranks[k + 1])
        count = int(np.prod(shape))
        raw = buf.read(8 * count)
        if len(raw) != 8 * count:
            raise ValueError("truncated container payload")
        core = np.frombuffer(raw, dtype="<f8").reshape(shape)
        if not np.isfinite(core).all():
            raise ValueError(f"core {k} contains non-finite entries")
        cores.append(core)
    return TTVector(cores) if kind == _KIND_VECTOR else TTOperator(cores)


def save_tt(obj, path) -> None:
    with open(path, "wb") as fh:
        fh.write(tt_to_bytes(obj))


def load_tt(path):
    with open(path, "rb") as fh:
        return _read_tt(fh)


# ---------------------------------------------------------------------------
# solver checkpoints

def save_checkpoint(path, iteration: int, t_index: int, phase1_done: bool,
                    rayleigh: Sequence[float], rayleigh_prev: Sequence[float],
                    xs: Sequence[TTVector], ps: Sequence[TTVector]) -> None:
    """Write the solver state: scalars, Rayleigh quotients, and both blocks."""
    if len(xs) != len(ps):
        raise ValueError("X and P blocks must have the same width")
    b = len(xs)
    with open(path, "wb") as fh:
        fh.write(_CKPT_MAGIC)
        fh.write(struct.pack("<HH", _VERSION, 0))
        fh.write(struct.pack("<IqiB3x", b, int(iteration), int(t_index),
                             1 if phase1_done else 0))
        fh.write(np.asarray(rayleigh, dtype="<f8").tobytes())
        fh.write(np.asarray(rayleigh_prev, dtype="<f8").tobytes())
        for vec in list(xs) + list(ps):
            blob = tt_to_bytes(vec)
            fh.write(struct.pack("<Q", len(blob)))
            fh.write(blob)


def load_checkpoint(path) -> dict:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != _CKPT_MAGIC:
            raise ValueError("not a checkpoint file")
        version, _ = struct.unpack("<HH", fh.read(4))
        if version != _VERSION:
            raise ValueError(f"unsupported checkpoint version {version}")
        b, iteration, t_index, phase1_done = struct.unpack("<IqiB3x", fh.read(20))
        rayleigh = np.frombuffer(fh.read(8 * b), dtype="<f8").copy()
        rayleigh_prev = np.frombuffer(fh.read(8 * b), dtype="<f8").copy()
        vecs = []
        for _ in range(2 * b):
            (size,) = struct.unpack("<Q", fh.read(8))
            vecs.append(tt_from_bytes(fh.read(size)))
    return {
        "iteration": iteration,
        "t_index": t_index,
        "phase1_done": bool(phase1_done),
        "rayleigh": rayleigh,
        "rayleigh_prev": rayleigh_prev,
        "xs": vecs[:b],
        "ps": vecs[b:],
    }
