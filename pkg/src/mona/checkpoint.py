"""Self-describing binary checkpoints of optimizer state.

Layout (little-endian)::

    magic   8 bytes   b"MONACKPT"
    version u16
    config  u32 length + UTF-8 JSON
    count   u32
    count x buffer:
        name   u16 length + UTF-8
        dtype  u8   (0 float64, 1 float32, 2 bfloat16 bit patterns)
        ndim   u8, then ndim x u32 dims
        payload  raw element bytes, row-major

Buffers are written exactly as stored, so round trips are bit-exact for
every precision.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .matrixcore import bf16_decode

MAGIC = b"MONACKPT"
VERSION = 1

_DTYPES = {0: ("f64", np.dtype("<f8")), 1: ("f32", np.dtype("<f4")), 2: ("bf16", np.dtype("<u2"))}
_CODES = {np.dtype(np.float64): 0, np.dtype(np.float32): 1, np.dtype(np.uint16): 2}


class CheckpointError(ValueError):
    pass


@dataclass
class Checkpoint:
    config: dict
    buffers: dict[str, np.ndarray]

    def precision_of(self, name: str) -> str:
        return _DTYPES[_CODES[self.buffers[name].dtype]][0]


def optimizer_buffers(opt) -> dict[str, np.ndarray]:
    """Flatten an :class:`~mona.optimizers.Optimizer` into named buffers."""
    out = {}
    for name, group in opt.groups.items():
        out[f"{name}/weights"] = group.weights
        for key in sorted(group.state):
            out[f"{name}/{key}"] = group.state[key]
        if group.grad_slot is not None:
            out[f"{name}/grad_slot"] = group.grad_slot
    return out


def optimizer_meta(opt) -> dict:
    return {
        "algorithm": opt.algorithm,
        "steps_taken": opt.steps_taken,
        "groups": {n: {"kind": g.kind.value, "step": g.step} for n, g in opt.groups.items()},
    }


def restore_optimizer(opt, ckpt: Checkpoint) -> None:
    """Load buffers written by :func:`optimizer_buffers` back into ``opt``."""
    meta = ckpt.config.get("optimizer", {})
    for name, group in opt.groups.items():
        prefix = f"{name}/"
        keys = [k[len(prefix):] for k in ckpt.buffers if k.startswith(prefix)]
        if "weights" not in keys:
            raise CheckpointError(f"checkpoint has no weights for {name!r}")
        group.weights = ckpt.buffers[prefix + "weights"].astype(np.float64)
        group.state = {k: ckpt.buffers[prefix + k].copy() for k in keys
                       if k not in ("weights", "grad_slot")}
        slot = ckpt.buffers.get(prefix + "grad_slot")
        group.grad_slot = None if slot is None else slot.copy()
        group.step = int(meta.get("groups", {}).get(name, {}).get("step", group.step))
    opt.steps_taken = int(meta.get("steps_taken", opt.steps_taken))


def dumps(config: dict, buffers: dict[str, np.ndarray]) -> bytes:
    cfg = json.dumps(config, sort_keys=True).encode()
    parts = [MAGIC, struct.pack("<HI", VERSION, len(cfg)), cfg, struct.pack("<I", len(buffers))]
    for name, arr in buffers.items():
        arr = np.asarray(arr)
        code = _CODES.get(arr.dtype)
        if code is None:
            raise CheckpointError(f"buffer {name!r} has unsupported dtype {arr.dtype}")
        raw = name.encode()
        parts.append(struct.pack("<H", len(raw)) + raw)
        parts.append(struct.pack("<BB", code, arr.ndim) + struct.pack(f"<{arr.ndim}I", *arr.shape))
        parts.append(np.ascontiguousarray(arr, dtype=_DTYPES[code][1]).tobytes())
    return b"".join(parts)


def loads(data: bytes) -> Checkpoint:
    view = memoryview(data)
    pos = 0

    def take(n):
        nonlocal pos
        if pos + n > len(view):
            raise CheckpointError("truncated checkpoint")
        chunk = view[pos:pos + n]
        pos += n
        return chunk

    if bytes(take(len(MAGIC))) != MAGIC:
        raise CheckpointError("not a checkpoint file (bad magic)")
    version, cfg_len = struct.unpack("<HI", take(6))
    if version != VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version}")
    config = json.loads(bytes(take(cfg_len)).decode())
    (count,) = struct.unpack("<I", take(4))
    buffers = {}
    for _ in range(count):
        (nlen,) = struct.unpack("<H", take(2))
        name = bytes(take(nlen)).decode()
        code, ndim = struct.unpack("<BB", take(2))
        if code not in _DTYPES:
            raise CheckpointError(f"buffer {name!r}: unknown dtype code {code}")
        shape = struct.unpack(f"<{ndim}I", take(4 * ndim))
        dtype = _DTYPES[code][1]
        n = int(np.prod(shape, dtype=np.int64))
        arr = np.frombuffer(bytes(take(n * dtype.itemsize)), dtype=dtype).reshape(shape)
        buffers[name] = arr.astype(dtype.newbyteorder("="))
    if pos != len(view):
        raise CheckpointError("trailing bytes after last buffer")
    return Checkpoint(config, buffers)


def save(path, config: dict, buffers: dict[str, np.ndarray]) -> Path:
    path = Path(path)
    path.write_bytes(dumps(config, buffers))
    return path


def load(path) -> Checkpoint:
    return loads(Path(path).read_bytes())


def inspect(ckpt: Checkpoint) -> str:
    """One line per buffer: name, precision, shape and Frobenius norm."""
    lines = []
    for name, arr in ckpt.buffers.items():
        values = bf16_decode(arr) if arr.dtype == np.uint16 else arr.astype(np.float64)
        norm = float(np.sqrt(np.sum(values * values)))
        shape = "x".join(str(d) for d in arr.shape)
        lines.append(f"{name:32s} {ckpt.precision_of(name):5s} {shape:>12s} {norm:.6e}")
    return "\n".join(lines) + "\n"
