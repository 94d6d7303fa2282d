"""Versioned binary checkpoint container.

Layout (all integers little-endian):

    bytes 0-4   magic "EBOX1"
    u32         container version (currently 1)
    u32         header length in bytes
    header      UTF-8 JSON: model config, Adam hyperparameters and step
                count, training seed
    payload     tensors as raw row-major arrays in the model dtype:
                every parameter leaf in canonical order, then the Adam
                first-moment leaves, then the second-moment leaves
    u32         CRC-32 of everything between the magic and this field
"""

from __future__ import annotations

import json
import struct
import zlib
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import CheckpointError, ChecksumMismatchError, VersionMismatchError
from .model import (
    AdamState,
    ModelConfig,
    ModelParams,
    leaf_arrays,
    leaf_shapes,
    params_from_leaves,
)
from .util import atomic_write_bytes

MAGIC = b"EBOX1"
VERSION = 1


@dataclass
class Checkpoint:
    """Model parameters plus optimizer state and the seed that trained them."""

    params: ModelParams
    adam: AdamState
    seed: int = 0

    @property
    def config(self) -> ModelConfig:
        return self.params.config


def _tensor_blob(params: ModelParams) -> bytes:
    dtype = params.config.np_dtype.newbyteorder("<")
    return b"".join(np.ascontiguousarray(a, dtype=dtype).tobytes() for a in leaf_arrays(params))


def checkpoint_bytes(ckpt: Checkpoint) -> bytes:
    config = ckpt.config
    header = {
        "vocab_size": config.vocab_size,
        "hidden_size": config.hidden_size,
        "conditioning_dim": config.conditioning_dim,
        "num_layers": config.num_layers,
        "dropout": config.dropout,
        "dtype": config.dtype,
        "adam": {
            "lr": ckpt.adam.lr,
            "beta1": ckpt.adam.beta1,
            "beta2": ckpt.adam.beta2,
            "epsilon": ckpt.adam.epsilon,
            "step_count": ckpt.adam.step_count,
        },
        "seed": ckpt.seed,
    }
    header_bytes = json.dumps(header, sort_keys=True).encode("utf-8")
    body = bytearray()
    body += struct.pack("<I", VERSION)
    body += struct.pack("<I", len(header_bytes))
    body += header_bytes
    body += _tensor_blob(ckpt.params)
    body += _tensor_blob(ckpt.adam.m)
    body += _tensor_blob(ckpt.adam.v)
    return MAGIC + bytes(body) + struct.pack("<I", zlib.crc32(bytes(body)))


def checkpoint_from_bytes(data: bytes) -> Checkpoint:
    if len(data) < len(MAGIC) + 12 or data[: len(MAGIC)] != MAGIC:
        raise CheckpointError("not a checkpoint file (bad magic)")
    body = data[len(MAGIC) : -4]
    (stored_crc,) = struct.unpack("<I", data[-4:])
    if zlib.crc32(body) != stored_crc:
        raise ChecksumMismatchError("checkpoint payload fails its CRC check")
    (version,) = struct.unpack("<I", body[:4])
    if version != VERSION:
        raise VersionMismatchError(f"checkpoint version {version}, expected {VERSION}")
    (header_len,) = struct.unpack("<I", body[4:8])
    if 8 + header_len > len(body):
        raise CheckpointError("truncated checkpoint header")
    try:
        header = json.loads(body[8 : 8 + header_len].decode("utf-8"))
        config = ModelConfig(
            vocab_size=header["vocab_size"],
            hidden_size=header["hidden_size"],
            conditioning_dim=header["conditioning_dim"],
            num_layers=header["num_layers"],
            dropout=header["dropout"],
            dtype=header["dtype"],
        )
        adam_info = header["adam"]
        seed = header["seed"]
    except (KeyError, ValueError, TypeError) as exc:
        raise CheckpointError(f"bad checkpoint header: {exc}") from exc

    shapes = leaf_shapes(config)
    dtype = config.np_dtype.newbyteorder("<")
    per_set = sum(int(np.prod(s)) for s in shapes) * dtype.itemsize
    payload = body[8 + header_len :]
    if len(payload) != 3 * per_set:
        raise CheckpointError(
            f"checkpoint payload is {len(payload)} bytes, expected {3 * per_set}"
        )

    def read_set(offset: int) -> ModelParams:
        arrays = []
        pos = offset
        for shape in shapes:
            count = int(np.prod(shape))
            raw = np.frombuffer(payload, dtype=dtype, count=count, offset=pos)
            arrays.append(raw.astype(config.np_dtype).reshape(shape))
            pos += count * dtype.itemsize
        return params_from_leaves(config, arrays)

    params = read_set(0)
    adam = AdamState(
        m=read_set(per_set),
        v=read_set(2 * per_set),
        lr=adam_info["lr"],
        beta1=adam_info["beta1"],
        beta2=adam_info["beta2"],
        epsilon=adam_info["epsilon"],
        step_count=adam_info["step_count"],
    )
    return Checkpoint(params=params, adam=adam, seed=seed)


def save_checkpoint(path: str | Path, ckpt: Checkpoint) -> None:
    """Atomic write: the file is either the old checkpoint or the new one."""
    atomic_write_bytes(path, checkpoint_bytes(ckpt))


def load_checkpoint(path: str | Path) -> Checkpoint:
    return checkpoint_from_bytes(Path(path).read_bytes())
