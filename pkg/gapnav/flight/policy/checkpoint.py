# PEP-8
from __future__ import annotations

import hashlib
import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from utils.log import logger

from . import packer
from .errors import ArchitectureMismatchError, CheckpointFormatError, CheckpointVersionError
from .network import PolicyArch, PolicyParams


MAGIC = b"GNAV"
FORMAT_VERSION = 1
DIGEST_SIZE = 32

# Layout:
#   magic "GNAV" | uint16 version | uint32-length JSON descriptor {"arch", "meta"}
#   | uint32 tensor count | tensors (name, ndim, dims, <f8 data) | SHA-256 of all preceding bytes
# Parameter tensors come first in architecture order, then extra tensors
# (optimizer state) named "extra/<key>".

EXTRA_PREFIX = "extra/"


@dataclass
class Checkpoint:
    params: PolicyParams
    meta: dict = field(default_factory=dict)
    extra: dict[str, np.ndarray] = field(default_factory=dict)


def _descriptor(arch: PolicyArch, meta: dict) -> bytes:
    return json.dumps(
        {"arch": arch.as_dict(), "meta": meta},
        sort_keys=True,
        separators=(",", ":"),
    ).encode("utf-8")


def encode_checkpoint(checkpoint: Checkpoint) -> bytes:
    params = checkpoint.params
    tensors = [(name, params[name]) for name in params]
    tensors += [(EXTRA_PREFIX + k, v) for k, v in sorted(checkpoint.extra.items())]
    body = (
        MAGIC
        + packer.pack_uint16(FORMAT_VERSION)
        + packer.pack_blob(_descriptor(params.arch, checkpoint.meta))
        + packer.pack_uint32(len(tensors))
        + b"".join(packer.pack_array(name, array) for name, array in tensors)
    )
    return body + hashlib.sha256(body).digest()


def decode_checkpoint(data: bytes) -> Checkpoint:
    if data[:len(MAGIC)] != MAGIC:
        raise CheckpointFormatError("bad magic bytes")
    if len(data) < len(MAGIC) + DIGEST_SIZE:
        raise CheckpointFormatError("file is truncated")
    body, digest = data[:-DIGEST_SIZE], data[-DIGEST_SIZE:]

    buffer = body[len(MAGIC):]
    try:
        version, buffer = packer.unpack_uint16(buffer)
    except struct.error as e:
        raise CheckpointFormatError(f"file is truncated: {e}") from None
    if version != FORMAT_VERSION:
        raise CheckpointVersionError(version, FORMAT_VERSION)
    if hashlib.sha256(body).digest() != digest:
        raise CheckpointFormatError("checksum mismatch (corrupt or truncated file)")

    try:
        descriptor, buffer = packer.unpack_blob(buffer)
        count, buffer = packer.unpack_uint32(buffer)
        arrays: dict[str, np.ndarray] = {}
        for _ in range(count):
            name, array, buffer = packer.unpack_array(buffer)
            arrays[name] = array
    except struct.error as e:
        raise CheckpointFormatError(f"file is truncated: {e}") from None
    if buffer:
        raise CheckpointFormatError(f"{len(buffer)} trailing bytes after tensors")

    try:
        header = json.loads(descriptor.decode("utf-8"))
        arch = PolicyArch.from_dict(header["arch"])
    except (ValueError, KeyError, TypeError) as e:
        raise CheckpointFormatError(f"bad architecture descriptor: {e}") from None

    extra = {k.removeprefix(EXTRA_PREFIX): v for k, v in arrays.items() if k.startswith(EXTRA_PREFIX)}
    weights = {k: v for k, v in arrays.items() if not k.startswith(EXTRA_PREFIX)}
    shapes = arch.param_shapes()
    if set(weights) != set(shapes) or any(weights[k].shape != s for k, s in shapes.items()):
        raise CheckpointFormatError("tensors do not match the embedded architecture")
    return Checkpoint(PolicyParams(arch, weights), header.get("meta", {}), extra)


def check_architecture(found: PolicyArch, expected: PolicyArch) -> None:
    a, b = found.as_dict(), expected.as_dict()
    differences = {k: (a[k], b[k]) for k in a if a[k] != b[k]}
    if differences:
        raise ArchitectureMismatchError(differences)


def save_checkpoint(
    params: PolicyParams,
    path: str | Path,
    meta: dict | None = None,
    extra: dict[str, np.ndarray] | None = None,
) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(encode_checkpoint(Checkpoint(params, meta or {}, extra or {})))
    logger.info(f"Checkpoint written to {path}")
    return path


def read_checkpoint(path: str | Path, arch: PolicyArch | None = None) -> Checkpoint:
    checkpoint = decode_checkpoint(Path(path).read_bytes())
    if arch is not None:
        check_architecture(checkpoint.params.arch, arch)
    return checkpoint


def load_checkpoint(path: str | Path, arch: PolicyArch | None = None) -> PolicyParams:
    return read_checkpoint(path, arch).params
