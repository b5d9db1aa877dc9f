"""Binary artifact formats (snapshots, bases, weights) and run manifests.

Container layout shared by all three formats::

    magic (4 bytes) | version major, minor (2 x uint16 LE)
    | header length (uint32 LE) | header JSON (utf-8)
    | float64 LE payload arrays in header-declared order
    | crc32 of everything above (uint32 LE)

Writes are atomic (temp file in the target directory, then rename).
"""

from __future__ import annotations

import hashlib
import json
import os
import struct
import tempfile
import zlib
from dataclasses import dataclass, field

import numpy as np

from . import networks
from .psd import SnapshotSet, SymplecticBasis

SNAPSHOT_MAGIC = b"VPSN"
BASIS_MAGIC = b"PSDB"
WEIGHTS_MAGIC = b"AEHN"
FORMAT_VERSION = (1, 0)


class FileFormatError(ValueError):
    pass


class ChecksumError(FileFormatError):
    pass


def _atomic_write(path: str, blob: bytes) -> None:
    d = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=d, suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(blob)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _pack(magic: bytes, header: dict, arrays: list) -> bytes:
    hdr = json.dumps(header, sort_keys=True).encode("utf-8")
    parts = [magic, struct.pack("<HH", *FORMAT_VERSION), struct.pack("<I", len(hdr)), hdr]
    for a in arrays:
        parts.append(np.ascontiguousarray(a, dtype="<f8").tobytes())
    body = b"".join(parts)
    return body + struct.pack("<I", zlib.crc32(body) & 0xFFFFFFFF)


def _unpack(blob: bytes, magic: bytes, path: str):
    if len(blob) < 16:
        raise FileFormatError(f"{path}: file too short to be a valid container")
    if blob[:4] != magic:
        raise FileFormatError(f"{path}: bad magic {blob[:4]!r}, expected {magic!r}")
    stored = struct.unpack("<I", blob[-4:])[0]
    actual = zlib.crc32(blob[:-4]) & 0xFFFFFFFF
    if stored != actual:
        raise ChecksumError(
            f"{path}: checksum mismatch at offset {len(blob) - 4} "
            f"(stored {stored:#010x}, computed {actual:#010x})"
        )
    major, minor = struct.unpack("<HH", blob[4:8])
    if major > FORMAT_VERSION[0]:
        raise FileFormatError(
            f"{path}: format version {major}.{minor} is newer than supported "
            f"{FORMAT_VERSION[0]}.{FORMAT_VERSION[1]}"
        )
    hlen = struct.unpack("<I", blob[8:12])[0]
    header = json.loads(blob[12 : 12 + hlen].decode("utf-8"))
    payload = blob[12 + hlen : -4]
    return header, payload


def _read_arrays(payload: bytes, shapes: list, path: str) -> list:
    arrays, offset = [], 0
    for shape in shapes:
        count = int(np.prod(shape, dtype=np.int64)) if shape else 1
        nbytes = count * 8
        if offset + nbytes > len(payload):
            raise FileFormatError(f"{path}: payload truncated at byte {offset}")
        arrays.append(
            np.frombuffer(payload, dtype="<f8", count=count, offset=offset)
            .reshape(shape)
            .astype(np.float64)
        )
        offset += nbytes
    if offset != len(payload):
        raise FileFormatError(f"{path}: {len(payload) - offset} trailing payload bytes")
    return arrays


# --------------------------------------------------------------------------
# snapshots


def write_snapshots(path: str, snaps: SnapshotSet) -> None:
    arr = snaps.full
    header = {
        "kind": "snapshots",
        "rows": arr.shape[0],
        "cols": arr.shape[1],
        "stride": snaps.stride,
        "order": "F",
        "meta": snaps.meta,
    }
    # column-major so each snapshot is contiguous on disk
    _atomic_write(path, _pack(SNAPSHOT_MAGIC, header, [np.asfortranarray(arr).T]))


def read_snapshots(path: str) -> SnapshotSet:
    with open(path, "rb") as f:
        blob = f.read()
    header, payload = _unpack(blob, SNAPSHOT_MAGIC, path)
    rows, cols = header["rows"], header["cols"]
    (mat_t,) = _read_arrays(payload, [(cols, rows)], path)
    return SnapshotSet(full=mat_t.T.copy(), meta=header.get("meta", {}),
                       stride=header.get("stride", 1))


# --------------------------------------------------------------------------
# symplectic basis


def write_basis(path: str, basis: SymplecticBasis) -> None:
    header = {
        "kind": "basis",
        "n": basis.Phi.shape[0],
        "m": basis.Phi.shape[1],
        "arrays": ["Phi", "Psi", "singular_values"],
    }
    blob = _pack(BASIS_MAGIC, header, [basis.Phi, basis.Psi, basis.singular_values])
    _atomic_write(path, blob)


def read_basis(path: str) -> SymplecticBasis:
    with open(path, "rb") as f:
        blob = f.read()
    header, payload = _unpack(blob, BASIS_MAGIC, path)
    n, m = header["n"], header["m"]
    phi, psi, sv = _read_arrays(payload, [(n, m), (n, m), (m,)], path)
    return SymplecticBasis(Phi=phi, Psi=psi, singular_values=sv)


# --------------------------------------------------------------------------
# network weights (+ mode scaling needed to run the model)


def write_weights(path: str, params: networks.NetworkParams, arch: dict,
                  scaling: np.ndarray, extra: dict | None = None) -> None:
    """Persist the six subnets plus the architecture recipe and mode scaling.

    `arch` must contain `builder` ("conv" or "dense") and the keyword
    arguments of the matching constructor, so the reader can rebuild the
    network shapes before loading values.
    """
    if arch.get("builder") not in ("conv", "dense"):
        raise FileFormatError("arch['builder'] must be 'conv' or 'dense'")
    flat = params.flat_params()
    keys = sorted(flat)
    header = {
        "kind": "weights",
        "arch": arch,
        "keys": keys,
        "shapes": {k: list(flat[k].shape) for k in keys},
        "scaling_len": int(np.asarray(scaling).size),
        "extra": extra or {},
    }
    arrays = [np.asarray(scaling, dtype=np.float64)] + [flat[k] for k in keys]
    _atomic_write(path, _pack(WEIGHTS_MAGIC, header, arrays))


def read_weights(path: str):
    """Return (NetworkParams, arch dict, scaling vector, extra dict)."""
    with open(path, "rb") as f:
        blob = f.read()
    header, payload = _unpack(blob, WEIGHTS_MAGIC, path)
    arch = header["arch"]
    kwargs = {k: v for k, v in arch.items() if k != "builder"}
    if arch["builder"] == "conv":
        params = networks.build_networks(**kwargs)
    else:
        params = networks.build_dense_networks(**kwargs)
    keys = header["keys"]
    shapes = [(header["scaling_len"],)] + [tuple(header["shapes"][k]) for k in keys]
    arrays = _read_arrays(payload, shapes, path)
    scaling = arrays[0]
    params.set_flat_params({k: a for k, a in zip(keys, arrays[1:])})
    return params, arch, scaling, header.get("extra", {})


# --------------------------------------------------------------------------
# run manifest


def file_digest(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


@dataclass
class RunManifest:
    """Everything needed to reproduce a run: configuration, seeds, digests."""

    command: str
    scenario: dict = field(default_factory=dict)
    seeds: dict = field(default_factory=dict)
    strides: dict = field(default_factory=dict)
    inputs: dict = field(default_factory=dict)    # path -> sha256
    outputs: dict = field(default_factory=dict)   # path -> sha256
    timings: dict = field(default_factory=dict)   # phase -> seconds
    notes: dict = field(default_factory=dict)
    tool_version: str = "picrom 1.0"

    def add_input(self, path: str) -> None:
        self.inputs[os.path.basename(path)] = file_digest(path)

    def add_output(self, path: str) -> None:
        self.outputs[os.path.basename(path)] = file_digest(path)

    def write(self, path: str) -> None:
        _atomic_write(path, json.dumps(self.__dict__, indent=2, sort_keys=True,
                                       default=str).encode("utf-8"))

    @staticmethod
    def read(path: str) -> "RunManifest":
        with open(path) as f:
            data = json.load(f)
        return RunManifest(**data)
