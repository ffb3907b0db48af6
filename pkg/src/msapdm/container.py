"""Binary container shared by weight files and cached datasets.

Layout: magic b"MSAP" | format version (u32 LE) | header length (u64 LE) |
UTF-8 JSON header | raw little-endian float32 payload. The header carries
arbitrary metadata plus a tensor manifest: [{name, shape, offset}] with
byte offsets into the payload.
"""

import json
import struct

import numpy as np

MAGIC = b"MSAP"
VERSION = 1


class ContainerError(Exception):
    """Base class for container read failures."""


class BadMagicError(ContainerError):
    pass


class VersionMismatchError(ContainerError):
    pass


class ManifestMismatchError(ContainerError):
    pass


class TruncatedFileError(ContainerError):
    pass


def write_container(path, meta, tensors):
    """tensors: ordered list of (name, float32 ndarray). meta must be
    JSON-serializable; header bytes are deterministic (sorted keys)."""
    manifest = []
    offset = 0
    payload = []
    for name, arr in tensors:
        arr = np.ascontiguousarray(arr, dtype="<f4")
        manifest.append({"name": name, "shape": list(arr.shape), "offset": offset})
        payload.append(arr.tobytes())
        offset += arr.nbytes
    header = dict(meta)
    header["tensors"] = manifest
    hbytes = json.dumps(header, sort_keys=True, separators=(",", ":")).encode()
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<I", VERSION))
        f.write(struct.pack("<Q", len(hbytes)))
        f.write(hbytes)
        for chunk in payload:
            f.write(chunk)


def read_container(path):
    """Returns (meta, {name: ndarray}); raises a distinct ContainerError
    subclass for bad magic, unknown version, truncation, and
    manifest/payload mismatch."""
    with open(path, "rb") as f:
        data = f.read()
    if len(data) < 16:
        raise TruncatedFileError(f"{path}: file shorter than the fixed header")
    if data[:4] != MAGIC:
        raise BadMagicError(f"{path}: bad magic {data[:4]!r}, expected {MAGIC!r}")
    (version,) = struct.unpack("<I", data[4:8])
    if version != VERSION:
        raise VersionMismatchError(
            f"{path}: format version {version}, expected {VERSION}")
    (hlen,) = struct.unpack("<Q", data[8:16])
    if len(data) < 16 + hlen:
        raise TruncatedFileError(f"{path}: file ends inside the header")
    try:
        header = json.loads(data[16 : 16 + hlen].decode())
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise ManifestMismatchError(f"{path}: unreadable header: {e}")
    payload = data[16 + hlen :]
    manifest = header.pop("tensors", [])
    expected = 0
    for entry in manifest:
        size = int(np.prod(entry["shape"], dtype=np.int64)) * 4
        expected = max(expected, entry["offset"] + size)
    if len(payload) != expected:
        raise ManifestMismatchError(
            f"{path}: payload has {len(payload)} bytes, "
            f"manifest declares {expected}")
    tensors = {}
    for entry in manifest:
        shape = tuple(entry["shape"])
        n = int(np.prod(shape, dtype=np.int64))
        off = entry["offset"]
        arr = np.frombuffer(payload, dtype="<f4", count=n, offset=off)
        tensors[entry["name"]] = arr.reshape(shape).copy()
    return header, tensors
