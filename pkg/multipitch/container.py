"""Self-describing binary container for HCQT tensors, piano rolls and checkpoints.

Layout::

    b"MPHC"                      magic
    uint32 little-endian         header length in bytes
    header                       UTF-8 JSON
    payload                      little-endian float32 tensors, C order

The header holds ``kind``, free-form ``meta`` and a ``tensors`` index of
``{"name", "shape", "offset"}`` entries. Offsets count float32 elements
from the start of the payload, so any language can reload the file.
"""

import json
import os
import struct
from typing import Any, Dict, Mapping, Tuple

import numpy as np

from multipitch.exceptions import ContainerError

MAGIC = b"MPHC"
DTYPE = np.dtype("<f4")


def write_container(
    path, kind: str, tensors: Mapping[str, np.ndarray], meta: Dict[str, Any] = None
) -> None:
    index = []
    offset = 0
    payload = []
    for name, array in tensors.items():
        array = np.ascontiguousarray(array, dtype=DTYPE)
        index.append({"name": name, "shape": list(array.shape), "offset": offset})
        offset += array.size
        payload.append(array.tobytes(order="C"))

    header = json.dumps(
        {"kind": kind, "dtype": "float32-le", "meta": meta or {}, "tensors": index},
        sort_keys=True,
    ).encode("utf-8")
    # pad so the float32 payload starts 4-byte aligned
    header += b" " * (-(len(header) + 8) % 4)

    directory = os.path.dirname(os.fspath(path))
    if directory:
        os.makedirs(directory, exist_ok=True)
    tmp_path = f"{os.fspath(path)}.tmp"
    with open(tmp_path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<I", len(header)))
        f.write(header)
        for chunk in payload:
            f.write(chunk)
    os.replace(tmp_path, path)


def read_container(
    path, expected_kind: str = None
) -> Tuple[Dict[str, Any], Dict[str, np.ndarray]]:
    """Returns ``(header, tensors)``; tensors are float32 in native byte order."""
    with open(path, "rb") as f:
        raw = f.read()

    if raw[:4] != MAGIC:
        raise ContainerError(f"{path}: not a multipitch container")
    try:
        (header_len,) = struct.unpack("<I", raw[4:8])
        header = json.loads(raw[8 : 8 + header_len].decode("utf-8"))
    except (struct.error, UnicodeDecodeError, json.JSONDecodeError) as e:
        raise ContainerError(f"{path}: unreadable header ({e})") from e

    if expected_kind is not None and header.get("kind") != expected_kind:
        raise ContainerError(
            f"{path}: expected kind '{expected_kind}', found '{header.get('kind')}'"
        )

    payload = np.frombuffer(raw, dtype=DTYPE, offset=8 + header_len)
    tensors = {}
    for entry in header["tensors"]:
        size = int(np.prod(entry["shape"], dtype=np.int64))
        start = entry["offset"]
        if start + size > payload.size:
            raise ContainerError(f"{path}: tensor '{entry['name']}' is truncated")
        tensors[entry["name"]] = (
            payload[start : start + size].reshape(entry["shape"]).astype(np.float32)
        )
    return header, tensors
