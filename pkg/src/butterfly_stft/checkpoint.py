"""Binary checkpoint format.

Little-endian layout::

    b"BFLY"  u32 version (=1)  u32 tensor_count
    per tensor: u16 name_len, name (UTF-8), u8 dtype (0=f64, 1=f32),
                u8 rank, rank x u64 dims, raw values

Binary32 is accepted on load (and offered on save for export) but the
library itself always computes in binary64.
"""

import struct

import numpy as np

from .errors import FormatError

MAGIC = b"BFLY"
VERSION = 1
_DTYPES = {0: np.dtype("<f8"), 1: np.dtype("<f4")}


def save_checkpoint(path, tensors, dtype="f8"):
    code = {"f8": 0, "f4": 1}[dtype]
    out = [MAGIC, struct.pack("<II", VERSION, len(tensors))]
    for name, arr in tensors.items():
        arr = np.asarray(arr, dtype=_DTYPES[code], order="C")
        raw_name = name.encode("utf-8")
        out.append(struct.pack("<H", len(raw_name)))
        out.append(raw_name)
        out.append(struct.pack("<BB", code, arr.ndim))
        out.append(struct.pack(f"<{arr.ndim}Q", *arr.shape))
        out.append(arr.tobytes())
    with open(path, "wb") as fh:
        fh.write(b"".join(out))


def load_checkpoint(path):
    """Read every tensor; nothing is returned unless the whole file parses."""
    with open(path, "rb") as fh:
        data = fh.read()
    pos = 0

    def take(size, what):
        nonlocal pos
        if pos + size > len(data):
            raise FormatError(f"truncated file while reading {what}", offset=pos)
        chunk = data[pos:pos + size]
        pos += size
        return chunk

    if take(4, "magic") != MAGIC:
        raise FormatError("bad magic, expected b'BFLY'", offset=0)
    version, count = struct.unpack("<II", take(8, "header"))
    if version != VERSION:
        raise FormatError(f"unsupported version {version}", offset=4)
    tensors = {}
    for _ in range(count):
        (name_len,) = struct.unpack("<H", take(2, "name length"))
        start = pos
        try:
            name = take(name_len, "name").decode("utf-8")
        except UnicodeDecodeError:
            raise FormatError("tensor name is not valid UTF-8", offset=start) from None
        code_at = pos
        code, rank = struct.unpack("<BB", take(2, "dtype/rank"))
        if code not in _DTYPES:
            raise FormatError(f"unknown dtype code {code}", offset=code_at)
        dims = struct.unpack(f"<{rank}Q", take(8 * rank, "dims"))
        dt = _DTYPES[code]
        size = int(np.prod(dims, dtype=np.int64)) if rank else 1
        raw = take(size * dt.itemsize, f"values of {name!r}")
        tensors[name] = np.frombuffer(raw, dtype=dt).reshape(dims).astype(np.float64)
    if pos != len(data):
        raise FormatError("trailing bytes after last tensor", offset=pos)
    return tensors
