"""Bit-exact array container: JSON header sidecar plus raw binary payload.

The header records shape, dtype (u8/u16/u32/f32), row-major order, and
raw little-endian encoding; the payload is exactly
``product(shape) * itemsize`` bytes. Integer payloads load as labeled
grids, f32 payloads as probability fields. ``write_array(read_array(...))``
reproduces the payload byte for byte.
"""

import json
from pathlib import Path

import numpy as np

from svtopo.grid import LabeledGrid
from svtopo.loss import ProbabilityField

FORMAT_VERSION = 1

_DTYPES = {
    "u8": np.dtype("<u1"),
    "u16": np.dtype("<u2"),
    "u32": np.dtype("<u4"),
    "f32": np.dtype("<f4"),
}


def payload_path_for(header_path):
    """Default payload path: the header with a .bin suffix."""
    return Path(header_path).with_suffix(".bin")


def _dtype_name(value):
    if isinstance(value, ProbabilityField):
        return "f32"
    peak = int(value.labels.max()) if value.labels.size else 0
    if peak < 2**8:
        return "u8"
    if peak < 2**16:
        return "u16"
    if peak < 2**32:
        return "u32"
    raise ValueError(f"label {peak} exceeds the u32 container range")


def _write_raw(arr, dtype_name, header_path, payload_path=None, extra=None):
    header_path = Path(header_path)
    payload_path = (
        Path(payload_path) if payload_path else payload_path_for(header_path)
    )
    if arr.size == 0:
        raise ValueError("refusing to write an empty array")
    payload = np.ascontiguousarray(arr.astype(_DTYPES[dtype_name])).tobytes()
    header = {
        "format_version": FORMAT_VERSION,
        "shape": list(arr.shape),
        "dtype": dtype_name,
        "order": "row-major",
        "encoding": "raw-little-endian",
        "payload": payload_path.name,
    }
    if extra:
        header.update(extra)
    header_path.parent.mkdir(parents=True, exist_ok=True)
    header_path.write_text(json.dumps(header, indent=2) + "\n")
    payload_path.write_bytes(payload)
    return header_path, payload_path


def write_array(value, header_path, payload_path=None):
    """Serialize a LabeledGrid or ProbabilityField to header + payload files.

    Integer grids pick the smallest unsigned dtype that fits their labels;
    probability fields are stored as f32. Returns the two paths written.
    """
    if not isinstance(value, (ProbabilityField, LabeledGrid)):
        arr = np.asarray(value)
        value = (
            ProbabilityField(arr)
            if np.issubdtype(arr.dtype, np.floating)
            else LabeledGrid(arr)
        )
    arr = value.probs if isinstance(value, ProbabilityField) else value.labels
    return _write_raw(arr, _dtype_name(value), header_path, payload_path)


def _read_raw(header_path, payload_path=None):
    header_path = Path(header_path)
    try:
        header = json.loads(header_path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ValueError(f"cannot parse header {header_path}: {exc}") from exc

    for key in ("shape", "dtype", "order", "encoding"):
        if key not in header:
            raise ValueError(f"header {header_path} is missing {key!r}")
    if header["order"] != "row-major":
        raise ValueError(f"unsupported order {header['order']!r}")
    if header["encoding"] != "raw-little-endian":
        raise ValueError(f"unsupported encoding {header['encoding']!r}")
    if header["dtype"] not in _DTYPES:
        raise ValueError(f"unknown dtype {header['dtype']!r}")
    shape = tuple(int(s) for s in header["shape"])
    if not shape or any(s < 1 for s in shape):
        raise ValueError(f"bad shape {shape}")

    if payload_path is None:
        recorded = header.get("payload")
        payload_path = (
            header_path.parent / recorded if recorded else payload_path_for(header_path)
        )
    payload = Path(payload_path).read_bytes()
    dtype = _DTYPES[header["dtype"]]
    expected = int(np.prod(shape)) * dtype.itemsize
    if len(payload) != expected:
        raise ValueError(
            f"payload length {len(payload)} does not match "
            f"shape {shape} x {header['dtype']} = {expected} bytes"
        )
    return np.frombuffer(payload, dtype=dtype).reshape(shape), header


def read_array(header_path, payload_path=None):
    """Load a container back into a LabeledGrid or ProbabilityField."""
    arr, header = _read_raw(header_path, payload_path)
    if header["dtype"] == "f32":
        return ProbabilityField(arr.astype(np.float64))
    return LabeledGrid(arr.astype(np.int64))


def write_affinity_field(aff, header_path, payload_path=None):
    """Serialize an AffinityField: channel stack plus offsets in the header."""
    dtype_name = "u8" if aff.is_binary() else "f32"
    arr = aff.channels.astype(np.uint8 if dtype_name == "u8" else np.float32)
    extra = {"kind": "affinity", "offsets": [list(o) for o in aff.offsets]}
    return _write_raw(arr, dtype_name, header_path, payload_path, extra)


def read_affinity_field(header_path, payload_path=None):
    """Load an affinity container written by ``write_affinity_field``."""
    from svtopo.affinity import AffinityField

    arr, header = _read_raw(header_path, payload_path)
    if header.get("kind") != "affinity" or "offsets" not in header:
        raise ValueError(f"{header_path} is not an affinity container")
    offsets = tuple(tuple(int(v) for v in o) for o in header["offsets"])
    arr = arr.astype(np.float64) if header["dtype"] == "f32" else arr.astype(np.uint8)
    return AffinityField(channels=arr, offsets=offsets)
