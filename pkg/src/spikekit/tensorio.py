"""Shared on-disk tensor format.

Binary files start with one ASCII header line:

    tensor <kind> little <dim0,dim1,...>\n

where kind is ``real64`` or ``int32``, followed by the raw little-endian
payload in row-major order. Small tensors can also travel as CSV.
"""

from __future__ import annotations

import csv

import numpy as np

from .errors import ContractViolation

_MAGIC = "tensor"
_KINDS = {"real64": np.dtype("<f8"), "int32": np.dtype("<i4")}


def _kind_for(arr: np.ndarray) -> str:
    if np.issubdtype(arr.dtype, np.floating):
        return "real64"
    if np.issubdtype(arr.dtype, np.integer):
        info = np.iinfo(np.int32)
        if arr.size and (arr.min() < info.min or arr.max() > info.max):
            raise ContractViolation("integer tensor exceeds the int32 payload range")
        return "int32"
    raise ContractViolation(f"unsupported dtype: {arr.dtype}")


def write_tensor(path, arr) -> None:
    arr = np.asarray(arr)
    if arr.ndim == 0:
        raise ContractViolation("0-d tensors are not supported")
    kind = _kind_for(arr)
    shape_token = ",".join(str(d) for d in arr.shape)
    with open(path, "wb") as fh:
        fh.write(f"{_MAGIC} {kind} little {shape_token}\n".encode("ascii"))
        fh.write(np.ascontiguousarray(arr, dtype=_KINDS[kind]).tobytes())


def read_tensor(path) -> np.ndarray:
    with open(path, "rb") as fh:
        header = fh.readline().decode("ascii").rstrip("\n")
        payload = fh.read()
    fields = header.split(" ")
    if len(fields) != 4 or fields[0] != _MAGIC:
        raise ContractViolation(f"not a tensor file: {header[:40]!r}")
    _, kind, byte_order, shape_token = fields
    if byte_order != "little":
        raise ContractViolation(f"unsupported byte order: {byte_order!r}")
    if kind not in _KINDS:
        raise ContractViolation(f"unsupported element kind: {kind!r}")
    shape = tuple(int(d) for d in shape_token.split(","))
    arr = np.frombuffer(payload, dtype=_KINDS[kind])
    expected = int(np.prod(shape, dtype=np.int64))
    if arr.size != expected:
        raise ContractViolation(f"payload holds {arr.size} elements, header says {expected}")
    return arr.reshape(shape).copy()


def write_tensor_csv(path, arr) -> None:
    arr = np.asarray(arr)
    if arr.ndim == 1:
        arr = arr.reshape(1, -1)
    if arr.ndim != 2:
        raise ContractViolation("CSV export supports 1-D and 2-D tensors only")
    is_int = np.issubdtype(arr.dtype, np.integer)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        for row in arr:
            writer.writerow([int(v) if is_int else f"{float(v):.17g}" for v in row])


def read_tensor_csv(path, dtype=np.float64) -> np.ndarray:
    rows = []
    with open(path, newline="") as fh:
        for row in csv.reader(fh):
            if row:
                rows.append([dtype(v) for v in row])
    if not rows:
        raise ContractViolation(f"empty CSV tensor: {path}")
    widths = {len(r) for r in rows}
    if len(widths) != 1:
        raise ContractViolation("ragged CSV rows")
    return np.asarray(rows, dtype=dtype)
