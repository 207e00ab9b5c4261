"""Lossless spike codecs for bounded integer tensors.

Two codecs:

* ``unary``: an integer k becomes k leading unit spikes over T = L-1
  timesteps, all timestep weights 1 (a thermometer code).
* ``binary``: the magnitude's base-2 digits become one plane per bit with
  timestep weight 2**(t-1); the sign travels in a per-element polarity.
  Polar grids need T = A-1 planes (the symmetric grid tops out at
  2**(A-1) - 1 once the unreachable minimum is dropped), non-polar grids
  need T = A.

Both directions are exact: decode(encode(q)) == q value for value.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import ContractViolation
from .quant import BINARY, NONPOLAR, POLAR, UNARY, QuantizedTensor, QuantSpec

CODEC_KINDS = (UNARY, BINARY)

_MAGIC = "spiketrain v1"


@dataclass
class SpikeTrain:
    """Per-timestep binary planes plus polarity, weights and scale.

    ``spikes`` is uint8 (T, N) over the flattened element order of the
    logical ``shape``; ``polarity`` is int8 (N,) in {-1, +1} (all +1 in
    non-polar or unary trains).
    """

    spikes: np.ndarray
    polarity: np.ndarray
    timestep_weights: np.ndarray
    scale: float
    spec: QuantSpec
    codec_kind: str
    shape: tuple

    def __post_init__(self):
        self.spikes = np.ascontiguousarray(self.spikes, dtype=np.uint8)
        self.polarity = np.ascontiguousarray(self.polarity, dtype=np.int8)
        self.timestep_weights = np.ascontiguousarray(self.timestep_weights, dtype=np.int64)
        self.scale = float(self.scale)
        self.shape = tuple(int(d) for d in self.shape)
        if self.codec_kind not in CODEC_KINDS:
            raise ContractViolation(f"unknown codec kind: {self.codec_kind!r}")
        if self.spikes.ndim != 2:
            raise ContractViolation("spikes must be a (T, N) array")
        t, n = self.spikes.shape
        if self.timestep_weights.shape != (t,):
            raise ContractViolation("timestep_weights length must match the plane count")
        if self.polarity.shape != (n,):
            raise ContractViolation("polarity length must match the element count")
        if int(np.prod(self.shape, dtype=np.int64)) != n:
            raise ContractViolation(f"shape {self.shape} does not cover {n} elements")
        if self.spikes.size and self.spikes.max() > 1:
            raise ContractViolation("spike planes must be binary")
        if n and not np.isin(self.polarity, (-1, 1)).all():
            raise ContractViolation("polarity entries must be -1 or +1")
        values = _kernels.fold_planes(self.spikes, self.timestep_weights, self.polarity)
        if values.size and (values.min() < self.spec.range_lo or values.max() > self.spec.range_hi):
            raise ContractViolation("reconstructed values fall outside the quantization grid")

    @property
    def timesteps(self) -> int:
        return self.spikes.shape[0]

    @property
    def num_elements(self) -> int:
        return self.spikes.shape[1]

    def events(self):
        """Read-only event view: yields (timestep, fired element indices)."""
        for t in range(self.timesteps):
            yield t, np.flatnonzero(self.spikes[t])


def _flat_values(q: QuantizedTensor) -> np.ndarray:
    values = np.ascontiguousarray(q.values.reshape(-1), dtype=np.int64)
    bad = np.flatnonzero((values < q.spec.range_lo) | (values > q.spec.range_hi))
    if bad.size:
        i = int(bad[0])
        raise ContractViolation(
            f"value {int(values[i])} at flat index {i} outside "
            f"[{q.spec.range_lo}, {q.spec.range_hi}]"
        )
    return values


def encode_unary(q: QuantizedTensor) -> SpikeTrain:
    """Unfold a non-polar tensor: value k fires at timesteps 1..k."""
    if q.spec.mode != NONPOLAR:
        raise ContractViolation("the unary codec requires a non-polar tensor")
    values = _flat_values(q)
    t = q.spec.timesteps(UNARY)
    planes = _kernels.unfold_unary(values, t)
    return SpikeTrain(
        spikes=planes,
        polarity=np.ones(values.shape[0], dtype=np.int8),
        timestep_weights=np.ones(t, dtype=np.int64),
        scale=q.scale,
        spec=q.spec,
        codec_kind=UNARY,
        shape=q.values.shape,
    )


def encode_binary(q: QuantizedTensor) -> SpikeTrain:
    """Unfold into binary-weighted planes; sign goes to polarity (+1 for zero)."""
    values = _flat_values(q)
    t = q.spec.timesteps(BINARY)
    if q.spec.mode == POLAR:
        polarity = np.where(values < 0, -1, 1).astype(np.int8)
        magnitudes = np.abs(values)
    else:
        polarity = np.ones(values.shape[0], dtype=np.int8)
        magnitudes = values
    planes = _kernels.unfold_binary(np.ascontiguousarray(magnitudes), t)
    return SpikeTrain(
        spikes=planes,
        polarity=polarity,
        timestep_weights=(np.int64(1) << np.arange(t, dtype=np.int64)),
        scale=q.scale,
        spec=q.spec,
        codec_kind=BINARY,
        shape=q.values.shape,
    )


def encode(q: QuantizedTensor, codec_kind: str) -> SpikeTrain:
    if codec_kind == UNARY:
        return encode_unary(q)
    if codec_kind == BINARY:
        return encode_binary(q)
    raise ContractViolation(f"unknown codec kind: {codec_kind!r}")


def decode(s: SpikeTrain) -> QuantizedTensor:
    """Per-element weighted polarity sum; exact inverse of both encoders."""
    values = _kernels.fold_planes(s.spikes, s.timestep_weights, s.polarity)
    return QuantizedTensor(values.reshape(s.shape), s.scale, s.spec)


def compression_ratio(spec: QuantSpec, codec_kind: str) -> float:
    """(L - 1) / T, the timestep saving relative to the unary reference."""
    return (spec.levels - 1) / spec.timesteps(codec_kind)


def spike_count(s: SpikeTrain) -> int:
    return int(s.spikes.sum(dtype=np.int64))


def firing_rate(s: SpikeTrain) -> float:
    """Fraction of (timestep, element) slots carrying a spike."""
    slots = s.timesteps * s.num_elements
    return spike_count(s) / slots if slots else 0.0


def aggregate_firing_rate(trains, weighting: str = "token") -> float:
    """Combine rates across trains.

    ``token`` weights each train by its element count; ``plane`` pools
    all (timestep, element) slots, so longer trains weigh more.
    """
    trains = list(trains)
    if not trains:
        raise ContractViolation("no trains to aggregate")
    if weighting == "token":
        total = sum(t.num_elements for t in trains)
        if total == 0:
            return 0.0
        return sum(firing_rate(t) * t.num_elements for t in trains) / total
    if weighting == "plane":
        slots = sum(t.timesteps * t.num_elements for t in trains)
        if slots == 0:
            return 0.0
        return sum(spike_count(t) for t in trains) / slots
    raise ContractViolation(f"unknown weighting: {weighting!r}")


def spec_for_timesteps(codec_kind: str, mode: str, timesteps: int) -> QuantSpec:
    """Invert the T derivation: which grid does a codec carry in T steps."""
    if codec_kind == UNARY:
        if mode != NONPOLAR:
            raise ContractViolation("the unary codec carries non-polar grids only")
        bits = (timesteps + 1).bit_length() - 1
        if (1 << bits) != timesteps + 1 or bits < 2:
            raise ContractViolation(
                f"unary codec needs T = 2**A - 1 with A >= 2; T={timesteps} is not"
            )
        return QuantSpec(bits, NONPOLAR)
    if codec_kind == BINARY:
        bits = timesteps + 1 if mode == POLAR else timesteps
        if bits < 2:
            raise ContractViolation(f"T={timesteps} implies bit width {bits} < 2")
        return QuantSpec(bits, mode)
    raise ContractViolation(f"unknown codec kind: {codec_kind!r}")


def write_train(path, s: SpikeTrain) -> None:
    """Serialize a train: text header, polarity bytes, packed bit planes.

    Header fields: codec, mode, bits, T, shape (comma-joined dims) and the
    scale in C99 hex-float form so the bytes are stable across runs.
    Planes are packed per timestep, little-endian bit order, each row
    padded to a whole byte.
    """
    shape_token = ",".join(str(d) for d in s.shape)
    header = (
        f"{_MAGIC} codec={s.codec_kind} mode={s.spec.mode} bits={s.spec.bit_width} "
        f"T={s.timesteps} shape={shape_token} scale={float(s.scale).hex()}\n"
    )
    packed = np.packbits(s.spikes, axis=1, bitorder="little")
    with open(path, "wb") as fh:
        fh.write(header.encode("ascii"))
        fh.write(s.polarity.tobytes())
        fh.write(packed.tobytes())


def read_train(path) -> SpikeTrain:
    with open(path, "rb") as fh:
        header = fh.readline().decode("ascii").rstrip("\n")
        payload = fh.read()
    fields = header.split(" ")
    if " ".join(fields[:2]) != _MAGIC:
        raise ContractViolation(f"not a spike train file: {header[:40]!r}")
    kv = dict(item.split("=", 1) for item in fields[2:])
    codec_kind = kv["codec"]
    spec = QuantSpec(int(kv["bits"]), kv["mode"])
    t = int(kv["T"])
    shape = tuple(int(d) for d in kv["shape"].split(",") if d != "")
    scale = float.fromhex(kv["scale"])
    n = int(np.prod(shape, dtype=np.int64)) if shape else 0
    buf = io.BytesIO(payload)
    polarity = np.frombuffer(buf.read(n), dtype=np.int8).copy()
    row_bytes = (n + 7) // 8
    packed = np.frombuffer(buf.read(t * row_bytes), dtype=np.uint8).reshape(t, row_bytes)
    planes = np.unpackbits(packed, axis=1, count=n, bitorder="little")
    if codec_kind == UNARY:
        weights = np.ones(t, dtype=np.int64)
    else:
        weights = np.int64(1) << np.arange(t, dtype=np.int64)
    return SpikeTrain(planes, polarity, weights, scale, spec, codec_kind, shape)
