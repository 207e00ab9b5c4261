"""Scalar quantization of real tensors onto bounded integer grids.

Two grid families: polar grids are symmetric with the unreachable minimum
level dropped, [-L/2+1, L/2-1]; non-polar grids are the non-negative range
[0, L-1]. Scales are per tensor. Rounding is half away from zero.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ContractViolation

POLAR = "polar"
NONPOLAR = "nonpolar"
MODES = (POLAR, NONPOLAR)

# codec kinds accepted by QuantSpec.timesteps(); defined with the codecs
UNARY = "unary"
BINARY = "binary"


@dataclass(frozen=True)
class QuantSpec:
    """Bit width plus polarity mode; everything else is derived."""

    bit_width: int
    mode: str = POLAR

    def __post_init__(self):
        if not isinstance(self.bit_width, int) or self.bit_width < 2:
            raise ContractViolation(f"bit_width must be an integer >= 2, got {self.bit_width!r}")
        if self.mode not in MODES:
            raise ContractViolation(f"mode must be one of {MODES}, got {self.mode!r}")

    @property
    def levels(self) -> int:
        return 1 << self.bit_width

    @property
    def range_lo(self) -> int:
        return -(self.levels // 2) + 1 if self.mode == POLAR else 0

    @property
    def range_hi(self) -> int:
        return self.levels // 2 - 1 if self.mode == POLAR else self.levels - 1

    def timesteps(self, codec_kind: str) -> int:
        """Timestep count a codec needs to carry this grid."""
        if codec_kind == UNARY:
            if self.mode != NONPOLAR:
                raise ContractViolation("the unary codec carries non-polar grids only")
            return self.levels - 1
        if codec_kind == BINARY:
            return self.bit_width - 1 if self.mode == POLAR else self.bit_width
        raise ContractViolation(f"unknown codec kind: {codec_kind!r}")


@dataclass
class QuantizedTensor:
    """Integer tensor plus the per-tensor scale that maps it back to reals."""

    values: np.ndarray
    scale: float
    spec: QuantSpec

    def __post_init__(self):
        self.values = np.asarray(self.values)
        if not np.issubdtype(self.values.dtype, np.integer):
            raise ContractViolation("values must be an integer array")
        self.values = self.values.astype(np.int64)
        self.scale = float(self.scale)
        if not self.scale > 0:
            raise ContractViolation(f"scale must be positive, got {self.scale}")
        bad = np.flatnonzero((self.values < self.spec.range_lo) | (self.values > self.spec.range_hi))
        if bad.size:
            i = int(bad[0])
            raise ContractViolation(
                f"value {int(self.values.flat[i])} at flat index {i} outside "
                f"[{self.spec.range_lo}, {self.spec.range_hi}]"
            )

    @property
    def shape(self) -> tuple:
        return self.values.shape


def _check_finite(u: np.ndarray):
    bad = np.flatnonzero(~np.isfinite(u))
    if bad.size:
        i = int(bad[0])
        raise ContractViolation(f"non-finite input value {u.flat[i]!r} at flat index {i}")


def scale_symmetric(u, spec: QuantSpec) -> float:
    """max|U| / (L/2 - 1); falls back to 1.0 for an all-zero tensor."""
    if spec.mode != POLAR:
        raise ContractViolation("scale_symmetric requires a polar spec")
    u = np.asarray(u, dtype=np.float64)
    _check_finite(u)
    peak = float(np.max(np.abs(u))) if u.size else 0.0
    if peak == 0.0:
        return 1.0
    return peak / (spec.levels // 2 - 1)


def scale_nonneg(u, spec: QuantSpec) -> float:
    """max|U| / (L - 1); falls back to 1.0 for an all-zero tensor."""
    if spec.mode != NONPOLAR:
        raise ContractViolation("scale_nonneg requires a non-polar spec")
    u = np.asarray(u, dtype=np.float64)
    _check_finite(u)
    peak = float(np.max(np.abs(u))) if u.size else 0.0
    if peak == 0.0:
        return 1.0
    return peak / (spec.levels - 1)


def scale_for(u, spec: QuantSpec) -> float:
    return scale_symmetric(u, spec) if spec.mode == POLAR else scale_nonneg(u, spec)


def _round_half_away(x: np.ndarray) -> np.ndarray:
    return np.trunc(x + np.copysign(0.5, x))


def quantize(u, scale: float, spec: QuantSpec) -> QuantizedTensor:
    """clip(round(U / scale), range_lo, range_hi) with ties away from zero."""
    u = np.asarray(u, dtype=np.float64)
    _check_finite(u)
    if not scale > 0:
        raise ContractViolation(f"scale must be positive, got {scale}")
    grid = _round_half_away(u / scale)
    grid = np.clip(grid, spec.range_lo, spec.range_hi)
    return QuantizedTensor(grid.astype(np.int64), float(scale), spec)


def dequantize(q: QuantizedTensor) -> np.ndarray:
    return q.scale * q.values.astype(np.float64)
