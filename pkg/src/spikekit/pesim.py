"""Cycle-level model of a spike-driven dot-product PE and its array.

One PE takes k signed integer activations as sign-magnitude spike
components (one binary plane per magnitude bit plus a polarity plane) and
k integer weights. Each magnitude plane AND-gates its weights, a sign
adjuster flips gated terms to -w where the polarity is negative, an adder
tree reduces each plane, and a shift-and-add stage scales plane t by
2**t before the final sum. No multipliers anywhere; the result equals
the signed dot product exactly.

The array is a rows x cols grid of such PEs fed by broadcast: per cycle
one operand group is broadcast along each array dimension (2 groups per
cycle), every PE consumes one k-lane chunk, and an output tile finishes
after ceil(K/k) chunk cycles. All magnitude planes of a PE evaluate
combinationally in a single cycle (depth 1); gated additions are counted
for energy-style reporting but never shorten cycles, since the datapath
is spatially parallel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import ContractViolation


@dataclass(frozen=True)
class PEConfig:
    levels: int = 3
    lanes: int = 32
    weight_bits: int = 4

    def __post_init__(self):
        if self.levels < 1:
            raise ContractViolation("levels must be >= 1")
        if self.lanes < 1 or (self.lanes & (self.lanes - 1)) != 0:
            raise ContractViolation(f"lanes must be a power of two, got {self.lanes}")
        if self.weight_bits < 2:
            raise ContractViolation("weight_bits must be >= 2")

    @property
    def max_magnitude(self) -> int:
        return (1 << self.levels) - 1

    @property
    def max_weight(self) -> int:
        return (1 << (self.weight_bits - 1)) - 1


@dataclass(frozen=True)
class ArrayConfig:
    rows: int = 16
    cols: int = 16
    pe: PEConfig = PEConfig()
    frequency_hz: float = 333e6
    power_w: float | None = None
    area_mm2: float | None = None

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise ContractViolation("array dimensions must be positive")
        if not self.frequency_hz > 0:
            raise ContractViolation("frequency must be positive")

    @property
    def peak_ops_per_cycle(self) -> float:
        # one MAC-equivalent per lane per PE, counted as 2 ops
        return 2.0 * self.rows * self.cols * self.pe.lanes


@dataclass
class CycleReport:
    cycles: int
    pe_evaluations: int
    operand_fetches: int
    utilization: float
    ops_per_cycle: float

    def to_dict(self) -> dict:
        return {
            "cycles": self.cycles,
            "pe_evaluations": self.pe_evaluations,
            "operand_fetches": self.operand_fetches,
            "utilization": self.utilization,
            "ops_per_cycle": self.ops_per_cycle,
        }


@dataclass
class PeakMetrics:
    tops: float
    tops_per_watt: float | None
    tops_per_mm2: float | None


def smc(v: int, width: int) -> tuple:
    """Two's complement to (sign bit, magnitude); the minimum level of the
    width is unreachable in sign-magnitude form and rejected."""
    v = int(v)
    limit = (1 << (width - 1)) - 1
    if v == -limit - 1:
        raise ContractViolation(
            f"{v} is the dropped minimum of a {width}-bit grid; its magnitude "
            f"does not fit in {width - 1} bits"
        )
    if not -limit <= v <= limit:
        raise ContractViolation(f"{v} is not representable in {width} bits")
    return (1 if v < 0 else 0), abs(v)


def magnitude_bits(magnitude: int, levels: int) -> list:
    return [(magnitude >> t) & 1 for t in range(levels)]


def spike_components(values, levels: int):
    """Vector SMC: (planes uint8 (levels, ...), polarity int8), plane t
    holding magnitude bit t of each element."""
    values = np.asarray(values, dtype=np.int64)
    top = (1 << levels) - 1
    bad = np.flatnonzero(np.abs(values) > top)
    if bad.size:
        i = int(bad[0])
        raise ContractViolation(
            f"|{int(values.flat[i])}| at flat index {i} exceeds the {levels}-level "
            f"magnitude limit {top}"
        )
    polarity = np.where(values < 0, -1, 1).astype(np.int8)
    mags = np.abs(values)
    planes = np.stack([((mags >> t) & 1).astype(np.uint8) for t in range(levels)])
    return planes, polarity


def pe_dot(planes, polarity, weights, config: PEConfig) -> int:
    """One PE evaluation over k lanes; exact signed dot product."""
    planes = np.ascontiguousarray(planes, dtype=np.uint8)
    polarity = np.ascontiguousarray(polarity, dtype=np.int8)
    weights = np.ascontiguousarray(weights, dtype=np.int64)
    if planes.ndim != 2 or planes.shape[0] != config.levels:
        raise ContractViolation(f"expected {config.levels} magnitude planes")
    lanes = planes.shape[1]
    if lanes != config.lanes or polarity.shape != (lanes,) or weights.shape != (lanes,):
        raise ContractViolation(
            f"lane mismatch: planes {planes.shape}, polarity {polarity.shape}, "
            f"weights {weights.shape}, configured lanes {config.lanes}"
        )
    if weights.size and np.abs(weights).max() > config.max_weight:
        raise ContractViolation(
            f"weights exceed the {config.weight_bits}-bit range +-{config.max_weight}"
        )
    return _kernels.pe_dot(planes, polarity, weights)


def pe_dot_int(values, weights, config: PEConfig) -> int:
    """Convenience: run SMC on raw integers, then evaluate the PE."""
    planes, polarity = spike_components(values, config.levels)
    return pe_dot(planes, polarity, weights, config)


def _tile_ranges(total: int, step: int):
    return [(start, min(start + step, total)) for start in range(0, total, step)]


def array_matmul(activations, weights, array: ArrayConfig, traversal: str = "row-major"):
    """Spike-driven integer matmul on the PE array with cycle accounting.

    activations: (M, K) signed ints within the PE magnitude range;
    weights: (K, N) signed ints within the weight range. Returns the
    exact (M, N) int64 product and a CycleReport. Cycles follow the
    one-tile-evaluation-per-cycle model:
    ceil(M/rows) * ceil(N/cols) * ceil(K/lanes).
    """
    s = np.ascontiguousarray(activations, dtype=np.int64)
    w = np.ascontiguousarray(weights, dtype=np.int64)
    if s.ndim != 2 or w.ndim != 2:
        raise ContractViolation("activations and weights must be 2-D")
    m, k = s.shape
    k2, n = w.shape
    if k != k2:
        raise ContractViolation(f"inner dimensions differ: {k} vs {k2}")
    if m < 1 or n < 1 or k < 1:
        raise ContractViolation("matrix dimensions must be positive")
    if w.size and np.abs(w).max() > array.pe.max_weight:
        raise ContractViolation(
            f"weights exceed the {array.pe.weight_bits}-bit range +-{array.pe.max_weight}"
        )
    planes, polarity = spike_components(s, array.pe.levels)

    lanes = array.pe.lanes
    row_tiles = _tile_ranges(m, array.rows)
    col_tiles = _tile_ranges(n, array.cols)
    chunks = _tile_ranges(k, lanes)
    if traversal == "row-major":
        order = [(r, c, ch) for r in row_tiles for c in col_tiles for ch in chunks]
    elif traversal == "chunk-major":
        order = [(r, c, ch) for ch in chunks for c in col_tiles for r in row_tiles]
    else:
        raise ContractViolation(f"unknown traversal: {traversal!r}")

    out = np.zeros((m, n), dtype=np.int64)
    cycles = 0
    for (r0, r1), (c0, c1), (k0, k1) in order:
        out[r0:r1, c0:c1] += _kernels.spike_gemm(
            np.ascontiguousarray(planes[:, r0:r1, k0:k1]),
            np.ascontiguousarray(polarity[r0:r1, k0:k1]),
            np.ascontiguousarray(w[k0:k1, c0:c1]),
        )
        cycles += 1

    pe_evaluations = m * n * len(chunks)
    useful_ops = 2 * m * n * k
    report = CycleReport(
        cycles=cycles,
        pe_evaluations=pe_evaluations,
        operand_fetches=2 * cycles,
        utilization=useful_ops / (cycles * array.peak_ops_per_cycle),
        ops_per_cycle=useful_ops / cycles,
    )
    return out, report


def closed_form_cycles(m: int, k: int, n: int, array: ArrayConfig) -> int:
    return (
        math.ceil(m / array.rows)
        * math.ceil(n / array.cols)
        * math.ceil(k / array.pe.lanes)
    )


def peak_metrics(array: ArrayConfig) -> PeakMetrics:
    """Peak throughput with every PE busy; efficiency per watt and per mm2
    are reported only when power and area are configured."""
    ops_per_second = array.peak_ops_per_cycle * array.frequency_hz
    tops = ops_per_second / 1e12
    per_watt = tops / array.power_w if array.power_w else None
    per_mm2 = tops / array.area_mm2 if array.area_mm2 else None
    return PeakMetrics(tops=tops, tops_per_watt=per_watt, tops_per_mm2=per_mm2)
