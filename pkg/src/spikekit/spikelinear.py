"""Spike-driven linear layers with a dense integer-matmul oracle.

The spike path accumulates weight columns gated by spikes; the dense path
multiplies the decoded integers directly. For integer-valued weights both
paths run in exact int64 arithmetic and apply one identical final real
scaling, so their float outputs are bit-equal.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .codec import SpikeTrain, spike_count
from .errors import ContractViolation
from .quant import QuantizedTensor

_INT_EXACT_LIMIT = float(1 << 53)


@dataclass
class WeightMatrix:
    """Real (output x input) weights, optionally backed by an integer grid.

    When every entry is integral (or an explicit integer form is given),
    kernels run on ``int_values`` and multiply by ``weight_scale`` once at
    the end; otherwise they fall back to float accumulation.
    """

    values: np.ndarray
    int_values: np.ndarray | None = None
    weight_scale: float = 1.0

    def __post_init__(self):
        self.values = np.ascontiguousarray(self.values, dtype=np.float64)
        if self.values.ndim != 2:
            raise ContractViolation("weights must be a 2-D matrix")
        if not np.isfinite(self.values).all():
            raise ContractViolation("weights must be finite")
        if self.int_values is not None:
            self.int_values = np.ascontiguousarray(self.int_values, dtype=np.int64)
            if self.int_values.shape != self.values.shape:
                raise ContractViolation("integer form must match the weight shape")
        elif (
            np.abs(self.values).max(initial=0.0) < _INT_EXACT_LIMIT
            and (self.values == np.trunc(self.values)).all()
        ):
            self.int_values = self.values.astype(np.int64)
            self.weight_scale = 1.0
        self.weight_scale = float(self.weight_scale)

    @classmethod
    def from_integers(cls, int_values, weight_scale: float = 1.0) -> "WeightMatrix":
        int_values = np.ascontiguousarray(int_values, dtype=np.int64)
        return cls(weight_scale * int_values.astype(np.float64), int_values, weight_scale)

    @classmethod
    def identity(cls, n: int) -> "WeightMatrix":
        return cls.from_integers(np.eye(n, dtype=np.int64))

    @property
    def is_integer(self) -> bool:
        return self.int_values is not None

    @property
    def out_features(self) -> int:
        return self.values.shape[0]

    @property
    def in_features(self) -> int:
        return self.values.shape[1]


def _batched_planes(w: WeightMatrix, s: SpikeTrain):
    """View the train as (T, batch, in_features) against the weight width."""
    d = w.in_features
    if not s.shape or s.shape[-1] != d:
        raise ContractViolation(
            f"train shape {s.shape} does not end in the weight input width {d}"
        )
    batch = s.num_elements // d
    planes = s.spikes.reshape(s.timesteps, batch, d)
    polarity = s.polarity.reshape(batch, d)
    return planes, polarity, batch


def _final_shape(s: SpikeTrain, m: int):
    return s.shape[:-1] + (m,)


def spike_matmul(w: WeightMatrix, s: SpikeTrain) -> np.ndarray:
    """Gated accumulation of weight columns over the train's events.

    Columns with no spike at a timestep are bypassed; each timestep's
    partial sum is scaled by that timestep's weight, and the single real
    scaling happens after all integer accumulation.
    """
    planes, polarity, batch = _batched_planes(w, s)
    if w.is_integer:
        wt = np.ascontiguousarray(w.int_values.T)
        acc = _kernels.gated_accumulate(
            wt,
            np.ascontiguousarray(planes),
            np.ascontiguousarray(polarity),
            s.timestep_weights,
        )
        out = (s.scale * w.weight_scale) * acc.astype(np.float64)
    else:
        acc = np.zeros((batch, w.out_features), dtype=np.float64)
        pol = polarity.astype(np.float64)
        for t in range(s.timesteps):
            gated = planes[t].astype(np.float64) * pol
            acc += float(s.timestep_weights[t]) * (gated @ w.values.T)
        out = s.scale * acc
    return out.reshape(_final_shape(s, w.out_features))


def dense_reference(w: WeightMatrix, q: QuantizedTensor) -> np.ndarray:
    """Plain matrix product on the decoded integers times the scale."""
    d = w.in_features
    if not q.shape or q.shape[-1] != d:
        raise ContractViolation(
            f"tensor shape {q.shape} does not end in the weight input width {d}"
        )
    flat = q.values.reshape(-1, d)
    if w.is_integer:
        acc = flat @ w.int_values.T
        out = (q.scale * w.weight_scale) * acc.astype(np.float64)
    else:
        out = q.scale * (flat.astype(np.float64) @ w.values.T)
    return out.reshape(q.shape[:-1] + (w.out_features,))


def accumulation_count(w: WeightMatrix, s: SpikeTrain) -> int:
    """Weight-column accumulations actually executed: fired slots x rows."""
    _batched_planes(w, s)
    return spike_count(s) * w.out_features
