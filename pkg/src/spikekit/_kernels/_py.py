"""Pure NumPy kernel implementations.

Every function mirrors the compiled extension in ``_core`` and produces
bit-identical int64 results. The compiled backend walks spike events one
at a time; this backend expresses the same exact integer arithmetic with
masked array operations, so zero spikes contribute nothing either way.
"""

import numpy as np


def unfold_unary(values, timesteps):
    """Integer k -> k leading unit spikes over `timesteps` planes."""
    steps = np.arange(timesteps, dtype=np.int64)
    return (steps[:, None] < values[None, :]).astype(np.uint8)


def unfold_binary(magnitudes, timesteps):
    """Greedy residual extraction from the heaviest plane downwards."""
    n = magnitudes.shape[0]
    planes = np.zeros((timesteps, n), dtype=np.uint8)
    residual = magnitudes.astype(np.int64, copy=True)
    for t in range(timesteps, 0, -1):
        weight = np.int64(1) << (t - 1)
        fired = residual >= weight
        planes[t - 1] = fired
        residual -= weight * fired
    return planes


def fold_planes(planes, weights, polarity):
    """Weighted plane sum times polarity; exact inverse of the encoders."""
    acc = weights[:, None] * planes.astype(np.int64)
    return acc.sum(axis=0) * polarity.astype(np.int64)


def gated_accumulate(wt, planes, polarity, weights):
    """Spike-gated accumulation of weight rows.

    wt: int64 (D, M) transposed weight matrix; planes: uint8 (T, B, D);
    polarity: int8 (B, D); weights: int64 (T,). Returns int64 (B, M).
    The per-timestep partial sum is formed first and then scaled by the
    timestep weight, matching the shift-and-add placement of the compiled
    kernel.
    """
    batch = planes.shape[1]
    acc = np.zeros((batch, wt.shape[1]), dtype=np.int64)
    pol = polarity.astype(np.int64)
    for t in range(planes.shape[0]):
        gated = planes[t].astype(np.int64) * pol
        acc += weights[t] * (gated @ wt)
    return acc


def pe_dot(planes, polarity, w):
    """Single k-lane dot product: gate, sign-adjust, reduce, shift-add."""
    total = np.int64(0)
    pol = polarity.astype(np.int64)
    for t in range(planes.shape[0]):
        partial = (planes[t].astype(np.int64) * pol) @ w
        total += (np.int64(1) << t) * partial
    return int(total)


def spike_gemm(planes, polarity, w):
    """Batched PE evaluation over one tile.

    planes: uint8 (T, M, K); polarity: int8 (M, K); w: int64 (K, N).
    Returns int64 (M, N) equal to the signed integer matmul.
    """
    out = np.zeros((planes.shape[1], w.shape[1]), dtype=np.int64)
    pol = polarity.astype(np.int64)
    for t in range(planes.shape[0]):
        gated = planes[t].astype(np.int64) * pol
        out += (np.int64(1) << t) * (gated @ w)
    return out
