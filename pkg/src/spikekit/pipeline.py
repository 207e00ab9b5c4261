"""Toy multimodal residual pipeline exercising the full stack.

Each layer applies one linear map F to the token matrix, quantizes F's
output per modality (the membrane potential of the layer's spiking
interaction), reconstructs it through the selected path, and adds the
residual. Three paths share every upstream float operation:

* ``fp``: no quantization, the full-precision reference.
* ``dense``: dense_reference against the identity weight matrix, i.e.
  the plain quantize-dequantize network.
* ``spike``: encode to a spike train and reconstruct with spike_matmul
  against the identity weight matrix, exercising the gated-accumulation
  kernels and producing firing statistics.

Because the spike reconstruction is exact integer arithmetic followed by
the same single real scaling as the dense path, spike and dense runs are
bit-identical end to end for any seed, codec and allocation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .allocation import MODALITIES, TEXT, VISUAL, TimestepAllocation
from .codec import (UNARY, SpikeTrain, encode, firing_rate,
                    spec_for_timesteps, spike_count)
from .errors import ContractViolation
from .quant import NONPOLAR, quantize, scale_for
from .spikelinear import WeightMatrix, accumulation_count, dense_reference, spike_matmul

PATH_FP = "fp"
PATH_DENSE = "dense"
PATH_SPIKE = "spike"
PATHS = (PATH_FP, PATH_DENSE, PATH_SPIKE)


@dataclass
class TokenStream:
    """Token-major activations with one modality tag per token."""

    tokens: np.ndarray
    modality: np.ndarray

    def __post_init__(self):
        self.tokens = np.ascontiguousarray(self.tokens, dtype=np.float64)
        if self.tokens.ndim != 2:
            raise ContractViolation("tokens must be a (count, width) matrix")
        self.modality = np.asarray(self.modality, dtype="<U6")
        if self.modality.shape != (self.tokens.shape[0],):
            raise ContractViolation("one modality tag per token is required")
        unknown = set(self.modality.tolist()) - set(MODALITIES)
        if unknown:
            raise ContractViolation(f"unknown modality tags: {sorted(unknown)}")

    @property
    def n_tokens(self) -> int:
        return self.tokens.shape[0]

    @property
    def width(self) -> int:
        return self.tokens.shape[1]

    def indices(self, modality: str) -> np.ndarray:
        return np.flatnonzero(self.modality == modality)

    def count(self, modality: str) -> int:
        return int((self.modality == modality).sum())

    def copy(self) -> "TokenStream":
        return TokenStream(self.tokens.copy(), self.modality.copy())


def make_token_stream(n_visual: int, n_text: int, width: int, seed: int,
                      layout: str = "interleaved") -> TokenStream:
    """Seeded random stream; tags interleave by default so split/concat
    order preservation is actually exercised."""
    rng = np.random.default_rng(seed)
    tokens = rng.standard_normal((n_visual + n_text, width))
    if layout == "blocked":
        tags = [VISUAL] * n_visual + [TEXT] * n_text
    elif layout == "interleaved":
        tags = []
        v = t = 0
        while v < n_visual or t < n_text:
            if v < n_visual:
                tags.append(VISUAL)
                v += 1
            if t < n_text:
                tags.append(TEXT)
                t += 1
    else:
        raise ContractViolation(f"unknown layout: {layout!r}")
    return TokenStream(tokens, np.array(tags))


@dataclass(frozen=True)
class ToyModelConfig:
    """Desk-scale residual stack: square seeded weights, one codec, one
    allocation. Bit widths per (layer, modality) follow from the codec
    kind and the allocated timesteps."""

    layers: int
    width: int
    seed: int
    codec_kind: str
    mode: str
    allocation: TimestepAllocation | None = None

    def __post_init__(self):
        if self.layers < 1 or self.width < 1:
            raise ContractViolation("layers and width must be >= 1")
        if self.codec_kind == UNARY and self.mode != NONPOLAR:
            raise ContractViolation("the unary codec requires non-polar mode")


def init_weights(config: ToyModelConfig) -> list:
    """Seeded uniform [-1, 1] scaled by 1/sqrt(width); keeps activations O(1)."""
    rng = np.random.default_rng(config.seed)
    scale = 1.0 / np.sqrt(config.width)
    return [
        WeightMatrix(rng.uniform(-1.0, 1.0, size=(config.width, config.width)) * scale)
        for _ in range(config.layers)
    ]


@dataclass
class LayerStats:
    """Per (layer, modality) metrics from one run."""

    layer: int
    modality: str
    tokens: int
    timesteps: int
    bit_width: int
    firing_rate: float | None = None
    spikes: int | None = None
    accumulations: int | None = None
    train: SpikeTrain | None = None


_identity_cache: dict = {}


def _identity(width: int) -> WeightMatrix:
    if width not in _identity_cache:
        _identity_cache[width] = WeightMatrix.identity(width)
    return _identity_cache[width]


def run_layer(stream: TokenStream, weight: WeightMatrix, allocation: TimestepAllocation,
              layer_index: int, codec_kind: str, mode: str, path: str = PATH_SPIKE,
              keep_trains: bool = False):
    """One residual update; returns (next stream, per-modality stats)."""
    if path not in PATHS:
        raise ContractViolation(f"unknown path: {path!r}")
    f = stream.tokens @ weight.values.T
    out = stream.tokens.copy()
    stats = []
    for m in MODALITIES:
        idx = stream.indices(m)
        if idx.size == 0:
            continue
        u = f[idx]
        if path == PATH_FP:
            out[idx] = stream.tokens[idx] + u
            continue
        if allocation is None:
            raise ContractViolation("quantized paths need a timestep allocation")
        t = allocation.timestep(layer_index, m)
        spec = spec_for_timesteps(codec_kind, mode, t)
        q = quantize(u, scale_for(u, spec), spec)
        entry = LayerStats(layer=layer_index, modality=m, tokens=int(idx.size),
                           timesteps=t, bit_width=spec.bit_width)
        if path == PATH_DENSE:
            recon = dense_reference(_identity(stream.width), q)
        else:
            train = encode(q, codec_kind)
            recon = spike_matmul(_identity(stream.width), train)
            entry.firing_rate = firing_rate(train)
            entry.spikes = spike_count(train)
            entry.accumulations = accumulation_count(_identity(stream.width), train)
            if keep_trains:
                entry.train = train
        out[idx] = stream.tokens[idx] + recon
        stats.append(entry)
    return TokenStream(out, stream.modality.copy()), stats


def run_model(config: ToyModelConfig, stream: TokenStream, path: str = PATH_SPIKE,
              keep_trains: bool = False):
    """Run all layers; returns (output stream, flat list of LayerStats)."""
    if stream.width != config.width:
        raise ContractViolation(
            f"input width {stream.width} does not match the model width {config.width}"
        )
    weights = init_weights(config)
    stats: list = []
    current = stream
    for layer_index, weight in enumerate(weights):
        current, layer_stats = run_layer(
            current, weight, config.allocation, layer_index,
            config.codec_kind, config.mode, path, keep_trains,
        )
        stats.extend(layer_stats)
    return current, stats


def capture_activations(config: ToyModelConfig, stream: TokenStream):
    """Full-precision (before, after) snapshots per layer, for profiling."""
    weights = init_weights(config)
    snapshots = []
    current = stream
    for layer_index, weight in enumerate(weights):
        before = current.copy()
        current, _ = run_layer(
            current, weight, config.allocation, layer_index,
            config.codec_kind, config.mode, PATH_FP,
        )
        snapshots.append((before, current.copy()))
    return snapshots
