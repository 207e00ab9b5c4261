"""Exact-equivalence suites: spike path versus dense integer oracle.

Each suite sweeps a codec exhaustively over its integer grid and over
random quantized tensors, checking that decode(encode(q)) == q and that
spike_matmul equals dense_reference byte for byte. A tamper hook flips
one spike bit so the detection path itself stays testable.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .codec import BINARY, UNARY, decode, encode
from .quant import NONPOLAR, POLAR, QuantizedTensor, QuantSpec, quantize, scale_for
from .spikelinear import WeightMatrix, dense_reference, spike_matmul


@dataclass
class SuiteResult:
    name: str
    ok: bool
    cases: int
    failure: dict | None = None


def _random_weights(rng, rows, cols):
    return WeightMatrix.from_integers(rng.integers(-9, 10, size=(rows, cols)))


def _check_case(codec_kind, q, w, tamper=False):
    """Returns None on success, else a failure record."""
    train = encode(q, codec_kind)
    if tamper and train.num_elements:
        train.spikes[0, 0] ^= 1
    back = decode(train)
    if not np.array_equal(back.values, q.values):
        element = int(np.flatnonzero(back.values.reshape(-1) != q.values.reshape(-1))[0])
        return {
            "check": "roundtrip",
            "codec": codec_kind,
            "mode": q.spec.mode,
            "bit_width": q.spec.bit_width,
            "element": element,
            "expected": int(q.values.reshape(-1)[element]),
            "decoded": int(back.values.reshape(-1)[element]),
        }
    spiked = spike_matmul(w, train)
    dense = dense_reference(w, q)
    if spiked.tobytes() != dense.tobytes():
        diff = np.flatnonzero(spiked.reshape(-1) != dense.reshape(-1))
        element = int(diff[0]) if diff.size else -1
        return {
            "check": "matmul",
            "codec": codec_kind,
            "mode": q.spec.mode,
            "bit_width": q.spec.bit_width,
            "element": element,
            "spike_value": float(spiked.reshape(-1)[element]),
            "dense_value": float(dense.reshape(-1)[element]),
        }
    return None


def _sweep(name, codec_kind, mode, bit_widths, trials, seed, tamper):
    rng = np.random.default_rng(seed)
    cases = 0
    tamper_armed = tamper
    for bits in bit_widths:
        spec = QuantSpec(bits, mode)
        grid = np.arange(spec.range_lo, spec.range_hi + 1, dtype=np.int64)
        q = QuantizedTensor(grid, 1.0, spec)
        w = _random_weights(rng, 4, grid.size)
        failure = _check_case(codec_kind, q, w, tamper=tamper_armed)
        tamper_armed = False
        cases += 1
        if failure:
            return SuiteResult(name, False, cases, failure)
    for _ in range(trials):
        bits = int(rng.choice(list(bit_widths)))
        spec = QuantSpec(bits, mode)
        shape = (int(rng.integers(1, 5)), int(rng.integers(1, 17)))
        u = rng.normal(0.0, 3.0, size=shape)
        q = quantize(u, scale_for(u, spec), spec)
        w = _random_weights(rng, int(rng.integers(1, 9)), shape[1])
        failure = _check_case(codec_kind, q, w)
        cases += 1
        if failure:
            return SuiteResult(name, False, cases, failure)
    return SuiteResult(name, True, cases, None)


def unary_suite(seed: int, bit_widths=(2, 3, 4), trials: int = 1000,
                tamper: bool = False) -> SuiteResult:
    """Unary unfolding equals the dense quantized reference exactly."""
    return _sweep("unary-nonpolar", UNARY, NONPOLAR, bit_widths, trials, seed, tamper)


def binary_polar_suite(seed: int, bit_widths=tuple(range(2, 9)), trials: int = 200,
                       tamper: bool = False) -> SuiteResult:
    """Polar binary coding is the identity on the symmetric grid."""
    return _sweep("binary-polar", BINARY, POLAR, bit_widths, trials, seed, tamper)


def binary_nonpolar_suite(seed: int, bit_widths=tuple(range(2, 9)), trials: int = 200,
                          tamper: bool = False) -> SuiteResult:
    """Non-polar binary coding is the identity on [0, L-1]."""
    return _sweep("binary-nonpolar", BINARY, NONPOLAR, bit_widths, trials, seed, tamper)


def run_all(seed: int, tamper: bool = False) -> list:
    return [
        unary_suite(seed, tamper=tamper),
        binary_polar_suite(seed + 1, tamper=tamper),
        binary_nonpolar_suite(seed + 2, tamper=tamper),
    ]
