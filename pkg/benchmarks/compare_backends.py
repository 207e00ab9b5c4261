"""Benchmark the compiled kernel extension against the NumPy fallback.

Times the hot paths (binary/unary unfolding, decode, spike-gated matmul,
PE-array GEMM) on both backends, checks they agree bit for bit, and
prints one table row per kernel. Run from the repo root:

    python3 benchmarks/compare_backends.py
    python3 benchmarks/compare_backends.py --elements 200000 --repeats 7
"""

import argparse
import time

import numpy as np

from spikekit import _kernels
from spikekit.codec import BINARY, UNARY, decode, encode
from spikekit.pesim import ArrayConfig, PEConfig, array_matmul
from spikekit.quant import NONPOLAR, POLAR, QuantizedTensor, QuantSpec
from spikekit.spikelinear import WeightMatrix, spike_matmul


def best_of(fn, repeats):
    timings = []
    for _ in range(repeats):
        start = time.perf_counter()
        result = fn()
        timings.append(time.perf_counter() - start)
    return min(timings), result


def build_workloads(elements, tokens, width, rng):
    polar = QuantSpec(4, POLAR)
    nonpolar = QuantSpec(4, NONPOLAR)
    flat = QuantizedTensor(rng.integers(-7, 8, size=elements), 1.0, polar)
    unary_in = QuantizedTensor(rng.integers(0, 16, size=elements), 1.0, nonpolar)
    token_q = QuantizedTensor(rng.integers(-7, 8, size=(tokens, width)), 1.0, polar)
    token_train = encode(token_q, BINARY)
    weights = WeightMatrix.from_integers(rng.integers(-9, 10, size=(width, width)))
    flat_train = encode(flat, BINARY)
    gemm_a = rng.integers(-7, 8, size=(128, 256))
    gemm_w = rng.integers(-100, 101, size=(256, 64))
    array = ArrayConfig(rows=16, cols=16, pe=PEConfig(levels=3, lanes=32, weight_bits=8))
    return {
        "encode binary": lambda: encode(flat, BINARY).spikes,
        "encode unary": lambda: encode(unary_in, UNARY).spikes,
        "decode binary": lambda: decode(flat_train).values,
        "spike matmul": lambda: spike_matmul(weights, token_train),
        "array gemm": lambda: array_matmul(gemm_a, gemm_w, array)[0],
    }


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--elements", type=int, default=100_000,
                        help="flat tensor size for the codec kernels")
    parser.add_argument("--tokens", type=int, default=256)
    parser.add_argument("--width", type=int, default=128)
    parser.add_argument("--repeats", type=int, default=5)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    backends = _kernels.available_backends()
    if len(backends) < 2:
        print("compiled backend not built; only the python backend is available")
    rng = np.random.default_rng(args.seed)
    workloads = build_workloads(args.elements, args.tokens, args.width, rng)

    print(f"{'kernel':<16}" + "".join(f"{name:>14}" for name in backends)
          + (f"{'speedup':>10}" if len(backends) == 2 else ""))
    for name, fn in workloads.items():
        timings = {}
        outputs = {}
        for backend in backends:
            with _kernels.use_backend(backend):
                timings[backend], outputs[backend] = best_of(fn, args.repeats)
        if len(backends) == 2:
            a, b = (outputs[n] for n in backends)
            assert np.array_equal(np.asarray(a), np.asarray(b)), f"{name}: backends disagree"
        row = f"{name:<16}" + "".join(f"{timings[n] * 1e3:>12.2f}ms" for n in backends)
        if len(backends) == 2:
            row += f"{timings['python'] / timings['compiled']:>9.1f}x"
        print(row)


if __name__ == "__main__":
    main()
