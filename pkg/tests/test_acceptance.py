"""Acceptance suite: one test per release criterion.

Each test prints one ACCEPTANCE line on success and pins its tolerance
inline; exact means byte or integer equality, never a float tolerance.
"""

import time
from fractions import Fraction

import numpy as np
import pytest

from spikekit.allocation import (TEXT, VISUAL, DriftProfile, allocate_layers,
                                 allocate_layers_reverse, allocate_modality,
                                 allocate_uniform, drift_profile)
from spikekit.codec import (BINARY, UNARY, compression_ratio, decode, encode,
                            firing_rate, spike_count)
from spikekit.costmodel import default_scenarios, efficiency_report
from spikekit.pesim import (ArrayConfig, PEConfig, array_matmul,
                            closed_form_cycles, peak_metrics, pe_dot_int)
from spikekit.pipeline import (PATH_DENSE, PATH_SPIKE, TokenStream, ToyModelConfig,
                               capture_activations, make_token_stream, run_model)
from spikekit.quant import (NONPOLAR, POLAR, QuantizedTensor, QuantSpec, quantize,
                            scale_for)
from spikekit.spikelinear import (WeightMatrix, accumulation_count,
                                  dense_reference, spike_matmul)


def announce(number: int, text: str) -> None:
    print(f"ACCEPTANCE {number}: PASS - {text}")


def grid_tensor(spec: QuantSpec) -> QuantizedTensor:
    return QuantizedTensor(np.arange(spec.range_lo, spec.range_hi + 1), 1.0, spec)


def test_criterion_1_unary_equivalence():
    """Unary unfolding == dense quantized reference, bit-exact, < 10 s."""
    started = time.perf_counter()
    rng = np.random.default_rng(101)
    cases = 0
    for bits in (2, 3, 4):
        spec = QuantSpec(bits, NONPOLAR)
        q = grid_tensor(spec)
        assert np.array_equal(decode(encode(q, UNARY)).values, q.values)
        w = WeightMatrix.from_integers(rng.integers(-9, 10, size=(6, q.values.size)))
        assert spike_matmul(w, encode(q, UNARY)).tobytes() == dense_reference(w, q).tobytes()
        cases += 1
    for _ in range(1000):
        bits = int(rng.integers(2, 5))
        spec = QuantSpec(bits, NONPOLAR)
        shape = (int(rng.integers(1, 4)), int(rng.integers(1, 13)))
        u = np.abs(rng.normal(0.0, 2.0, size=shape))
        q = quantize(u, scale_for(u, spec), spec)
        w = WeightMatrix.from_integers(rng.integers(-9, 10, size=(4, shape[1])))
        assert spike_matmul(w, encode(q, UNARY)).tobytes() == dense_reference(w, q).tobytes()
        cases += 1
    elapsed = time.perf_counter() - started
    assert elapsed < 10.0
    announce(1, f"unary spike path == dense oracle on {cases} cases "
                f"(tolerance 0, {elapsed:.2f}s)")


def test_criterion_2_binary_equivalence():
    """Binary codec is the identity on its grid and matches the dense
    oracle exactly, polar and non-polar, A <= 8, < 30 s."""
    started = time.perf_counter()
    rng = np.random.default_rng(102)
    cases = 0
    for mode in (POLAR, NONPOLAR):
        for bits in range(2, 9):
            spec = QuantSpec(bits, mode)
            q = grid_tensor(spec)
            assert np.array_equal(decode(encode(q, BINARY)).values, q.values)
            w = WeightMatrix.from_integers(rng.integers(-9, 10, size=(5, q.values.size)))
            assert spike_matmul(w, encode(q, BINARY)).tobytes() == dense_reference(w, q).tobytes()
            cases += q.values.size
    elapsed = time.perf_counter() - started
    assert elapsed < 30.0
    announce(2, f"binary codec identity + matmul equality on {cases} grid values "
                f"(tolerance 0, {elapsed:.2f}s)")


def test_criterion_3_compression():
    """A=4 polar binary: T=3 and 5x compression; A=4 unary: T=15. Exact."""
    polar = QuantSpec(4, POLAR)
    nonpolar = QuantSpec(4, NONPOLAR)
    assert polar.timesteps(BINARY) == 3
    assert compression_ratio(polar, BINARY) == 5.0
    assert nonpolar.timesteps(UNARY) == 15
    announce(3, "T=3 with ratio 5 for 4-bit polar binary; T=15 for 4-bit unary")


def test_criterion_4_flops_reproduction():
    """Efficiency rows land within 5% of the reference figures using the
    1/64 and 1/32 bit factors and token-weighted effective timesteps."""
    targets = {
        ("rtn-unary", "255"): 17.57e12,
        ("gptq-unary", "255"): 17.57e12,
        ("quarot-unary", "7"): 0.55e12,
        ("quarot-binary", "2/3"): 0.17e12,
        ("w4a4", "n/a"): 0.55e12,
        ("quarot-unary", "15"): 1.10e12,
        ("quarot-binary", "3/4"): 0.25e12,
    }
    reports = efficiency_report(default_scenarios(base=8.78e12, n_visual=4096, n_text=50))
    checked = 0
    worst = 0.0
    for r in reports:
        key = (r.method, r.timestep_label)
        if key not in targets:
            continue
        rel = abs(r.spike_flops - targets[key]) / targets[key]
        assert rel < 0.05, f"{key}: {r.spike_flops:.4g} vs {targets[key]:.4g}"
        worst = max(worst, rel)
        checked += 1
    assert checked == len(targets)
    announce(4, f"{checked} efficiency rows within 5% (worst {worst:.2%})")


def test_criterion_5_peak_metrics():
    """16x16 array, 32 lanes, 333 MHz, 0.484 W, 76.27 mm2."""
    array = ArrayConfig(rows=16, cols=16, pe=PEConfig(levels=3, lanes=32),
                        frequency_hz=333e6, power_w=0.484, area_mm2=76.27)
    peak = peak_metrics(array)
    assert abs(peak.tops - 5.46) / 5.46 < 0.005
    assert abs(peak.tops_per_watt - 11.28) / 11.28 < 0.005
    assert abs(peak.tops_per_mm2 - 0.072) / 0.072 < 0.01
    announce(5, f"peak {peak.tops:.3f} TOPS, {peak.tops_per_watt:.2f} TOPS/W, "
                f"{peak.tops_per_mm2:.4f} TOPS/mm2 within 0.5%/0.5%/1%")


def test_criterion_6_pe_bit_exactness():
    """PE and array results equal signed integer references exactly; cycle
    counts equal the closed-form tile product. < 60 s."""
    started = time.perf_counter()
    rng = np.random.default_rng(106)

    cfg2 = PEConfig(levels=3, lanes=2, weight_bits=8)
    w2 = np.array([5, -3], dtype=np.int64)
    for a in range(-7, 8):
        for b in range(-7, 8):
            assert pe_dot_int([a, b], w2, cfg2) == 5 * a - 3 * b

    random_cases = 100_000
    per_lane = random_cases // 3
    done = 0
    for lanes in (4, 16, 32):
        cfg = PEConfig(levels=3, lanes=lanes, weight_bits=8)
        count = random_cases - done if lanes == 32 else per_lane
        acts = rng.integers(-7, 8, size=(count, lanes))
        weights = rng.integers(-127, 128, size=(count, lanes))
        reference = np.einsum("ij,ij->i", acts.astype(np.int64), weights.astype(np.int64))
        for i in range(count):
            assert pe_dot_int(acts[i], weights[i], cfg) == int(reference[i])
        done += count

    array = ArrayConfig(rows=16, cols=16, pe=PEConfig(levels=3, lanes=8, weight_bits=8))
    for _ in range(50):
        m, k, n = (int(rng.integers(1, 201)) for _ in range(3))
        s = rng.integers(-7, 8, size=(m, k))
        w = rng.integers(-127, 128, size=(k, n))
        out, report = array_matmul(s, w, array)
        assert np.array_equal(out, s.astype(np.int64) @ w.astype(np.int64))
        assert report.cycles == closed_form_cycles(m, k, n, array)
    elapsed = time.perf_counter() - started
    assert elapsed < 60.0
    announce(6, f"225 exhaustive + {random_cases} random PE dots and 50 array shapes "
                f"bit-exact ({elapsed:.2f}s)")


def _toy(codec_kind, mode, allocation):
    return ToyModelConfig(layers=4, width=16, seed=7, codec_kind=codec_kind,
                          mode=mode, allocation=allocation)


def _profile_for(codec_kind, mode, stream):
    return drift_profile([capture_activations(_toy(codec_kind, mode, None), stream)])


def test_criterion_7_pipeline_equivalence():
    """4-layer width-16 toy model, 8 visual + 4 text tokens: spike and
    dense paths bit-identical for every codec and allocation mode. < 5 s."""
    started = time.perf_counter()
    stream = make_token_stream(8, 4, 16, seed=11)
    binary_allocs = {
        "uniform": lambda p: allocate_uniform(3),
        "modality": lambda p: allocate_modality(3, 4),
        "med": lambda p: allocate_layers(p, VISUAL, 2.3, 3, 2).merged(
            allocate_layers(p, TEXT, 3.3, 4, 3)),
        "med-reverse": lambda p: allocate_layers_reverse(p, VISUAL, 2.3, 3, 2).merged(
            allocate_layers_reverse(p, TEXT, 3.3, 4, 3)),
    }
    unary_allocs = {
        "uniform": lambda p: allocate_uniform(3),
        "modality": lambda p: allocate_modality(3, 7),
        "med": lambda p: allocate_layers(p, VISUAL, 4.2, 7, 3).merged(
            allocate_layers(p, TEXT, 5.0, 7, 3)),
        "med-reverse": lambda p: allocate_layers_reverse(p, VISUAL, 4.2, 7, 3).merged(
            allocate_layers_reverse(p, TEXT, 5.0, 7, 3)),
    }
    combos = 0
    for codec_kind, mode, allocs in ((BINARY, POLAR, binary_allocs),
                                     (BINARY, NONPOLAR, binary_allocs),
                                     (UNARY, NONPOLAR, unary_allocs)):
        profile = _profile_for(codec_kind, mode, stream)
        for name, build in allocs.items():
            config = _toy(codec_kind, mode, build(profile))
            spike, _ = run_model(config, stream, PATH_SPIKE)
            dense, _ = run_model(config, stream, PATH_DENSE)
            assert spike.tokens.tobytes() == dense.tokens.tobytes(), \
                f"{codec_kind}/{mode}/{name}"
            combos += 1
    elapsed = time.perf_counter() - started
    assert elapsed < 5.0
    announce(7, f"{combos} codec x allocation combinations bit-identical "
                f"({elapsed:.2f}s)")


def test_criterion_8_allocation_properties():
    """Budget identity, forward/reverse disjointness, drift range."""
    rng = np.random.default_rng(108)
    for _ in range(1000):
        layers = int(rng.integers(1, 49))
        t_lo = int(rng.integers(1, 9))
        t_hi = t_lo + 1  # adjacent levels, the mixing the budgets describe
        target = float(rng.uniform(t_lo, t_hi))
        profile = DriftProfile()
        for layer, value in enumerate(rng.uniform(0, 2, size=layers)):
            profile.values[(layer, VISUAL)] = float(value)
            profile.samples[(layer, VISUAL)] = 1
        alloc = allocate_layers(profile, VISUAL, target, t_hi, t_lo)
        k = alloc.budget[VISUAL].k
        achieved = (k * t_hi + (layers - k) * t_lo) / layers
        assert abs(achieved - target) <= 1 / (2 * layers) + 1e-9

    disjoint_checked = 0
    while disjoint_checked < 200:
        layers = int(rng.integers(2, 33))
        values = rng.permutation(layers) / layers + rng.uniform(0, 1 / (4 * layers))
        profile = DriftProfile()
        for layer in range(layers):
            profile.values[(layer, VISUAL)] = float(values[layer])
            profile.samples[(layer, VISUAL)] = 1
        target = float(rng.uniform(1.0, 2.0))
        fwd = allocate_layers(profile, VISUAL, target, 2, 1)
        k = fwd.budget[VISUAL].k
        if not 0 < k < layers:
            continue
        rev = allocate_layers_reverse(profile, VISUAL, target, 2, 1)
        high_fwd = {l for (l, m), t in fwd.per_layer.items() if t == 2}
        high_rev = {l for (l, m), t in rev.per_layer.items() if t == 2}
        # top-k and bottom-k of L distinct values overlap in exactly
        # max(0, 2k - L) layers; they are disjoint whenever 2k <= L
        assert len(high_fwd & high_rev) == max(0, 2 * k - layers)
        if 2 * k <= layers:
            assert not (high_fwd & high_rev)
            disjoint_checked += 1
        assert sum(fwd.per_layer.values()) == sum(rev.per_layer.values())

    base = np.random.default_rng(8).normal(size=(6, 8))
    tags = np.array([VISUAL, TEXT] * 3)
    same = TokenStream(base, tags)
    identical = drift_profile([[(same, TokenStream(base.copy(), tags))]])
    negated = drift_profile([[(same, TokenStream(-base, tags))]])
    assert identical.values[(0, VISUAL)] == pytest.approx(0.0, abs=1e-12)
    assert identical.values[(0, TEXT)] == pytest.approx(0.0, abs=1e-12)
    assert negated.values[(0, VISUAL)] == pytest.approx(2.0, abs=1e-12)
    assert negated.values[(0, TEXT)] == pytest.approx(2.0, abs=1e-12)
    assert all(v is None or 0.0 <= v <= 2.0
               for v in list(identical.values.values()) + list(negated.values.values()))
    announce(8, "budget identity (1000 tuples), forward/reverse disjointness "
                "(200 profiles), drift endpoints 0 and 2")


def test_criterion_9_firing_rate_accounting():
    """accumulation_count == T*N*M*firing_rate exactly; sampled rate within
    0.01 of the brute-force expectation at N=100000."""
    rng = np.random.default_rng(109)
    for _ in range(1000):
        mode = POLAR if rng.integers(2) else NONPOLAR
        codec_kind = BINARY if mode == POLAR or rng.integers(2) else UNARY
        bits = int(rng.integers(2, 6))
        spec = QuantSpec(bits, mode)
        n = int(rng.integers(1, 40))
        m = int(rng.integers(1, 9))
        values = rng.integers(spec.range_lo, spec.range_hi + 1, size=n)
        train = encode(QuantizedTensor(values, 1.0, spec), codec_kind)
        w = WeightMatrix.from_integers(rng.integers(-3, 4, size=(m, n)))
        count = accumulation_count(w, train)
        slots = train.timesteps * train.num_elements
        assert Fraction(count) == Fraction(slots * m) * Fraction(spike_count(train), slots)

    spec = QuantSpec(4, POLAR)
    expectation = sum(
        spike_count(encode(QuantizedTensor(np.array([k]), 1.0, spec), BINARY))
        for k in range(-7, 8)
    ) / (15 * 3)
    sampled = firing_rate(encode(
        QuantizedTensor(rng.integers(-7, 8, size=100_000), 1.0, spec), BINARY))
    assert abs(sampled - expectation) < 0.01
    announce(9, f"exact count identity on 1000 trains; sampled rate {sampled:.4f} "
                f"vs expectation {expectation:.4f} (<0.01)")
