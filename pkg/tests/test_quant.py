import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spikekit.errors import ContractViolation
from spikekit.quant import (NONPOLAR, POLAR, QuantizedTensor, QuantSpec,
                            dequantize, quantize, scale_for, scale_nonneg,
                            scale_symmetric)


class TestQuantSpec:
    def test_levels_and_ranges(self):
        spec = QuantSpec(4, POLAR)
        assert spec.levels == 16
        assert (spec.range_lo, spec.range_hi) == (-7, 7)
        spec = QuantSpec(3, NONPOLAR)
        assert spec.levels == 8
        assert (spec.range_lo, spec.range_hi) == (0, 7)

    def test_timesteps_per_codec(self):
        assert QuantSpec(4, NONPOLAR).timesteps("unary") == 15
        assert QuantSpec(4, POLAR).timesteps("binary") == 3
        assert QuantSpec(4, NONPOLAR).timesteps("binary") == 4
        assert QuantSpec(2, NONPOLAR).timesteps("unary") == 3

    def test_unary_rejects_polar(self):
        with pytest.raises(ContractViolation):
            QuantSpec(4, POLAR).timesteps("unary")

    def test_bad_spec(self):
        with pytest.raises(ContractViolation):
            QuantSpec(1, POLAR)
        with pytest.raises(ContractViolation):
            QuantSpec(4, "signed")


class TestScales:
    def test_symmetric_at_grid_edge(self):
        assert scale_symmetric([-7.0, 3.5], QuantSpec(4, POLAR)) == 1.0

    def test_symmetric_zero_fallback(self):
        assert scale_symmetric([0.0, 0.0, 0.0], QuantSpec(4, POLAR)) == 1.0

    def test_symmetric_formula(self):
        got = scale_symmetric([2.4, -9.1, 5.0], QuantSpec(3, POLAR))
        assert got == pytest.approx(9.1 / 3, rel=1e-15)

    def test_nonneg_identity_grid(self):
        assert scale_nonneg(np.arange(16.0), QuantSpec(4, NONPOLAR)) == 1.0

    def test_nonneg_zero_fallback(self):
        assert scale_nonneg([0.0, 0.0], QuantSpec(2, NONPOLAR)) == 1.0

    def test_nonneg_formula(self):
        assert scale_nonneg([6.0], QuantSpec(3, NONPOLAR)) == pytest.approx(6 / 7, rel=1e-15)

    def test_mode_mismatch(self):
        with pytest.raises(ContractViolation):
            scale_symmetric([1.0], QuantSpec(4, NONPOLAR))
        with pytest.raises(ContractViolation):
            scale_nonneg([1.0], QuantSpec(4, POLAR))


class TestQuantize:
    def test_round_and_clip(self):
        q = quantize([3.4, -6.6], 1.0, QuantSpec(4, POLAR))
        assert q.values.tolist() == [3, -7]

    def test_clips_to_top_level(self):
        q = quantize([100.0], 1.0, QuantSpec(4, POLAR))
        assert q.values.tolist() == [7]

    def test_ties_away_from_zero(self):
        spec = QuantSpec(4, POLAR)
        assert quantize([0.5], 1.0, spec).values.tolist() == [1]
        assert quantize([-0.5], 1.0, spec).values.tolist() == [-1]
        assert quantize([2.5, -3.5], 1.0, spec).values.tolist() == [3, -4]

    def test_nonfinite_rejected_with_index(self):
        with pytest.raises(ContractViolation, match="flat index 2"):
            quantize([1.0, 2.0, np.nan], 1.0, QuantSpec(4, POLAR))
        with pytest.raises(ContractViolation, match="flat index 0"):
            quantize([np.inf], 1.0, QuantSpec(4, POLAR))

    def test_bad_scale(self):
        with pytest.raises(ContractViolation):
            quantize([1.0], 0.0, QuantSpec(4, POLAR))

    def test_nonpolar_clips_negatives_to_zero(self):
        q = quantize([-3.0, 2.0], 1.0, QuantSpec(3, NONPOLAR))
        assert q.values.tolist() == [0, 2]


class TestDequantize:
    def test_scales_values(self):
        q = QuantizedTensor(np.array([3, -7]), 2.0, QuantSpec(4, POLAR))
        assert dequantize(q).tolist() == [6.0, -14.0]

    def test_zero(self):
        q = QuantizedTensor(np.array([0]), 5.0, QuantSpec(4, POLAR))
        assert dequantize(q).tolist() == [0.0]


class TestRoundtrip:
    @pytest.mark.parametrize("mode", [POLAR, NONPOLAR])
    @pytest.mark.parametrize("bits", [2, 3, 4, 6])
    def test_error_bound_random(self, mode, bits):
        rng = np.random.default_rng(bits * 17 + (mode == POLAR))
        spec = QuantSpec(bits, mode)
        for _ in range(50):
            u = rng.normal(0.0, 2.0, size=(4, 9))
            if mode == NONPOLAR:
                u = np.abs(u)
            scale = scale_for(u, spec)
            err = np.abs(dequantize(quantize(u, scale, spec)) - u)
            assert (err <= scale / 2 + 1e-12).all()

    @pytest.mark.parametrize("mode", [POLAR, NONPOLAR])
    def test_idempotent_on_grid_points(self, mode):
        spec = QuantSpec(4, mode)
        grid = np.arange(spec.range_lo, spec.range_hi + 1)
        for scale in (0.37, 1.0, 2.5):
            q = QuantizedTensor(grid, scale, spec)
            again = quantize(dequantize(q), scale, spec)
            assert np.array_equal(again.values, q.values)

    def test_polar_grid_never_contains_dropped_level(self):
        rng = np.random.default_rng(5)
        spec = QuantSpec(4, POLAR)
        for _ in range(200):
            u = rng.normal(0.0, 10.0, size=64)
            q = quantize(u, scale_for(u, spec), spec)
            assert q.values.min() >= -spec.levels // 2 + 1

    @given(st.lists(st.floats(-50, 50), min_size=1, max_size=32),
           st.integers(2, 8))
    @settings(max_examples=150, deadline=None)
    def test_error_bound_property(self, values, bits):
        u = np.array(values)
        spec = QuantSpec(bits, POLAR)
        scale = scale_for(u, spec)
        err = np.abs(dequantize(quantize(u, scale, spec)) - u)
        assert (err <= scale / 2 + 1e-9 * scale).all()


class TestQuantizedTensor:
    def test_range_validation(self):
        with pytest.raises(ContractViolation, match="flat index 1"):
            QuantizedTensor(np.array([0, 9]), 1.0, QuantSpec(4, POLAR))
        with pytest.raises(ContractViolation):
            QuantizedTensor(np.array([-8]), 1.0, QuantSpec(4, POLAR))

    def test_requires_integer_array(self):
        with pytest.raises(ContractViolation):
            QuantizedTensor(np.array([1.5]), 1.0, QuantSpec(4, POLAR))

    def test_requires_positive_scale(self):
        with pytest.raises(ContractViolation):
            QuantizedTensor(np.array([1]), -1.0, QuantSpec(4, POLAR))
