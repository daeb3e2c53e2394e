import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from aeroemu.datasets import RAW, SampleBatch
from aeroemu.errors import (
    InvalidValueError,
    OverflowValueError,
    SchemaHashMismatchError,
    SpaceTagError,
)
from aeroemu.schema import builtin_schema
from aeroemu.transforms import (
    TransformSpec,
    add_tendencies,
    apply_pipeline,
    compute_tendencies,
    fit_transform_spec,
    inverse_signed_log_sqrt,
    invert_pipeline,
    signed_log_sqrt,
)

E_MINUS_1_SQ = (math.e - 1.0) ** 2


class TestSignedLogSqrt:
    def test_zero(self):
        assert signed_log_sqrt(0.0) == 0.0

    def test_closed_form_one(self):
        assert signed_log_sqrt(E_MINUS_1_SQ) == pytest.approx(1.0, rel=1e-12)

    def test_odd_closed_form(self):
        assert signed_log_sqrt(-E_MINUS_1_SQ) == pytest.approx(-1.0, rel=1e-12)

    def test_non_finite_rejected(self):
        for bad in (math.nan, math.inf, -math.inf):
            with pytest.raises(InvalidValueError):
                signed_log_sqrt(bad)

    @given(st.floats(allow_nan=False, allow_infinity=False))
    def test_odd_exact(self, x):
        assert signed_log_sqrt(-x) == -signed_log_sqrt(x)

    @given(
        st.floats(min_value=-1e300, max_value=1e300),
        st.floats(min_value=-1e300, max_value=1e300),
    )
    def test_strictly_monotone(self, a, b):
        if a == b:
            assert signed_log_sqrt(a) == signed_log_sqrt(b)
        else:
            lo, hi = min(a, b), max(a, b)
            assert signed_log_sqrt(lo) < signed_log_sqrt(hi)


class TestInverse:
    def test_zero(self):
        assert inverse_signed_log_sqrt(0.0) == 0.0

    def test_closed_form(self):
        assert inverse_signed_log_sqrt(1.0) == pytest.approx(E_MINUS_1_SQ, rel=1e-12)

    def test_overflow_rejected(self):
        with pytest.raises(OverflowValueError):
            inverse_signed_log_sqrt(360.0)

    def test_non_finite_rejected(self):
        with pytest.raises(InvalidValueError):
            inverse_signed_log_sqrt(math.nan)

    @pytest.mark.parametrize("sign", [1.0, -1.0])
    def test_round_trip_log_grid(self, sign):
        x = sign * np.logspace(-20, 20, 2000)
        back = inverse_signed_log_sqrt(signed_log_sqrt(x))
        assert np.max(np.abs(back - x) / np.abs(x)) <= 1e-9

    def test_round_trip_other_direction(self):
        y = np.concatenate([-np.logspace(-8, 1.5, 500), np.logspace(-8, 1.5, 500)])
        forward = signed_log_sqrt(inverse_signed_log_sqrt(y))
        assert np.max(np.abs(forward - y) / np.abs(y)) <= 1e-9


class TestFitTransformSpec:
    def test_population_std(self):
        s = builtin_schema()
        # Choose raw values whose transformed values are exactly {1, 2, 3}.
        raw = inverse_signed_log_sqrt(np.array([1.0, 2.0, 3.0]))
        inputs = SampleBatch(s.input_names, np.tile(raw[:, None], (1, 34)), RAW)
        targets = SampleBatch(s.output_names, np.tile(raw[:, None], (1, 28)), RAW)
        spec = fit_transform_spec(inputs, targets, s)
        assert spec.input_means[0] == pytest.approx(2.0, rel=1e-9)
        assert spec.input_stds[0] == pytest.approx(math.sqrt(2.0 / 3.0), rel=1e-9)

    def test_constant_column_guard(self):
        s = builtin_schema()
        inputs = SampleBatch(s.input_names, np.full((5, 34), 7.0), RAW)
        targets = SampleBatch(s.output_names, np.full((5, 28), 7.0), RAW)
        spec = fit_transform_spec(inputs, targets, s)
        assert np.all(spec.input_stds == 1.0)
        assert spec.input_means[0] == pytest.approx(signed_log_sqrt(7.0))

    def test_single_row(self):
        s = builtin_schema()
        inputs = SampleBatch(s.input_names, np.arange(34.0)[None, :], RAW)
        targets = SampleBatch(s.output_names, np.arange(28.0)[None, :], RAW)
        spec = fit_transform_spec(inputs, targets, s)
        assert np.all(spec.input_stds == 1.0)
        assert np.all(spec.output_stds == 1.0)


class TestPipeline:
    def _spec(self, schema):
        n_in, n_out = 34, 28
        return TransformSpec(np.zeros(n_in), np.ones(n_in),
                             np.zeros(n_out), np.ones(n_out),
                             schema.schema_hash)

    def test_zero_maps_to_zero(self):
        s = builtin_schema()
        batch = SampleBatch(s.input_names, np.zeros((3, 34)), RAW)
        z = apply_pipeline(batch, self._spec(s), s, "input")
        assert np.all(z.data == 0.0)
        assert z.space == "standardized"

    def test_closed_form_composition(self):
        s = builtin_schema()
        spec = TransformSpec(np.full(34, 0.5), np.full(34, 0.25),
                             np.zeros(28), np.ones(28), s.schema_hash)
        batch = SampleBatch(s.input_names, np.full((1, 34), E_MINUS_1_SQ), RAW)
        z = apply_pipeline(batch, spec, s, "input")
        assert z.data[0, 0] == pytest.approx(2.0, rel=1e-9)

    def test_round_trip(self):
        s = builtin_schema()
        rng = np.random.default_rng(0)
        data = rng.uniform(-50, 50, (100, 34))
        spec = TransformSpec(rng.normal(0, 1, 34), rng.uniform(0.5, 2, 34),
                             np.zeros(28), np.ones(28), s.schema_hash)
        batch = SampleBatch(s.input_names, data, RAW)
        back = invert_pipeline(apply_pipeline(batch, spec, s, "input"),
                               spec, s, "input")
        nonzero = data != 0
        rel = np.abs(back.data[nonzero] - data[nonzero]) / np.abs(data[nonzero])
        assert np.max(rel) <= 1e-9

    def test_fit_then_apply_standardizes(self):
        s = builtin_schema()
        rng = np.random.default_rng(1)
        inputs = SampleBatch(s.input_names, rng.lognormal(0, 2, (5000, 34)), RAW)
        targets = SampleBatch(s.output_names, rng.normal(0, 3, (5000, 28)), RAW)
        spec = fit_transform_spec(inputs, targets, s)
        z = apply_pipeline(inputs, spec, s, "input")
        assert np.max(np.abs(z.data.mean(axis=0))) < 1e-9
        assert np.max(np.abs(z.data.std(axis=0) - 1.0)) < 1e-9

    def test_schema_hash_mismatch(self):
        s = builtin_schema()
        spec = self._spec(s)
        spec.schema_hash ^= 1
        batch = SampleBatch(s.input_names, np.zeros((2, 34)), RAW)
        with pytest.raises(SchemaHashMismatchError):
            apply_pipeline(batch, spec, s, "input")

    def test_space_tag_enforced(self):
        s = builtin_schema()
        spec = self._spec(s)
        std = SampleBatch(s.input_names, np.zeros((2, 34)), "standardized")
        with pytest.raises(SpaceTagError):
            apply_pipeline(std, spec, s, "input")
        raw = SampleBatch(s.input_names, np.zeros((2, 34)), RAW)
        with pytest.raises(SpaceTagError):
            invert_pipeline(raw, spec, s, "input")


class TestTendencies:
    def _batches(self, before_val, after_val):
        s = builtin_schema()
        before = SampleBatch(s.input_names, np.full((1, 34), before_val), RAW)
        after = SampleBatch(s.output_names, np.full((1, 28), after_val), RAW)
        return s, before, after

    def test_no_change(self):
        s, before, after = self._batches(5.0, 5.0)
        tend = compute_tendencies(before, after, s)
        assert tend.column("SO4 as mass")[0] == 0.0

    def test_difference(self):
        s, before, after = self._batches(5.0, 7.5)
        tend = compute_tendencies(before, after, s)
        assert tend.column("SO4 as mass")[0] == pytest.approx(2.5)

    def test_water_kept_absolute(self):
        s, before, after = self._batches(5.0, 0.3)
        tend = compute_tendencies(before, after, s)
        assert tend.column("ns water")[0] == 0.3

    def test_add_back_reconstructs(self):
        s = builtin_schema()
        rng = np.random.default_rng(2)
        before = SampleBatch(s.input_names, rng.uniform(0, 10, (50, 34)), RAW)
        after = SampleBatch(s.output_names, rng.uniform(0, 10, (50, 28)), RAW)
        tend = compute_tendencies(before, after, s)
        rebuilt = add_tendencies(before, tend, s)
        # (after - before) + before re-rounds once; the error is a few ulps
        # of the larger operand, so the tolerance must be absolute.
        assert np.allclose(rebuilt.data, after.data, rtol=1e-13, atol=1e-13)

    def test_row_count_mismatch(self):
        s = builtin_schema()
        before = SampleBatch(s.input_names, np.zeros((2, 34)), RAW)
        after = SampleBatch(s.output_names, np.zeros((3, 28)), RAW)
        with pytest.raises(ValueError):
            compute_tendencies(before, after, s)


class TestSpecSerialization:
    def test_json_round_trip(self):
        s = builtin_schema()
        rng = np.random.default_rng(3)
        spec = TransformSpec(rng.normal(size=34), rng.uniform(0.1, 2, 34),
                             rng.normal(size=28), rng.uniform(0.1, 2, 28),
                             s.schema_hash)
        back = TransformSpec.from_json(spec.to_json(s), s)
        assert np.array_equal(back.input_means, spec.input_means)
        assert np.array_equal(back.output_stds, spec.output_stds)
        assert back.schema_hash == spec.schema_hash
