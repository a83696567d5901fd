import itertools
import math
import random

import numpy as np
import pytest

from seqpat import completion as comp
from seqpat.errors import ConfigError, DomainError, StructureError
from seqpat.models import CallableModel, PeriodRepeatModel


def dtw_brute_force(a, b, cost=None):
    """Exhaustive minimum over all monotone alignment paths (oracle, len <= ~7)."""
    cost = cost or (lambda x, y: abs(x - y))
    n, m = len(a), len(b)
    best = [math.inf]

    def walk(i, j, total):
        total += cost(a[i], b[j])
        if total >= best[0]:
            return
        if i == n - 1 and j == m - 1:
            best[0] = total
            return
        if i + 1 < n:
            walk(i + 1, j, total)
        if j + 1 < m:
            walk(i, j + 1, total)
        if i + 1 < n and j + 1 < m:
            walk(i + 1, j + 1, total)

    walk(0, 0, 0.0)
    return best[0]


class TestDtw:
    def test_fixtures(self):
        assert comp.dtw([0], [0, 0, 0]) == 0
        assert comp.dtw([0, 0], [1, 1]) == 2
        assert dtw_brute_force([0, 0], [1, 1]) == 2

    def test_self_distance_zero(self):
        rng = random.Random(0)
        for _ in range(50):
            s = [rng.randint(0, 100) for _ in range(rng.randint(1, 12))]
            assert comp.dtw(s, s) == 0

    def test_non_negative_and_symmetric(self):
        rng = random.Random(1)
        for _ in range(100):
            a = [rng.randint(0, 20) for _ in range(rng.randint(1, 8))]
            b = [rng.randint(0, 20) for _ in range(rng.randint(1, 8))]
            d = comp.dtw(a, b)
            assert d >= 0
            assert d == comp.dtw(b, a)

    def test_agrees_with_brute_force(self):
        rng = random.Random(2)
        for _ in range(300):
            a = [rng.randint(0, 9) for _ in range(rng.randint(1, 6))]
            b = [rng.randint(0, 9) for _ in range(rng.randint(1, 6))]
            assert comp.dtw(a, b) == dtw_brute_force(a, b)

    def test_vector_cost_euclidean(self):
        a = [[0, 0], [3, 4]]
        b = [[0, 0], [0, 0]]
        assert comp.dtw(a, b) == 5.0

    def test_empty_rejected(self):
        with pytest.raises(DomainError):
            comp.dtw([], [1])


class TestBinning:
    def test_bin_unbin_identity_on_integers(self):
        for v in range(0, 101):
            assert comp.bin_value(comp.unbin_value(v, -3.0, 7.0, (0, 100)), -3.0, 7.0, (0, 100)) == v

    def test_unbin_bin_within_half_bin(self):
        rng = random.Random(3)
        lo, hi = -2.5, 9.1
        half_bin = (hi - lo) / (2 * 100)
        for _ in range(500):
            y = rng.uniform(lo, hi)
            back = comp.unbin_value(comp.bin_value(y, lo, hi, (0, 100)), lo, hi, (0, 100))
            assert abs(back - y) <= half_bin + 1e-12

    def test_degenerate_scale_is_midpoint(self):
        assert comp.bin_value(5.0, 5.0, 5.0, (0, 100)) == 50


class TestSampleFunction:
    def test_zero_crossings_bin_to_midpoint(self):
        spec = comp.FunctionSpec(family="sin", a=1.0, b=1.0, context_periods=3)
        context, target = comp.sample_function(spec)
        series = context.values + target.values
        # samples at multiples of half a period hit y = 0 exactly
        for i in range(0, len(series), spec.points_per_period // 2):
            assert series[i] == 50

    def test_grow_sin_escapes_context_range(self):
        spec = comp.FunctionSpec(family="grow_sin", a=1.0, b=1.0, context_periods=3)
        for seed in range(10):
            context, target = comp.sample_function(spec, seed=seed)
            assert max(target.values) > max(context.values)
            assert min(target.values) < min(context.values)

    def test_seeded_determinism(self):
        spec = comp.FunctionSpec(family="decay_sin", a=2.0, b=1.5)
        assert comp.sample_function(spec, seed=5) == comp.sample_function(spec, seed=5)

    def test_decay_never_evaluated_at_zero(self):
        spec = comp.FunctionSpec(family="decay_sin", a=1.0, b=1.0)
        context, _ = comp.sample_function(spec)
        assert all(0 <= v <= 100 for v in context.values)  # finite, in range

    def test_decay_variant_selectable(self):
        base = comp.FunctionSpec(family="decay_sin", a=1.0, b=1.0)
        squared = comp.FunctionSpec(family="decay_sin", a=1.0, b=1.0, decay_exponent=2)
        assert comp.sample_function(base) != comp.sample_function(squared)

    def test_split_sizes(self):
        spec = comp.FunctionSpec(family="sin", context_periods=5, horizon_periods=1.0)
        context, target = comp.sample_function(spec)
        assert len(context.values) == 100
        assert len(target.values) == 20

    def test_spec_validation(self):
        with pytest.raises(ConfigError):
            comp.FunctionSpec(family="tan")
        with pytest.raises(ConfigError):
            comp.FunctionSpec(points_per_period=2)


class TestEvaluateCompletion:
    def test_ground_truth_mock_scores_zero_scalar(self):
        spec = comp.FunctionSpec(family="sin", context_periods=3)
        context, target = comp.sample_function(spec, seed=1)
        task = comp.task_from_series(context, target)
        echo = CallableModel(lambda p: ", ".join(str(v) for v in target.values))
        result = comp.evaluate_completion(echo, task)
        assert result["dtw"] == 0
        assert not result["padded"]

    def test_ground_truth_mock_scores_zero_trace(self):
        context, target = comp.make_loop_trace(comp.LOOP_PRESETS["medium"])
        task = comp.task_from_traces(context, target)
        echo = CallableModel(lambda p: comp.encode_frames(target.frames))
        result = comp.evaluate_completion(echo, task)
        assert result["dtw"] == 0

    def test_short_completion_padded_and_flagged(self):
        spec = comp.FunctionSpec(family="sin", context_periods=3)
        context, target = comp.sample_function(spec, seed=2)
        task = comp.task_from_series(context, target)
        result = comp.evaluate_completion(CallableModel(lambda p: "50, 50"), task)
        assert result["padded"]
        assert len(result["predicted"]) == len(target.values)

    def test_predictions_clipped_into_range(self):
        spec = comp.FunctionSpec(family="sin", context_periods=3)
        context, target = comp.sample_function(spec, seed=3)
        task = comp.task_from_series(context, target)
        result = comp.evaluate_completion(CallableModel(lambda p: "9999, -50"), task)
        assert all(0 <= v <= 100 for v in result["predicted"])

    def test_period_repeat_on_pure_sin(self):
        spec = comp.FunctionSpec(family="sin", a=1.0, b=1.0, context_periods=5)
        report = comp.run_function_suite(PeriodRepeatModel(period=20), spec, trials=11, seed=0)
        assert report["mean_dtw_per_step"] <= 2.0


class TestLoops:
    def test_boundary_at_context_loops(self):
        spec = comp.LOOP_PRESETS["medium"]
        context, target = comp.make_loop_trace(spec)
        period = 2 * math.pi / spec.b
        n_loop = round(period * spec.sample_rate)
        assert len(context.frames) == spec.loops_context * n_loop
        assert len(target.frames) == n_loop

    def test_three_presets(self):
        assert set(comp.LOOP_PRESETS) == {"narrow", "medium", "wide"}
        for spec in comp.LOOP_PRESETS.values():
            context, target = comp.make_loop_trace(spec)
            assert context.dims == 2

    def test_samples_satisfy_equations_within_half_bin(self):
        spec = comp.LOOP_PRESETS["wide"]
        context, target = comp.make_loop_trace(spec)
        frames = context.frames + target.frames
        scale = context.scale
        period = 2 * math.pi / spec.b
        n_loop = round(period * spec.sample_rate)
        for j, frame in enumerate(frames):
            t = j * (period / n_loop)
            expect_x = spec.a_x * math.cos(spec.b * t) + spec.d_x
            expect_y = spec.a_y * math.sin(spec.b * t) + spec.c_y * t + spec.d_y
            half_x = (scale[0][1] - scale[0][0]) / (2 * 300)
            half_y = (scale[1][1] - scale[1][0]) / (2 * 300)
            assert abs(comp.unbin_value(frame[0], *scale[0], (0, 300)) - expect_x) <= half_x + 1e-9
            assert abs(comp.unbin_value(frame[1], *scale[1], (0, 300)) - expect_y) <= half_y + 1e-9

    def test_values_in_bin_range(self):
        context, target = comp.make_loop_trace(comp.LOOP_PRESETS["narrow"], seed=4)
        for frame in context.frames + target.frames:
            assert all(0 <= v <= 300 for v in frame)


class TestSweep:
    def test_frame_count_in_expected_band(self):
        for seed in range(6):
            trace = comp.synthesize_sweep_demo(seed=seed)
            assert 60 <= len(trace.frames) <= 90

    def test_quaternion_norms_near_unit(self):
        trace = comp.synthesize_sweep_demo(seed=1)
        for frame in trace.frames:
            quat = [
                comp.unbin_value(frame[d], *trace.scale[d], trace.bin_range)
                for d in range(3, 7)
            ]
            assert abs(np.linalg.norm(quat) - 1.0) <= 0.05

    def test_zero_noise_x_is_periodic(self):
        params = comp.SweepParams(noise=0.0)
        trace = comp.synthesize_sweep_demo(params, seed=2)
        period = len(trace.frames) // 9
        xs = [f[0] for f in trace.frames]
        for i in range(len(xs) - 2 * period):
            assert abs(xs[i] - xs[i + 2 * period]) <= 1  # zigzag repeats every 2 strokes

    def test_two_thirds_split(self):
        trace = comp.synthesize_sweep_demo(seed=3)
        context, target = comp.split_two_thirds(trace)
        assert len(context.frames) == (2 * len(trace.frames)) // 3
        assert len(context.frames) + len(target.frames) == len(trace.frames)

    def test_save_load_round_trip(self, tmp_path):
        trace = comp.synthesize_sweep_demo(seed=4)
        path = tmp_path / "trace.txt"
        comp.save_trace(trace, path)
        loaded = comp.load_trace(path)
        assert loaded.frames == trace.frames
        assert loaded.bin_range == trace.bin_range
        assert loaded.rate_hz == trace.rate_hz

    def test_load_inconsistent_dims(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("3 5.0 0 100\n1 2 3\n1 2\n", encoding="utf-8")
        with pytest.raises(StructureError):
            comp.load_trace(path)
