#!/usr/bin/env python3
"""Completion tasks: sinusoid families, loop drawing, sweep traces, DTW scoring."""

from seqpat import completion as comp
from seqpat.models import PeriodRepeatModel

for family in comp.FAMILIES:
    spec = comp.FunctionSpec(family=family, a=1.0, b=1.0, context_periods=3)
    context, target = comp.sample_function(spec)
    print(f"{family:10s} context[:12] = {context.values[:12]}")

# the period-repeat baseline simply replays the final period of the context
spec = comp.FunctionSpec(family="sin", a=1.0, b=1.0, context_periods=5)
report = comp.run_function_suite(PeriodRepeatModel(period=20), spec, trials=11, seed=0)
print(f"\nperiod-repeat on sin: mean DTW/step = {report['mean_dtw_per_step']:.3f} over 11 trials")

# loop drawing: extrapolate a third loop from two
for name, loop_spec in comp.LOOP_PRESETS.items():
    context, target = comp.make_loop_trace(loop_spec)
    print(f"loop preset {name:7s}: {len(context.frames)} context frames, "
          f"{len(target.frames)} target frames")

# table sweeping: 7-dim pose trace, first two thirds as context
trace = comp.synthesize_sweep_demo(seed=1)
context, target = comp.split_two_thirds(trace)
print(f"\nsweep trace: {len(trace.frames)} frames at {trace.rate_hz} Hz, "
      f"context {len(context.frames)} / target {len(target.frames)}")
print("first frame (xyz + quaternion bins):", trace.frames[0])
