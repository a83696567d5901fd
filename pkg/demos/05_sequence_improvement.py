#!/usr/bin/env python3
"""Reward-conditioned improvement: sorted contexts, online loops, marker arms."""

import random

from seqpat import improve
from seqpat.environments import GridEnv, MarkerScene, make_marker_demo, marker_build_context
from seqpat.models import CallableModel, RandomPolicyModel

# how a context prompt looks: ascending rewards, then the target line
scene = MarkerScene()
demo = make_marker_demo(scene, seed=1)
records = marker_build_context(scene, demo)
buffer = improve.Buffer(improve.marker_records(records))
built = improve.build_context(
    buffer, improve.ImproveConfig(token_budget=4096), 100, "104 83 123"
)
for line in built.prompt.split("\n"):
    print(line[:68] + ("..." if len(line) > 68 else ""))

# offline extrapolation with a mock that replays the best trajectory
result = improve.marker_improve(
    CallableModel(lambda p: ", " + ", ".join(" ".join(map(str, s)) for s in demo[1:])),
    scene, improve.ImproveConfig(), records, start_state=demo[0],
)
print(f"\nmarker extrapolation reward: {result['reward']}")

# online loop on the grid with a random policy (the exploration baseline)
report = improve.run_online(
    RandomPolicyModel(actions=(1, 2, 3, 4, 5), seed=0), GridEnv,
    episodes=30, warmup=20, cfg=improve.ImproveConfig(), seed=7,
)
maxes = [row["running_max"] for row in report["curve"]]
print(f"\ngrid online loop: warmup max {maxes[19]}, final max {maxes[-1]}")
print("running max every 5 episodes:", maxes[::5])
