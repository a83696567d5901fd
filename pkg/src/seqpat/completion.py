"""Function-extrapolation tasks: discretized series, motion traces, DTW scoring.

Series are binned to integers over the min/max of the full ground-truth
span (context plus target) so that growing functions stay representable;
predictions are clipped back into the bin range before scoring.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .codec import CodecProfile, DEFAULT_PROFILE
from .errors import ConfigError, DomainError, StructureError

FAMILIES = ("sin", "grow_sin", "decay_sin")


@dataclass
class FunctionSpec:
    family: str = "sin"
    a: float = 1.0
    b: float = 1.0
    points_per_period: int = 20
    context_periods: int = 3
    horizon_periods: float = 1.0
    bin_range: tuple[int, int] = (0, 100)
    decay_exponent: int = 1  # denominator is (2x)**1 by default; 2 selects the x^2 variant

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ConfigError(f"unknown family {self.family!r}")
        if self.points_per_period < 4:
            raise ConfigError("points_per_period must be >= 4")
        if self.context_periods < 1:
            raise ConfigError("context_periods must be >= 1")
        if self.horizon_periods <= 0:
            raise ConfigError("horizon_periods must be > 0")


@dataclass
class DiscretizedSeries:
    values: list[int]
    scale: tuple[float, float]
    bin_range: tuple[int, int] = (0, 100)


@dataclass
class MotionTrace:
    frames: list[list[int]]  # T x D integers
    bin_range: tuple[int, int]
    rate_hz: float
    scale: list[tuple[float, float]] | None = None  # per-dim (lo, hi) used in binning

    @property
    def dims(self) -> int:
        return len(self.frames[0]) if self.frames else 0


def bin_value(y: float, lo: float, hi: float, bin_range: tuple[int, int]) -> int:
    b_lo, b_hi = bin_range
    if hi <= lo:
        return (b_lo + b_hi) // 2
    v = b_lo + (y - lo) / (hi - lo) * (b_hi - b_lo)
    return min(b_hi, max(b_lo, round(v)))


def unbin_value(v: int, lo: float, hi: float, bin_range: tuple[int, int]) -> float:
    b_lo, b_hi = bin_range
    if b_hi <= b_lo:
        return lo
    return lo + (v - b_lo) / (b_hi - b_lo) * (hi - lo)


def _function_values(spec: FunctionSpec, a: float, b: float, xs: np.ndarray) -> np.ndarray:
    if spec.family == "sin":
        return a * np.sin(b * xs)
    if spec.family == "grow_sin":
        return a * xs * np.sin(b * xs)
    denom = 2 * xs if spec.decay_exponent == 1 else 2 * xs**2
    return a / denom * np.sin(b * xs)


def sample_function(
    spec: FunctionSpec, seed: int | None = None
) -> tuple[DiscretizedSeries, DiscretizedSeries]:
    """Sample the function at uniform steps and split into context / target.

    The step is period / points_per_period over context_periods +
    horizon_periods. The decay family starts at the first step (it is
    undefined at x = 0); the others start at 0. A seed jitters amplitude
    and frequency by up to ±20% (phase untouched); seed=None reproduces
    the exact (a, b).
    """
    a, b = spec.a, spec.b
    if seed is not None:
        rng = random.Random(seed)
        a *= rng.uniform(0.8, 1.2)
        b *= rng.uniform(0.8, 1.2)
    period = 2 * math.pi / b
    step = period / spec.points_per_period
    n_context = spec.points_per_period * spec.context_periods
    n_total = n_context + round(spec.points_per_period * spec.horizon_periods)
    offset = 1 if spec.family == "decay_sin" else 0
    xs = (np.arange(n_total) + offset) * step
    ys = _function_values(spec, a, b, xs)
    lo, hi = float(ys.min()), float(ys.max())
    bins = [bin_value(float(y), lo, hi, spec.bin_range) for y in ys]
    context = DiscretizedSeries(bins[:n_context], (lo, hi), spec.bin_range)
    target = DiscretizedSeries(bins[n_context:], (lo, hi), spec.bin_range)
    return context, target


# ---------------------------------------------------------------------------
# Dynamic time warping


def _default_cost(a, b) -> float:
    if isinstance(a, (int, float)) and isinstance(b, (int, float)):
        return abs(a - b)
    return math.dist(a, b)


def dtw(a: Sequence, b: Sequence, cost: Callable | None = None) -> float:
    """Classic alignment distance, no warping window.

    D(i,j) = cost(a_i, b_j) + min(D(i-1,j), D(i,j-1), D(i-1,j-1)) with the
    D(0,0)=0 boundary; cost defaults to absolute difference for scalars and
    Euclidean distance for vectors.
    """
    if len(a) == 0 or len(b) == 0:
        raise DomainError("dtw requires non-empty sequences")
    cost = cost or _default_cost
    n, m = len(a), len(b)
    dp = np.full((n + 1, m + 1), np.inf)
    dp[0, 0] = 0.0
    for i in range(1, n + 1):
        for j in range(1, m + 1):
            c = cost(a[i - 1], b[j - 1])
            dp[i, j] = c + min(dp[i - 1, j], dp[i, j - 1], dp[i - 1, j - 1])
    return float(dp[n, m])


# ---------------------------------------------------------------------------
# Prompt encoding and completion scoring


def encode_series(values: Sequence[int], profile: CodecProfile = DEFAULT_PROFILE) -> str:
    """Single comma-joined integer series (no example delimiters)."""
    return profile.step_delimiter.join(str(v) for v in values)


def encode_frames(frames: Sequence[Sequence[int]], profile: CodecProfile = DEFAULT_PROFILE) -> str:
    """Frames joined by the step delimiter, dims space-joined within a frame."""
    return profile.step_delimiter.join(
        profile.dim_delimiter.join(str(v) for v in frame) for frame in frames
    )


def parse_series(text: str) -> list[int]:
    import re

    return [int(v) for v in re.findall(r"-?\d+", text)]


def _clip(v: int, bin_range: tuple[int, int]) -> int:
    return min(bin_range[1], max(bin_range[0], v))


@dataclass
class CompletionTask:
    """One trial: a context to extend and the ground-truth continuation."""

    context_values: list  # list[int] for series, list[list[int]] for traces
    target_values: list
    bin_range: tuple[int, int]
    dims: int = 1  # 1 = scalar series, >1 = motion trace
    tag: str = ""


def task_from_series(context: DiscretizedSeries, target: DiscretizedSeries, tag="") -> CompletionTask:
    return CompletionTask(
        list(context.values), list(target.values), context.bin_range, dims=1, tag=tag
    )


def task_from_traces(context: MotionTrace, target: MotionTrace, tag="") -> CompletionTask:
    return CompletionTask(
        [list(f) for f in context.frames],
        [list(f) for f in target.frames],
        context.bin_range,
        dims=context.dims,
        tag=tag,
    )


def build_completion_prompt(task: CompletionTask, profile: CodecProfile = DEFAULT_PROFILE) -> str:
    if task.dims == 1:
        return encode_series(task.context_values, profile) + profile.step_delimiter
    return encode_frames(task.context_values, profile) + profile.step_delimiter


def evaluate_completion(
    model,
    task: CompletionTask,
    profile: CodecProfile = DEFAULT_PROFILE,
    max_tokens: int | None = None,
) -> dict:
    """One trial: prompt, parse to target length, pad short output, DTW-score."""
    from .models import CompletionRequest, complete

    if not task.context_values:
        raise DomainError("completion task requires a non-empty context")
    prompt = build_completion_prompt(task, profile)
    n_target = len(task.target_values)
    per_step = 2 * max(1, task.dims)
    request = CompletionRequest(
        prompt=prompt,
        max_tokens=max_tokens or per_step * n_target + 8,
        stop=("\n",),
    )
    completion = complete(model, request)
    flat = parse_series(completion)
    padded = False
    if task.dims == 1:
        predicted = [_clip(v, task.bin_range) for v in flat[:n_target]]
        if len(predicted) < n_target:
            padded = True
            fill = predicted[-1] if predicted else task.context_values[-1]
            predicted += [fill] * (n_target - len(predicted))
        distance = dtw(predicted, task.target_values)
    else:
        n_frames = len(flat) // task.dims
        frames = [
            [_clip(v, task.bin_range) for v in flat[i * task.dims : (i + 1) * task.dims]]
            for i in range(min(n_frames, n_target))
        ]
        if len(frames) < n_target:
            padded = True
            fill = frames[-1] if frames else list(task.context_values[-1])
            frames += [list(fill)] * (n_target - len(frames))
        predicted = frames
        distance = dtw(predicted, task.target_values)
    return {
        "tag": task.tag,
        "dtw": distance,
        "dtw_per_step": distance / n_target,
        "padded": padded,
        "parsed_values": len(flat),
        "predicted": predicted,
    }


def summarize_trials(trials: Sequence[dict]) -> dict:
    distances = [t["dtw"] for t in trials]
    per_step = [t["dtw_per_step"] for t in trials]
    return {
        "trials": list(trials),
        "n": len(trials),
        "mean_dtw": float(np.mean(distances)) if trials else 0.0,
        "var_dtw": float(np.var(distances)) if trials else 0.0,
        "mean_dtw_per_step": float(np.mean(per_step)) if trials else 0.0,
    }


def run_function_suite(
    model,
    spec: FunctionSpec,
    trials: int = 11,
    seed: int = 0,
    profile: CodecProfile = DEFAULT_PROFILE,
) -> dict:
    """Fig-3-style suite: `trials` jittered instances of one function family."""
    results = []
    for i in range(trials):
        context, target = sample_function(spec, seed=seed + i)
        task = task_from_series(context, target, tag=f"{spec.family}[{i}]")
        results.append(evaluate_completion(model, task, profile))
    report = summarize_trials(results)
    report["family"] = spec.family
    report["context_periods"] = spec.context_periods
    return report


# ---------------------------------------------------------------------------
# Whiteboard loops


@dataclass
class LoopSpec:
    a_x: float = 30.0
    a_y: float = 40.0
    b: float = 2 * math.pi / 5.0
    c_y: float = 6.0
    d_x: float = 80.0
    d_y: float = 80.0
    sample_rate: float = 5.0  # nominal samples per time unit
    loops_context: int = 2
    bin_range: tuple[int, int] = (0, 300)


LOOP_PRESETS = {
    "narrow": LoopSpec(a_x=12.0, a_y=45.0, c_y=9.0),
    "medium": LoopSpec(a_x=30.0, a_y=40.0, c_y=6.0),
    "wide": LoopSpec(a_x=55.0, a_y=35.0, c_y=4.0),
}


def make_loop_trace(spec: LoopSpec, seed: int | None = None) -> tuple[MotionTrace, MotionTrace]:
    """Sample loops_context + 1 full loops of the parametric loop curve.

    x = a_x cos(bt) + d_x and y = a_y sin(bt) + c_y t + d_y, sampled so each
    loop tiles exactly; the context/target boundary falls at
    t = loops_context * (2*pi/b). A seed jitters the loop radii by ±15%.
    """
    a_x, a_y = spec.a_x, spec.a_y
    if seed is not None:
        rng = random.Random(seed)
        a_x *= rng.uniform(0.85, 1.15)
        a_y *= rng.uniform(0.85, 1.15)
    period = 2 * math.pi / spec.b
    n_loop = max(4, round(period * spec.sample_rate))
    n_total = (spec.loops_context + 1) * n_loop
    ts = np.arange(n_total) * (period / n_loop)
    xs = a_x * np.cos(spec.b * ts) + spec.d_x
    ys = a_y * np.sin(spec.b * ts) + spec.c_y * ts + spec.d_y
    scale = [(float(xs.min()), float(xs.max())), (float(ys.min()), float(ys.max()))]
    frames = [
        [
            bin_value(float(x), scale[0][0], scale[0][1], spec.bin_range),
            bin_value(float(y), scale[1][0], scale[1][1], spec.bin_range),
        ]
        for x, y in zip(xs, ys)
    ]
    rate = n_loop / period
    boundary = spec.loops_context * n_loop
    context = MotionTrace(frames[:boundary], spec.bin_range, rate, scale)
    target = MotionTrace(frames[boundary:], spec.bin_range, rate, scale)
    return context, target


# ---------------------------------------------------------------------------
# Table sweeping


@dataclass
class SweepParams:
    sweeps: int = 9
    rate_hz: float = 3.0
    noise: float = 0.01
    bin_range: tuple[int, int] = (0, 100)


def synthesize_sweep_demo(params: SweepParams | None = None, seed: int = 0) -> MotionTrace:
    """Synthetic 7-dim (xyz + unit quaternion) zigzag sweep at ~3 Hz.

    The x axis traces `sweeps` strokes (triangle wave), y advances slowly
    across the table, z stays near the surface, and the quaternion wobbles
    slightly around identity with its scalar part kept non-negative.
    Duration lands in 20-30 s, i.e. roughly 60-90 frames at 3 Hz.
    """
    params = params or SweepParams()
    rng = random.Random(seed)
    per_stroke = rng.randint(7, 10)  # frames per stroke -> 20-30 s overall
    n = params.sweeps * per_stroke
    raw = np.zeros((n, 7))
    for i in range(n):
        stroke, phase = divmod(i, per_stroke)
        frac = phase / per_stroke
        x = 0.2 + 0.6 * (frac if stroke % 2 == 0 else 1.0 - frac)
        y = 0.2 + 0.6 * (i / max(1, n - 1))
        z = 0.1
        raw[i, 0] = x + rng.gauss(0, params.noise)
        raw[i, 1] = y + rng.gauss(0, params.noise)
        raw[i, 2] = z + rng.gauss(0, params.noise)
        quat = np.array(
            [
                1.0,
                rng.gauss(0, 2 * params.noise),
                rng.gauss(0, 2 * params.noise),
                rng.gauss(0, 2 * params.noise),
            ]
        )
        quat /= np.linalg.norm(quat)
        if quat[0] < 0:
            quat = -quat
        raw[i, 3:] = quat
    scale = [(float(raw[:, d].min()), float(raw[:, d].max())) for d in range(7)]
    frames = [
        [bin_value(float(raw[i, d]), scale[d][0], scale[d][1], params.bin_range) for d in range(7)]
        for i in range(n)
    ]
    return MotionTrace(frames, params.bin_range, params.rate_hz, scale)


def split_two_thirds(trace: MotionTrace) -> tuple[MotionTrace, MotionTrace]:
    """Demonstration split used for sweep scoring: 2/3 context, 1/3 target."""
    cut = (2 * len(trace.frames)) // 3
    return (
        MotionTrace(trace.frames[:cut], trace.bin_range, trace.rate_hz, trace.scale),
        MotionTrace(trace.frames[cut:], trace.bin_range, trace.rate_hz, trace.scale),
    )


def save_trace(trace: MotionTrace, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{trace.dims} {trace.rate_hz} {trace.bin_range[0]} {trace.bin_range[1]}\n")
        for frame in trace.frames:
            fh.write(" ".join(str(v) for v in frame) + "\n")


def load_trace(path) -> MotionTrace:
    """Read a trace file: header "D rate_hz bin_lo bin_hi", one frame per line."""
    with open(path, encoding="utf-8") as fh:
        lines = [line.strip() for line in fh if line.strip()]
    if not lines:
        raise StructureError(f"{path}: empty trace file")
    header = lines[0].split()
    if len(header) != 4:
        raise StructureError(f"{path}: header must be 'D rate_hz bin_lo bin_hi'")
    dims = int(header[0])
    rate = float(header[1])
    bin_range = (int(header[2]), int(header[3]))
    frames = []
    for i, line in enumerate(lines[1:], start=1):
        frame = [int(v) for v in line.split()]
        if len(frame) != dims:
            raise StructureError(f"{path}: line {i} has {len(frame)} dims, expected {dims}")
        frames.append(frame)
    return MotionTrace(frames, bin_range, rate)
