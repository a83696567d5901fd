"""Reward-conditioned context building and online improvement loops.

Trajectories are kept in a buffer sorted ascending by total reward; a
prompt is the highest-reward records that fit the token budget, followed
by a target line asking for more reward than anything seen so far. After
each rollout the trajectory is relabeled with the reward it actually
achieved and inserted back in sorted position.
"""

from __future__ import annotations

import bisect
import random
import re
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

from . import codec
from .codec import CodecProfile, DEFAULT_PROFILE, estimate_tokens
from .errors import DomainError, StructureError

ORDERINGS = ("sorted_asc", "shuffled", "sorted_no_rewards", "unsorted_with_rewards")


@dataclass
class TrajRecord:
    reward: int
    body: str  # encoded trajectory, without the "<reward>: " prefix
    step_count: int = 0
    env_tag: str = ""


class Buffer:
    """Trajectory records kept sorted ascending by reward (stable on ties)."""

    def __init__(self, records: Sequence[TrajRecord] = ()):
        self.records: list[TrajRecord] = []
        self.arrival: list[TrajRecord] = []
        for record in records:
            self.insert(record)

    def insert(self, record: TrajRecord) -> None:
        rewards = [r.reward for r in self.records]
        self.records.insert(bisect.bisect_right(rewards, record.reward), record)
        self.arrival.append(record)

    def __len__(self) -> int:
        return len(self.records)

    @property
    def max_reward(self) -> int:
        if not self.records:
            raise DomainError("buffer is empty")
        return self.records[-1].reward


@dataclass
class ImproveConfig:
    token_budget: int = 1024
    target_offset_max: int = 20
    ordering: str = "sorted_asc"
    retries_per_action: int = 2
    temperature: float = 0.7
    token_counter: Callable[[str], int] = estimate_tokens

    def __post_init__(self):
        if self.token_budget <= 0:
            raise DomainError("token_budget must be > 0")
        if self.target_offset_max < 1:
            raise DomainError("target_offset_max must be >= 1")
        if self.ordering not in ORDERINGS:
            raise DomainError(f"ordering must be one of {ORDERINGS}")


def propose_target(buffer: Buffer, rng: random.Random, cfg: ImproveConfig) -> int:
    """Maximum seen reward plus a uniform offset in 1..target_offset_max."""
    return buffer.max_reward + rng.randint(1, cfg.target_offset_max)


@dataclass
class ContextBuild:
    prompt: str
    included: int
    truncated: bool


def build_context(
    buffer: Buffer,
    cfg: ImproveConfig,
    target_reward: int,
    partial_body: str,
    rng: random.Random | None = None,
) -> ContextBuild:
    """Assemble the prompt: fitting history lines plus the open target line.

    Records are taken greedily from the highest reward down while the
    whole prompt stays within the token budget, then arranged per
    cfg.ordering; the final line "<target_reward>: <partial_body>" is
    always present even when nothing else fits.
    """
    trailer = f"{target_reward}: {partial_body}"

    def render(records: Sequence[TrajRecord]) -> list[str]:
        if cfg.ordering == "sorted_no_rewards":
            return [r.body for r in records]
        return [f"{r.reward}: {r.body}" for r in records]

    def assemble(records: Sequence[TrajRecord]) -> str:
        return "\n".join(render(records) + [trailer])

    selected: list[TrajRecord] = []
    for record in reversed(buffer.records):  # highest reward first
        if cfg.token_counter(assemble(selected + [record])) > cfg.token_budget:
            break
        selected.append(record)

    if cfg.ordering in ("sorted_asc", "sorted_no_rewards"):
        selected.sort(key=lambda r: r.reward)
    elif cfg.ordering == "shuffled":
        (rng or random.Random()).shuffle(selected)
    else:  # unsorted_with_rewards: buffer arrival order
        chosen = set(map(id, selected))
        selected = [r for r in buffer.arrival if id(r) in chosen]

    return ContextBuild(
        prompt=assemble(selected),
        included=len(selected),
        truncated=len(selected) < len(buffer.records),
    )


def parse_action(text: str, action_space: Sequence[int]) -> Optional[int]:
    """First integer token of a completion, if it is a legal action."""
    match = re.search(r"-?\d+", text)
    if not match:
        return None
    action = int(match.group())
    return action if action in action_space else None


@dataclass
class EpisodeResult:
    record: TrajRecord
    fallback_count: int = 0
    model_error: bool = False


def run_episode(
    model,
    env,
    buffer: Buffer,
    cfg: ImproveConfig,
    rng: random.Random,
    profile: CodecProfile = DEFAULT_PROFILE,
    env_tag: str = "",
) -> EpisodeResult:
    """One closed-loop episode: per-step prompting, then relabel and insert.

    The environment must be freshly reset. Each step rebuilds the context
    with the current partial trajectory and asks for the next action; an
    unparseable completion is retried, then replaced by a uniformly random
    legal action (counted in fallback_count). The finished trajectory is
    relabeled with the reward actually achieved and inserted sorted.
    """
    from .models import CompletionRequest, TransportError, complete

    target = propose_target(buffer, rng, cfg) if len(buffer) else 100
    steps: list = [list(env.obs)]
    fallback_count = 0
    model_error = False
    terminal = False
    reward = None
    while not terminal:
        action = None
        if not model_error:
            partial = codec.encode_steps_body(steps, profile, open_episode=True)
            prompt = build_context(buffer, cfg, target, partial, rng=rng).prompt
            request = CompletionRequest(
                prompt=prompt,
                max_tokens=4,
                stop=(profile.step_delimiter, "\n"),
                temperature=cfg.temperature,
            )
            for _ in range(1 + cfg.retries_per_action):
                try:
                    action = parse_action(complete(model, request), env.action_space)
                except TransportError:
                    model_error = True
                    break
                if action is not None:
                    break
        if action is None:
            action = rng.choice(list(env.action_space))
            fallback_count += 1
        obs, terminal, reward = env.step(action)
        steps.append(action)
        steps.append(list(obs))
    body = codec.encode_steps_body(steps, profile)
    record = TrajRecord(
        reward=int(reward), body=body, step_count=(len(steps) - 1) // 2, env_tag=env_tag
    )
    buffer.insert(record)
    return EpisodeResult(record=record, fallback_count=fallback_count, model_error=model_error)


def run_random_episode(
    env, rng: random.Random, profile: CodecProfile = DEFAULT_PROFILE, env_tag: str = ""
) -> TrajRecord:
    """Roll the environment with uniformly random actions; used for warmup."""
    steps: list = [list(env.obs)]
    terminal = False
    reward = None
    while not terminal:
        action = rng.choice(list(env.action_space))
        obs, terminal, reward = env.step(action)
        steps.append(action)
        steps.append(list(obs))
    return TrajRecord(
        reward=int(reward),
        body=codec.encode_steps_body(steps, profile),
        step_count=(len(steps) - 1) // 2,
        env_tag=env_tag,
    )


def run_online(
    model,
    env_factory: Callable[[], object],
    episodes: int,
    warmup: int,
    cfg: ImproveConfig,
    seed: int = 0,
    env_tag: str = "",
) -> dict:
    """Warm the buffer with random-policy episodes, then run model episodes.

    Returns the learning curve: one row per episode with the achieved
    return, the running maximum, the fallback count, and the full encoded
    body (enough to re-render trajectory-evolution plots). Fully
    reproducible for a fixed seed and deterministic model.
    """
    if warmup < 1:
        raise DomainError("warmup must be >= 1")
    rng = random.Random(seed)
    buffer = Buffer()
    curve = []
    running_max = None
    for episode in range(warmup + episodes):
        env = env_factory()
        env.reset(seed=rng.randrange(2**32))
        if episode < warmup:
            record = run_random_episode(env, rng, env_tag=env_tag)
            buffer.insert(record)
            fallbacks = 0
            errored = False
        else:
            result = run_episode(model, env, buffer, cfg, rng, env_tag=env_tag)
            record = result.record
            fallbacks = result.fallback_count
            errored = result.model_error
        running_max = record.reward if running_max is None else max(running_max, record.reward)
        curve.append(
            {
                "episode": episode,
                "phase": "warmup" if episode < warmup else "model",
                "return": record.reward,
                "running_max": running_max,
                "fallbacks": fallbacks,
                "errored": errored,
                "body": record.body,
            }
        )
    return {
        "curve": curve,
        "episodes": episodes,
        "warmup": warmup,
        "seed": seed,
        "final_max": running_max,
        "buffer_size": len(buffer),
    }


# ---------------------------------------------------------------------------
# Offline trajectory extrapolation (marker-in-cup style)


def marker_records(context: Sequence[tuple[int, Sequence[Sequence[int]]]],
                   profile: CodecProfile = DEFAULT_PROFILE) -> list[TrajRecord]:
    return [
        TrajRecord(
            reward=reward,
            body=codec.encode_states_body(traj, profile),
            step_count=len(traj),
            env_tag="marker",
        )
        for reward, traj in context
    ]


def marker_improve(
    model,
    scene,
    cfg: ImproveConfig,
    context: Sequence[tuple[int, Sequence[Sequence[int]]]],
    start_state: Sequence[int] | None = None,
    rng: random.Random | None = None,
    profile: CodecProfile = DEFAULT_PROFILE,
) -> dict:
    """Ask for a maximal-reward trajectory from the start state and score it.

    The prompt is the ordered context plus the line "100: <start state>";
    the completion is parsed into states, truncated or frozen-padded to the
    scene's fixed length, and scored by final distance to the cup.
    """
    from .models import CompletionRequest, complete

    buffer = Buffer(marker_records(context, profile))
    start = list(start_state) if start_state is not None else list(context[0][1][0])
    partial = codec.encode_states_body([start], profile)
    built = build_context(buffer, cfg, 100, partial, rng=rng)
    n_states = scene.traj_len
    request = CompletionRequest(
        prompt=built.prompt,
        max_tokens=8 * n_states,
        stop=("\n",),
        temperature=cfg.temperature,
    )
    completion = complete(model, request)
    values = [int(v) for v in re.findall(r"-?\d+", completion)]
    states = [values[i : i + 3] for i in range(0, len(values) - 2, 3)]
    lo, hi = scene.bin_range
    states = [[min(hi, max(lo, v)) for v in s] for s in states]
    trajectory = [start] + states
    padded = False
    if len(trajectory) < n_states:
        padded = True
        trajectory += [list(trajectory[-1])] * (n_states - len(trajectory))
    trajectory = trajectory[:n_states]
    return {
        "trajectory": trajectory,
        "reward": scene.score_trajectory(trajectory),
        "padded": padded,
        "prompt": built.prompt,
    }


# ---------------------------------------------------------------------------
# Clicker-training context


def clicker_build_context(
    history: Sequence[tuple[int, Sequence[int], Sequence[int]]],
    current_obs: Sequence[int],
    budget: int = 1024,
    profile: CodecProfile = DEFAULT_PROFILE,
    token_counter: Callable[[str], int] = estimate_tokens,
) -> str:
    """Equal counts of recent reward-0 and reward-1 tuples, zeros first.

    n is the largest equal count that fits the budget; with no positive
    (or no negative) examples yet, only the current-observation line is
    emitted. The prompt ends with "1: <obs>; " so a completion supplies an
    action conditioned on reward 1.
    """
    obs_text = profile.cell_delimiter.join(str(v) for v in current_obs)
    trailer = f"1: {obs_text}; "
    zeros = [t for t in history if t[0] == 0]
    ones = [t for t in history if t[0] == 1]

    def assemble(n: int) -> str:
        lines = [
            codec.encode_clicker_tuple(r, o, a, profile)
            for r, o, a in zeros[len(zeros) - n :] + ones[len(ones) - n :]
        ]
        return "\n".join(lines + [trailer])

    for n in range(min(len(zeros), len(ones)), 0, -1):
        prompt = assemble(n)
        if token_counter(prompt) <= budget:
            return prompt
    return trailer
