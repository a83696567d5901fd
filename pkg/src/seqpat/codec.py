"""Bit-exact text codecs for grids, token sequences, and trajectories.

Everything in this module is a pure function: encoders and decoders are
exact inverses on valid inputs, and alphabet sampling depends only on
(seed, pool). Prompt text produced here is the single source of truth
for every harness; fixtures in the test suite pin the exact bytes.
"""

from __future__ import annotations

import random
import re
from dataclasses import dataclass, field
from importlib import resources
from typing import Sequence

from .errors import ConfigError, DomainError, MappingError, ParseError, StructureError

# A token sequence is a plain list/tuple of token texts; digits 0-9 are the
# native alphabet for grids and generated sequences.
TokenSeq = Sequence[str]
DIGIT_TOKENS = tuple(str(d) for d in range(10))

# Characters reserved for structural delimiters; no token may contain them.
RESERVED_CHARS = ",;:\n"


def is_valid_token(text: str) -> bool:
    """True iff text is usable as a token: non-empty, no delimiter chars, no whitespace."""
    if not text:
        return False
    for ch in text:
        if ch in RESERVED_CHARS or ch.isspace():
            return False
    return True


@dataclass(frozen=True)
class CodecProfile:
    """Delimiters and headers used by every encoder in the package."""

    cell_delimiter: str = ", "
    row_delimiter: str = "\n"
    example_delimiter: str = "---"
    io_headers: tuple[str, str] = ("input:", "output:")
    dim_delimiter: str = " "
    step_delimiter: str = ", "

    def delimiters(self) -> tuple[str, ...]:
        return (
            self.cell_delimiter,
            self.row_delimiter,
            self.example_delimiter,
            self.dim_delimiter,
            self.step_delimiter,
        )


DEFAULT_PROFILE = CodecProfile()


@dataclass(frozen=True)
class Alphabet:
    """Bijective mapping from digits 0-9 (or a subset) to replacement tokens."""

    mapping: dict[int, str]

    def __post_init__(self):
        seen = set()
        for digit, token in self.mapping.items():
            if not isinstance(digit, int) or not 0 <= digit <= 9:
                raise DomainError(f"alphabet domain must be digits 0-9, got {digit!r}")
            if not is_valid_token(token):
                raise DomainError(f"invalid alphabet token {token!r} for digit {digit}")
            if token in seen:
                raise DomainError(f"alphabet not bijective: token {token!r} repeated")
            seen.add(token)

    @classmethod
    def identity(cls) -> "Alphabet":
        return cls({d: str(d) for d in range(10)})

    @property
    def inverse(self) -> dict[str, int]:
        return {token: digit for digit, token in self.mapping.items()}

    def token_for(self, digit: int) -> str:
        try:
            return self.mapping[digit]
        except KeyError:
            raise MappingError(f"digit {digit} not in alphabet domain") from None

    def digit_for(self, token: str) -> int:
        inv = self.inverse
        try:
            return inv[token]
        except KeyError:
            raise MappingError(f"token {token!r} not in alphabet image") from None


def check_delimiter_safety(alphabet: Alphabet, profile: CodecProfile = DEFAULT_PROFILE) -> None:
    """Raise ConfigError if any alphabet token collides with an active delimiter."""
    for token in alphabet.mapping.values():
        for delim in profile.delimiters():
            if delim in token or token in delim:
                raise ConfigError(
                    f"alphabet token {token!r} collides with delimiter {delim!r}"
                )


def sample_alphabet(
    seed: int,
    pool: Sequence[str],
    profile: CodecProfile = DEFAULT_PROFILE,
) -> Alphabet:
    """Draw 10 distinct tokens from the pool, one per digit, deterministically.

    Pool entries failing token validity (or colliding with the profile's
    delimiters) are filtered out first; duplicates keep their first
    occurrence so the candidate order is stable.
    """
    candidates = []
    seen = set()
    for text in pool:
        if text in seen or not is_valid_token(text):
            continue
        if any(d in text or text in d for d in profile.delimiters()):
            continue
        seen.add(text)
        candidates.append(text)
    if len(candidates) < 10:
        raise ConfigError(
            f"alphabet pool has only {len(candidates)} usable tokens, need 10"
        )
    rng = random.Random(seed)
    chosen = rng.sample(candidates, 10)
    alphabet = Alphabet({d: chosen[d] for d in range(10)})
    check_delimiter_safety(alphabet, profile)
    return alphabet


def load_pool(path) -> list[str]:
    """Read an alphabet pool file: UTF-8, one candidate token per line."""
    with open(path, encoding="utf-8") as fh:
        return [line.strip() for line in fh if line.strip()]


def bundled_pool() -> list[str]:
    """The packaged candidate-token pool (>= 5000 printable tokens)."""
    text = resources.files("seqpat").joinpath("data/token_pool.txt").read_text("utf-8")
    return [line for line in text.splitlines() if line]


# ---------------------------------------------------------------------------
# Token remapping


def remap(seq: TokenSeq, alphabet: Alphabet) -> list[str]:
    """Replace each digit token by its alphabet image."""
    out = []
    for token in seq:
        try:
            digit = int(token)
        except ValueError:
            raise MappingError(f"token {token!r} is not a digit") from None
        out.append(alphabet.token_for(digit))
    return out


def unremap(seq: TokenSeq, alphabet: Alphabet) -> list[str]:
    """Inverse of remap: alphabet image tokens back to digit tokens."""
    return [str(alphabet.digit_for(token)) for token in seq]


# ---------------------------------------------------------------------------
# Grid codec


def _check_grid(grid) -> None:
    if not grid or any(len(row) == 0 for row in grid):
        raise StructureError("grid must be non-empty")
    width = len(grid[0])
    for r, row in enumerate(grid):
        if len(row) != width:
            raise StructureError(f"ragged grid: row {r} has {len(row)} cells, expected {width}")
        for c, v in enumerate(row):
            if not isinstance(v, int) or isinstance(v, bool) or not 0 <= v <= 9:
                raise DomainError(f"grid cell ({r},{c}) = {v!r} outside 0-9")


def encode_grid(
    grid: Sequence[Sequence[int]],
    profile: CodecProfile = DEFAULT_PROFILE,
    alphabet: Alphabet | None = None,
) -> str:
    """Render a rectangular 0-9 grid row by row, top to bottom."""
    _check_grid(grid)
    rows = []
    for row in grid:
        cells = [alphabet.token_for(v) if alphabet else str(v) for v in row]
        rows.append(profile.cell_delimiter.join(cells))
    return profile.row_delimiter.join(rows)


def decode_grid(
    text: str,
    profile: CodecProfile = DEFAULT_PROFILE,
    alphabet: Alphabet | None = None,
) -> list[list[int]]:
    """Parse encode_grid output back into a grid; positions reported on failure."""
    lines = text.split(profile.row_delimiter)
    grid: list[list[int]] = []
    for r, line in enumerate(lines):
        cells = line.rstrip().split(profile.cell_delimiter)
        row = []
        for c, cell in enumerate(cells):
            cell = cell.strip()
            if alphabet is not None:
                try:
                    row.append(alphabet.digit_for(cell))
                except MappingError:
                    raise ParseError(
                        f"unknown token {cell!r} at row {r} col {c}", row=r, col=c
                    ) from None
            else:
                try:
                    row.append(int(cell))
                except ValueError:
                    raise ParseError(
                        f"non-integer cell {cell!r} at row {r} col {c}", row=r, col=c
                    ) from None
        grid.append(row)
    widths = {len(row) for row in grid}
    if len(widths) > 1:
        raise StructureError(f"ragged rows: widths {sorted(widths)}")
    _check_grid(grid)
    return grid


# ---------------------------------------------------------------------------
# Trajectory codecs (reward-prefixed lines)


def _encode_vec(vec: Sequence[int], profile: CodecProfile) -> str:
    return profile.dim_delimiter.join(str(v) for v in vec)


def _decode_vec(text: str, profile: CodecProfile) -> list[int]:
    parts = [p for p in text.split(profile.dim_delimiter) if p]
    try:
        return [int(p) for p in parts]
    except ValueError:
        raise ParseError(f"non-integer state component in {text!r}") from None


def encode_states_body(states: Sequence[Sequence[int]], profile: CodecProfile = DEFAULT_PROFILE) -> str:
    """Body of a states-only trajectory line: states joined by the step delimiter."""
    dims = {len(s) for s in states}
    if len(dims) > 1:
        raise StructureError(f"state dimension mismatch: {sorted(dims)}")
    return profile.step_delimiter.join(_encode_vec(s, profile) for s in states)


def encode_reward_states(
    reward: int,
    states: Sequence[Sequence[int]],
    profile: CodecProfile = DEFAULT_PROFILE,
) -> str:
    """"<reward>: <s1>, <s2>, ..." with dims space-joined inside each state."""
    return f"{reward}: " + encode_states_body(states, profile)


def decode_reward_states(
    text: str,
    profile: CodecProfile = DEFAULT_PROFILE,
) -> tuple[int, list[list[int]]]:
    reward_text, sep, body = text.partition(": ")
    if not sep:
        raise ParseError(f"missing reward prefix in {text!r}")
    try:
        reward = int(reward_text)
    except ValueError:
        raise ParseError(f"non-integer reward {reward_text!r}") from None
    if not body:
        return reward, []
    states = [_decode_vec(part, profile) for part in body.split(profile.step_delimiter)]
    dims = {len(s) for s in states}
    if len(dims) > 1:
        raise StructureError(f"state dimension mismatch: {sorted(dims)}")
    return reward, states


def encode_steps_body(
    steps: Sequence,
    profile: CodecProfile = DEFAULT_PROFILE,
    open_episode: bool = False,
) -> str:
    """Body of an obs/action alternation: "<obs>, <act>, <obs>, ...".

    steps alternates observation vectors and integer actions, starting with
    an observation and optionally ending on one. open_episode appends a
    trailing step delimiter so a model completion starts at the next action.
    """
    parts = []
    for i, item in enumerate(steps):
        if i % 2 == 0:
            if isinstance(item, int):
                raise StructureError(f"expected observation at position {i}, got action {item!r}")
            parts.append(_encode_vec(item, profile))
        else:
            if not isinstance(item, int) or isinstance(item, bool):
                raise StructureError(f"expected action at position {i}, got {item!r}")
            parts.append(str(item))
    body = profile.step_delimiter.join(parts)
    if open_episode:
        body += profile.step_delimiter
    return body


def encode_reward_obs_actions(
    reward: int,
    steps: Sequence,
    profile: CodecProfile = DEFAULT_PROFILE,
    open_episode: bool = False,
) -> str:
    """"<reward>: <obs>, <act>, <obs>, ..." (trailing delimiter iff open_episode)."""
    return f"{reward}: " + encode_steps_body(steps, profile, open_episode=open_episode)


def decode_reward_obs_actions(
    text: str,
    profile: CodecProfile = DEFAULT_PROFILE,
) -> tuple[int, list, bool]:
    """Inverse of encode_reward_obs_actions; returns (reward, steps, open_episode)."""
    reward_text, sep, body = text.partition(": ")
    if not sep:
        raise ParseError(f"missing reward prefix in {text!r}")
    try:
        reward = int(reward_text)
    except ValueError:
        raise ParseError(f"non-integer reward {reward_text!r}") from None
    open_episode = body.endswith(profile.step_delimiter)
    if open_episode:
        body = body[: -len(profile.step_delimiter)]
    steps: list = []
    if body:
        for i, part in enumerate(body.split(profile.step_delimiter)):
            if i % 2 == 0:
                steps.append(_decode_vec(part, profile))
            else:
                try:
                    steps.append(int(part))
                except ValueError:
                    raise ParseError(f"non-integer action {part!r} at step {i}") from None
    return reward, steps, open_episode


def encode_clicker_tuple(
    reward: int,
    observation: Sequence[int],
    action: Sequence[int],
    profile: CodecProfile = DEFAULT_PROFILE,
) -> str:
    """"<reward>: <obs comma-joined>; <action comma-joined>" (6-dim obs, 3-dim action)."""
    if reward not in (0, 1):
        raise DomainError(f"clicker reward must be 0 or 1, got {reward!r}")
    if len(observation) != 6:
        raise StructureError(f"clicker observation must have 6 dims, got {len(observation)}")
    if len(action) != 3:
        raise StructureError(f"clicker action must have 3 dims, got {len(action)}")
    obs_text = profile.cell_delimiter.join(str(v) for v in observation)
    act_text = profile.cell_delimiter.join(str(v) for v in action)
    return f"{reward}: {obs_text}; {act_text}"


def decode_clicker_tuple(
    text: str,
    profile: CodecProfile = DEFAULT_PROFILE,
) -> tuple[int, list[int], list[int]]:
    reward_text, sep, body = text.partition(": ")
    if not sep:
        raise ParseError(f"missing reward prefix in {text!r}")
    obs_text, sep, act_text = body.partition("; ")
    if not sep:
        raise ParseError(f"missing observation/action separator in {text!r}")
    try:
        reward = int(reward_text)
        obs = [int(v) for v in obs_text.split(profile.cell_delimiter)]
        act = [int(v) for v in act_text.split(profile.cell_delimiter)]
    except ValueError:
        raise ParseError(f"non-integer field in clicker tuple {text!r}") from None
    if len(obs) != 6 or len(act) != 3:
        raise StructureError(f"clicker tuple has dims ({len(obs)}, {len(act)}), expected (6, 3)")
    return reward, obs, act


# ---------------------------------------------------------------------------
# Token counting

# One unit per maximal run of non-whitespace characters, except that the
# punctuation characters , ; : and newline each count as their own unit.
# This is a deterministic upper-bound proxy for model tokenizers, not an
# emulation of any particular one.
_TOKEN_UNIT = re.compile(r"[,;:\n]|[^\s,;:]+")


def estimate_tokens(text: str) -> int:
    """Heuristic token count for budgeting prompts; see _TOKEN_UNIT for the rule."""
    return len(_TOKEN_UNIT.findall(text))
