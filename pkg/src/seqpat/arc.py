"""Grid-puzzle suite loading, prompting, prediction parsing, and scoring.

Tasks follow the public interchange format: each task is a JSON record
with "train" and "test" arrays of {"input", "output"} 2D integer grids.
A task counts as solved only when every test output is predicted exactly.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import random
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

from . import codec
from .codec import Alphabet, CodecProfile, DEFAULT_PROFILE
from .errors import DomainError, ParseError, StructureError

log = logging.getLogger(__name__)

Grid = list[list[int]]

MAX_SIDE = 30


def validate_grid(grid, where: str = "grid") -> None:
    if not isinstance(grid, list) or not grid or not all(isinstance(r, list) and r for r in grid):
        raise StructureError(f"{where}: grid must be a non-empty 2D array")
    if len(grid) > MAX_SIDE or len(grid[0]) > MAX_SIDE:
        raise StructureError(f"{where}: grid exceeds {MAX_SIDE}x{MAX_SIDE}")
    width = len(grid[0])
    for r, row in enumerate(grid):
        if len(row) != width:
            raise StructureError(f"{where}: ragged grid at row {r}")
        for c, v in enumerate(row):
            if not isinstance(v, int) or isinstance(v, bool) or not 0 <= v <= 9:
                raise DomainError(f"{where}: cell ({r},{c}) = {v!r} outside 0-9")


@dataclass
class ArcTask:
    id: str
    train: list[tuple[Grid, Grid]]
    test: list[tuple[Grid, Grid]]

    def validate(self) -> None:
        if not self.train:
            raise StructureError(f"task {self.id}: train must be non-empty")
        if not 1 <= len(self.test) <= 3:
            raise StructureError(f"task {self.id}: expected 1-3 test pairs, got {len(self.test)}")
        for i, (gin, gout) in enumerate(self.train):
            validate_grid(gin, f"task {self.id} train[{i}].input")
            validate_grid(gout, f"task {self.id} train[{i}].output")
        for i, (gin, gout) in enumerate(self.test):
            validate_grid(gin, f"task {self.id} test[{i}].input")
            validate_grid(gout, f"task {self.id} test[{i}].output")


def _task_from_record(task_id: str, record: dict, where: str) -> ArcTask:
    try:
        train = [(p["input"], p["output"]) for p in record["train"]]
        test = [(p["input"], p["output"]) for p in record["test"]]
    except (KeyError, TypeError) as exc:
        raise StructureError(f"{where}: missing field {exc}") from None
    task = ArcTask(id=task_id, train=train, test=test)
    task.validate()
    return task


def load_suite(path) -> list[ArcTask]:
    """Load a directory of per-task JSON files (recursively), sorted by id.

    A single consolidated JSON file mapping id -> task record is accepted
    too. Malformed content raises with the file and field named.
    """
    path = Path(path)
    tasks: list[ArcTask] = []
    if path.is_file():
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
        for task_id in sorted(data):
            tasks.append(_task_from_record(task_id, data[task_id], str(path)))
        return tasks
    files = sorted(path.rglob("*.json"))
    for file in files:
        with open(file, encoding="utf-8") as fh:
            try:
                record = json.load(fh)
            except json.JSONDecodeError as exc:
                raise StructureError(f"{file}: invalid JSON ({exc})") from None
        tasks.append(_task_from_record(file.stem, record, str(file)))
    tasks.sort(key=lambda t: t.id)
    if not tasks:
        log.warning("no task files found under %s", path)
    return tasks


def write_suite(tasks: Sequence[ArcTask], directory) -> None:
    """Write tasks as per-task JSON files in the interchange format."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for task in tasks:
        record = {
            "train": [{"input": i, "output": o} for i, o in task.train],
            "test": [{"input": i, "output": o} for i, o in task.test],
        }
        with open(directory / f"{task.id}.json", "w", encoding="utf-8") as fh:
            json.dump(record, fh, separators=(",", ":"))


def corpus_hash(tasks: Sequence[ArcTask]) -> str:
    payload = json.dumps(
        [[t.id, t.train, t.test] for t in tasks], separators=(",", ":"), sort_keys=True
    )
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


# ---------------------------------------------------------------------------
# Offline corpus
#
# The real 800-task public corpus is loaded with load_suite when available;
# this generator provides a deterministic stand-in with the same format and
# statistics (1-3 test pairs, ~3 train pairs, variable grid shapes) so the
# harness can be exercised fully offline.


def _transformations(rng: random.Random):
    def tile_double(g):
        return [row + row for row in g] + [row + row for row in g]

    color_map = list(range(10))
    rng.shuffle(color_map)
    return [
        ("identity", lambda g: [row[:] for row in g]),
        ("hflip", lambda g: [row[::-1] for row in g]),
        ("vflip", lambda g: [row[:] for row in g[::-1]]),
        ("transpose", lambda g: [list(col) for col in zip(*g)]),
        ("rot180", lambda g: [row[::-1] for row in g[::-1]]),
        ("recolor", lambda g: [[color_map[v] for v in row] for row in g]),
        ("tile_double", tile_double),
        ("pad_border", lambda g: [[0] * (len(g[0]) + 2)]
         + [[0] + row + [0] for row in g]
         + [[0] * (len(g[0]) + 2)]),
    ]


def make_offline_corpus(n_tasks: int = 800, seed: int = 0) -> list[ArcTask]:
    """Deterministic synthetic task suite in the interchange format."""
    rng = random.Random(seed)
    tasks = []
    for i in range(n_tasks):
        name, fn = _transformations(rng)[rng.randrange(8)]
        n_train = rng.choice((2, 3, 3, 4))
        n_test = rng.choice((1, 1, 2, 3))
        pairs = []
        for _ in range(n_train + n_test):
            h = rng.randint(2, 8)
            w = rng.randint(2, 8)
            grid = [[rng.randint(0, 9) for _ in range(w)] for _ in range(h)]
            pairs.append((grid, fn(grid)))
        tasks.append(
            ArcTask(id=f"synth{i:04d}", train=pairs[:n_train], test=pairs[n_train:])
        )
    return tasks


def default_suite() -> list[ArcTask]:
    """The real corpus when SEQPAT_ARC_DIR points at it, else the bundled stand-in."""
    override = os.environ.get("SEQPAT_ARC_DIR")
    if override:
        return load_suite(override)
    return make_offline_corpus()


# ---------------------------------------------------------------------------
# Prompting and scoring


def build_prompt(
    task: ArcTask,
    test_index: int = 0,
    profile: CodecProfile = DEFAULT_PROFILE,
    alphabet: Alphabet | None = None,
) -> str:
    """Render train pairs and the query input as header/grid blocks.

    Each train pair contributes "input:\\n<grid>\\noutput:\\n<grid>\\n---\\n";
    the prompt ends with the test input block and an open "output:" header.
    Cell digits pass through the alphabet when one is given; headers and
    delimiters stay fixed.
    """
    if not 0 <= test_index < len(task.test):
        raise DomainError(f"test_index {test_index} out of range for task {task.id}")
    in_header, out_header = profile.io_headers
    parts = []
    for gin, gout in task.train:
        parts.append(
            f"{in_header}\n{codec.encode_grid(gin, profile, alphabet)}\n"
            f"{out_header}\n{codec.encode_grid(gout, profile, alphabet)}\n"
            f"{profile.example_delimiter}\n"
        )
    parts.append(
        f"{in_header}\n{codec.encode_grid(task.test[test_index][0], profile, alphabet)}\n"
        f"{out_header}\n"
    )
    return "".join(parts)


def parse_prediction(
    text: str,
    profile: CodecProfile = DEFAULT_PROFILE,
    alphabet: Alphabet | None = None,
) -> Optional[Grid]:
    """Rows up to a blank line / example delimiter / end of text; None on failure."""
    rows = []
    for line in text.split(profile.row_delimiter):
        stripped = line.strip()
        if not stripped or stripped == profile.example_delimiter.strip():
            break
        rows.append(stripped)
        if len(rows) > MAX_SIDE:
            return None
    if not rows:
        return None
    try:
        return codec.decode_grid(profile.row_delimiter.join(rows), profile, alphabet)
    except (ParseError, StructureError, DomainError):
        return None


def oracle_model(
    suite: Sequence[ArcTask],
    profile: CodecProfile = DEFAULT_PROFILE,
    alphabet: Alphabet | None = None,
):
    """Scripted model answering every prompt with its ground-truth encoding."""
    from .models import ScriptedModel

    table = {}
    for task in suite:
        for i, (_, gout) in enumerate(task.test):
            table[build_prompt(task, i, profile, alphabet)] = (
                codec.encode_grid(gout, profile, alphabet) + "\n" + profile.example_delimiter
            )
    return ScriptedModel(table)


def run_eval(
    model,
    suite: Sequence[ArcTask],
    alphabet: Alphabet | None = None,
    profile: CodecProfile = DEFAULT_PROFILE,
    parallelism: int = 1,
    candidates: int = 1,
    alphabet_seed: int | None = None,
) -> dict:
    """Score the suite: a task is solved iff every test output matches exactly."""
    from .models import CompletionRequest, TransportError, complete

    def eval_task(task: ArcTask) -> dict:
        record = {"task_id": task.id, "solved": False, "tests": [], "error": None}
        all_match = True
        for i, (_, gout) in enumerate(task.test):
            prompt = build_prompt(task, i, profile, alphabet)
            height, width = len(gout), len(gout[0])
            max_tokens = 2 * (height * width + height) + 8
            matched = False
            completion = ""
            for _ in range(max(1, candidates)):
                try:
                    completion = complete(
                        model,
                        CompletionRequest(
                            prompt=prompt,
                            max_tokens=max_tokens,
                            stop=(profile.example_delimiter,),
                        ),
                    )
                except TransportError as exc:
                    record["error"] = str(exc)
                    break
                predicted = parse_prediction(completion, profile, alphabet)
                if predicted == gout:
                    matched = True
                    break
            record["tests"].append(
                {"index": i, "matched": matched, "completion_chars": len(completion)}
            )
            all_match = all_match and matched
        record["solved"] = all_match and record["error"] is None
        return record

    if parallelism > 1:
        with ThreadPoolExecutor(max_workers=parallelism) as pool:
            records = list(pool.map(eval_task, suite))
    else:
        records = [eval_task(t) for t in suite]
    solved = sum(r["solved"] for r in records)
    return {
        "records": records,
        "solved": solved,
        "total": len(suite),
        "corpus_hash": corpus_hash(suite),
        "alphabet_seed": alphabet_seed,
    }
