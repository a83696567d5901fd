"""Grammar-operator sequence-transformation benchmark.

Tasks are built by composing unary/binary list operators over contiguous
segments of the input sequence; difficulty is controlled by the sequence
length k and the operator count w. A depth-bounded enumerative searcher
doubles as an offline oracle for the same hypothesis space.
"""

from __future__ import annotations

import random
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

from . import codec
from .codec import Alphabet, DIGIT_TOKENS
from .errors import DomainError, StructureError

UNARY_OPS = ("copy", "reverse", "shift", "swap", "repeat", "echo")
BINARY_OPS = ("append", "prepend", "remove_first", "remove_second")
ALL_OPS = UNARY_OPS + BINARY_OPS

# shift is rotate-left-by-one; set to "right" to rotate the other way.
SHIFT_DIRECTION = "left"


def apply_op(name: str, *args):
    """Apply one grammar operator to 1 (unary) or 2 (binary) token tuples.

    copy(A)=A; reverse(A)=an..a1; shift(A)=a2..an a1; swap exchanges the
    first and last element; repeat(A)=A A; echo(A)=A an; append(A,B)=A B;
    prepend(A,B)=B A; remove_first(A,B)=B; remove_second(A,B)=A.
    """
    arity = 1 if name in UNARY_OPS else 2 if name in BINARY_OPS else None
    if arity is None:
        raise DomainError(f"unknown operator {name!r}")
    if len(args) != arity:
        raise StructureError(f"{name} takes {arity} argument(s), got {len(args)}")
    args = tuple(tuple(a) for a in args)
    if arity == 1 and len(args[0]) == 0:
        raise DomainError(f"{name} requires a non-empty argument")
    a = args[0]
    if name == "copy":
        return a
    if name == "reverse":
        return a[::-1]
    if name == "shift":
        if SHIFT_DIRECTION == "right":
            return a[-1:] + a[:-1]
        return a[1:] + a[:1]
    if name == "swap":
        if len(a) < 2:
            return a
        return a[-1:] + a[1:-1] + a[:1]
    if name == "repeat":
        return a + a
    if name == "echo":
        return a + a[-1:]
    b = args[1]
    if name == "append":
        return a + b
    if name == "prepend":
        return b + a
    if name == "remove_first":
        return b
    return a  # remove_second


# ---------------------------------------------------------------------------
# Programs


@dataclass(frozen=True)
class Leaf:
    index: int  # 1-based segment reference

    def __str__(self):
        return f"s{self.index}"


@dataclass(frozen=True)
class Node:
    op: str
    args: tuple

    def __str__(self):
        return f"({self.op} " + " ".join(str(a) for a in self.args) + ")"


@dataclass(frozen=True)
class Program:
    root: object  # Leaf | Node

    @property
    def op_count(self) -> int:
        def count(node):
            if isinstance(node, Leaf):
                return 0
            return 1 + sum(count(a) for a in node.args)

        return count(self.root)

    @property
    def leaf_indices(self) -> set[int]:
        found: set[int] = set()

        def walk(node):
            if isinstance(node, Leaf):
                found.add(node.index)
            else:
                for a in node.args:
                    walk(a)

        walk(self.root)
        return found

    def to_sexp(self) -> str:
        return str(self.root)

    @classmethod
    def from_sexp(cls, text: str) -> "Program":
        tokens = re.findall(r"\(|\)|[^\s()]+", text)
        pos = 0

        def parse():
            nonlocal pos
            tok = tokens[pos]
            pos += 1
            if tok == "(":
                op = tokens[pos]
                pos += 1
                args = []
                while tokens[pos] != ")":
                    args.append(parse())
                pos += 1
                if op not in ALL_OPS:
                    raise StructureError(f"unknown operator {op!r} in {text!r}")
                return Node(op, tuple(args))
            m = re.fullmatch(r"s(\d+)", tok)
            if not m:
                raise StructureError(f"bad leaf token {tok!r} in {text!r}")
            return Leaf(int(m.group(1)))

        root = parse()
        if pos != len(tokens):
            raise StructureError(f"trailing tokens in {text!r}")
        return cls(root)


def split_segments(seq: Sequence[str], partition: Sequence[int]) -> list[tuple[str, ...]]:
    """Cut seq into contiguous segments with the given positive lengths."""
    if sum(partition) != len(seq) or any(p < 1 for p in partition):
        raise StructureError(f"partition {partition} does not tile a length-{len(seq)} sequence")
    out = []
    at = 0
    for p in partition:
        out.append(tuple(seq[at : at + p]))
        at += p
    return out


def eval_program(program: Program, leaves: Sequence[Sequence[str]]) -> tuple[str, ...]:
    """Evaluate the expression tree bottom-up over segment values."""
    values = [tuple(leaf) for leaf in leaves]
    if any(len(v) == 0 for v in values):
        raise DomainError("all leaves must be non-empty")

    def ev(node):
        if isinstance(node, Leaf):
            if not 1 <= node.index <= len(values):
                raise StructureError(
                    f"leaf s{node.index} out of range for {len(values)} segments"
                )
            return values[node.index - 1]
        return apply_op(node.op, *[ev(a) for a in node.args])

    return ev(program.root)


# ---------------------------------------------------------------------------
# Task generation


@dataclass
class PCFGTask:
    k: int
    w: int
    program: Program
    partition: list[int]
    examples: list[tuple[list[str], list[str]]]
    query: tuple[list[str], list[str]]
    seed: int
    task_id: str = ""


def _sample_structure(w: int, min_slots: int, rng: random.Random):
    """Random tree with exactly w operator nodes and >= min_slots leaf slots.

    At each operator slot, choose unary vs binary with probability 0.5 when
    both keep the slot requirement satisfiable; a subtree with b binary nodes
    has b+1 leaf slots, so a budget of w ops can produce at most w+1 slots.
    """
    if w == 0:
        return "leaf"
    unary_ok = min_slots <= w  # child of a unary node has w-1 ops left
    if unary_ok and rng.random() < 0.5:
        op = rng.choice(UNARY_OPS)
        return (op, _sample_structure(w - 1, min_slots, rng))
    op = rng.choice(BINARY_OPS)
    w_left = rng.randrange(w)  # remaining w-1 ops split between children
    w_right = w - 1 - w_left
    min_left = max(1, min_slots - (w_right + 1))
    left = _sample_structure(w_left, min_left, rng)
    slots_left = _count_slots(left)
    min_right = max(1, min_slots - slots_left)
    right = _sample_structure(w_right, min_right, rng)
    return (op, left, right)


def _count_slots(structure) -> int:
    if structure == "leaf":
        return 1
    if len(structure) == 2:
        return _count_slots(structure[1])
    return _count_slots(structure[1]) + _count_slots(structure[2])


def _label_structure(structure, labels):
    """Replace leaf slots with Leaf(index) nodes, consuming labels in-order."""
    if structure == "leaf":
        return Leaf(next(labels))
    if len(structure) == 2:
        return Node(structure[0], (_label_structure(structure[1], labels),))
    return Node(
        structure[0],
        (_label_structure(structure[1], labels), _label_structure(structure[2], labels)),
    )


def sample_program(
    k: int, w: int, max_leaves: int = 3, rng: random.Random | None = None
) -> tuple[Program, list[int]]:
    """Sample a program with exactly w operator nodes plus a matching partition.

    The segment count m is uniform over [1, min(max_leaves, k, w+1)], the
    partition is a uniform composition of k into m positive parts, and leaf
    slots are labeled so that every segment appears at least once.
    """
    if k < 1:
        raise DomainError(f"k must be >= 1, got {k}")
    if w < 0:
        raise DomainError(f"w must be >= 0, got {w}")
    rng = rng or random.Random()
    m = rng.randint(1, max(1, min(max_leaves, k, w + 1)))
    # uniform composition: m-1 distinct cut points among the k-1 gaps
    cuts = sorted(rng.sample(range(1, k), m - 1))
    partition = [b - a for a, b in zip([0] + cuts, cuts + [k])]
    structure = _sample_structure(w, m, rng)
    n_slots = _count_slots(structure)
    # surjective slot labeling: a permutation of 1..m lands in m random slots,
    # remaining slots draw uniformly
    slot_labels = [rng.randint(1, m) for _ in range(n_slots)]
    perm = list(range(1, m + 1))
    rng.shuffle(perm)
    for slot, label in zip(rng.sample(range(n_slots), m), perm):
        slot_labels[slot] = label
    root = _label_structure(structure, iter(slot_labels))
    program = Program(root)
    assert program.op_count == w
    assert program.leaf_indices == set(range(1, m + 1))
    return program, partition


def generate_task(
    k: int,
    w: int,
    n_examples: int = 4,
    max_leaves: int = 3,
    seed: int = 0,
    task_id: str = "",
) -> PCFGTask:
    """Generate one task: program + partition, i.i.d. digit inputs, computed outputs."""
    if n_examples < 1:
        raise DomainError("n_examples must be >= 1")
    rng = random.Random(seed)
    program, partition = sample_program(k, w, max_leaves=max_leaves, rng=rng)
    pairs = []
    for _ in range(n_examples + 1):
        inp = [rng.choice(DIGIT_TOKENS) for _ in range(k)]
        out = list(eval_program(program, split_segments(inp, partition)))
        pairs.append((inp, out))
    return PCFGTask(
        k=k,
        w=w,
        program=program,
        partition=partition,
        examples=pairs[:-1],
        query=pairs[-1],
        seed=seed,
        task_id=task_id,
    )


DEFAULT_K_SET = (1, 2, 4, 8, 16, 32)
DEFAULT_W_SET = (0, 1, 3, 7, 15, 31)


def suite_cells(k_set=DEFAULT_K_SET, w_set=DEFAULT_W_SET) -> list[tuple[int, int]]:
    """The benchmark grid, omitting degenerate cells with w >= k."""
    return [(k, w) for k in k_set for w in w_set if w < k]


def make_suite(
    k_set=DEFAULT_K_SET,
    w_set=DEFAULT_W_SET,
    n_per_cell: int = 100,
    seed: int = 0,
    n_examples: int = 4,
    max_leaves: int = 3,
) -> list[PCFGTask]:
    """Deterministic task suite over the (k, w) grid."""
    rng = random.Random(seed)
    tasks = []
    for k, w in suite_cells(k_set, w_set):
        for i in range(n_per_cell):
            task_seed = rng.randrange(2**32)
            tasks.append(
                generate_task(
                    k, w, n_examples=n_examples, max_leaves=max_leaves,
                    seed=task_seed, task_id=f"k{k}w{w}i{i:03d}",
                )
            )
    return tasks


# ---------------------------------------------------------------------------
# Prompt building / parsing

# Prompt format: space-prefixed tokens, "," between an input and its output,
# ";" between examples, and a trailing "," after the query input, e.g.
# " 5 3 0, 3 5; 7 6 1, 6 7; 9 2 3, 2 9; 4 8 5,". The expected completion is
# the spaced query output, e.g. " 8 4".


def _spaced(seq: Sequence[str]) -> str:
    return "".join(" " + t for t in seq)


def build_prompt(task: PCFGTask, alphabet: Alphabet | None = None) -> str:
    def render(seq):
        return _spaced(codec.remap(seq, alphabet) if alphabet else seq)

    parts = [render(inp) + "," + render(out) + ";" for inp, out in task.examples]
    parts.append(render(task.query[0]) + ",")
    return "".join(parts)


def render_completion(seq: Sequence[str], alphabet: Alphabet | None = None) -> str:
    return _spaced(codec.remap(seq, alphabet) if alphabet else seq)


def parse_completion(text: str, alphabet: Alphabet | None = None) -> list[str] | None:
    """Tokens of the first example in a completion; None when unusable."""
    head = re.split(r"[;\n]", text)[0]
    head = head.split(",")[0]
    tokens = head.split()
    if not tokens:
        return None
    if alphabet is not None:
        try:
            tokens = codec.unremap(tokens, alphabet)
        except Exception:
            return None
    return tokens


def parse_prompt(text: str) -> tuple[list[tuple[list[str], list[str]]], list[str]]:
    """Invert build_prompt (digit alphabet): (examples, query_input)."""
    chunks = [c for c in text.split(";") if c.strip()]
    if not chunks:
        raise StructureError("empty prompt")
    examples = []
    for chunk in chunks[:-1]:
        in_text, sep, out_text = chunk.partition(",")
        if not sep:
            raise StructureError(f"example without input/output separator: {chunk!r}")
        examples.append((in_text.split(), out_text.split()))
    query = chunks[-1]
    if not query.rstrip().endswith(","):
        raise StructureError("prompt does not end with a query input")
    return examples, query.rstrip()[:-1].split()


# ---------------------------------------------------------------------------
# Evaluation harness


def oracle_model(tasks: Sequence[PCFGTask], alphabet: Alphabet | None = None):
    """A scripted model that answers every task prompt with its ground truth."""
    from .models import ScriptedModel

    table = {
        build_prompt(t, alphabet): render_completion(t.query[1], alphabet) for t in tasks
    }
    return ScriptedModel(table)


def evaluate(
    model,
    tasks: Sequence[PCFGTask],
    alphabet: Alphabet | None = None,
    parallelism: int = 1,
    max_tokens: int = 256,
) -> dict:
    """Prompt the model on each task and score exact-match query accuracy.

    Returns a report dict with per-task records, per-(k, w) cell accuracy,
    and the aggregate accuracy over all tasks.
    """
    from .models import CompletionRequest, TransportError, complete

    def run_one(task: PCFGTask) -> dict:
        prompt = build_prompt(task, alphabet)
        record: dict = {
            "task_id": task.task_id,
            "k": task.k,
            "w": task.w,
            "prompt_chars": len(prompt),
            "completion": None,
            "parsed": None,
            "correct": False,
            "error": None,
        }
        try:
            completion = complete(
                model,
                CompletionRequest(prompt=prompt, max_tokens=max_tokens, stop=(";",)),
            )
        except TransportError as exc:
            record["error"] = str(exc)
            return record
        record["completion"] = completion
        parsed = parse_completion(completion, alphabet)
        if parsed is not None:
            record["parsed"] = parsed
            record["correct"] = parsed == list(task.query[1])
        return record

    if parallelism > 1:
        with ThreadPoolExecutor(max_workers=parallelism) as pool:
            records = list(pool.map(run_one, tasks))
    else:
        records = [run_one(t) for t in tasks]

    cells: dict[tuple[int, int], dict] = {}
    for task, record in zip(tasks, records):
        cell = cells.setdefault((task.k, task.w), {"k": task.k, "w": task.w, "n": 0, "correct": 0})
        cell["n"] += 1
        cell["correct"] += int(record["correct"])
    for cell in cells.values():
        cell["accuracy"] = cell["correct"] / cell["n"]
    total = len(records)
    return {
        "records": records,
        "cells": [cells[key] for key in sorted(cells)],
        "total": total,
        "correct": sum(r["correct"] for r in records),
        "accuracy": sum(r["correct"] for r in records) / total if total else 0.0,
    }


def format_cell_table(cells: Sequence[dict], k_set=DEFAULT_K_SET, w_set=DEFAULT_W_SET) -> str:
    """Aligned solve-rate table over the (k, w) grid, dashes where w >= k."""
    by_cell = {(c["k"], c["w"]): c for c in cells}
    header = "k\\w " + "".join(f"{w:>6}" for w in w_set)
    lines = [header]
    for k in k_set:
        row = [f"{k:<4}"]
        for w in w_set:
            if w >= k:
                row.append(f"{'-':>6}")
            elif (k, w) in by_cell:
                row.append(f"{100 * by_cell[(k, w)]['accuracy']:>6.0f}")
            else:
                row.append(f"{'':>6}")
        lines.append("".join(row))
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# Enumerative search (offline oracle)

_OPS_ALPHA = tuple(sorted(ALL_OPS))


def _compositions(total: int, parts: int):
    """Compositions of total into exactly `parts` positive parts, lexicographic."""
    if parts == 1:
        yield (total,)
        return
    for first in range(1, total - parts + 2):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


def enumerate_partitions(k: int, max_leaves: int) -> list[tuple[int, ...]]:
    """All partitions of k into at most max_leaves parts: fewest parts first, then lex."""
    out = []
    for m in range(1, min(max_leaves, k) + 1):
        out.extend(_compositions(k, m))
    return out


class _BudgetExhausted(Exception):
    pass


class _PartitionSpace:
    """Per-partition enumeration state: deduplicated value-vector levels.

    Level n holds candidates with exactly n operator nodes as tuples of
    (values, mask, node), where values is the per-example output tuple and
    mask is the bitmask of referenced segments. Within a level, later
    candidates whose (values, mask) already appeared are dropped: any tree
    built from a dropped candidate has an earlier, observationally identical
    twin built from the kept one, so the first consistent program in the
    full enumeration order is never lost.
    """

    def __init__(self, partition, example_inputs):
        self.partition = partition
        self.m = len(partition)
        self.full_mask = (1 << self.m) - 1
        segments = [split_segments(inp, partition) for inp in example_inputs]
        self.levels: list[list[tuple]] = []
        level0 = []
        seen = set()
        for i in range(1, self.m + 1):
            values = tuple(segs[i - 1] for segs in segments)
            key = (values, 1 << (i - 1))
            if key in seen:
                continue
            seen.add(key)
            level0.append((values, 1 << (i - 1), Leaf(i)))
        self.levels.append(level0)

    def grow(self, n: int, counter: list[int], budget: int) -> list[tuple]:
        """Materialize level n (requires levels < n already built)."""
        while len(self.levels) <= n:
            size = len(self.levels)
            prev = self.levels
            level = []
            seen = set()

            def emit(values, mask, node):
                counter[0] += 1
                if counter[0] > budget:
                    raise _BudgetExhausted
                key = (values, mask)
                if key in seen:
                    return
                seen.add(key)
                level.append((values, mask, node))

            for op in _OPS_ALPHA:
                if op in UNARY_OPS:
                    for values, mask, node in prev[size - 1]:
                        new_values = tuple(apply_op(op, v) for v in values)
                        emit(new_values, mask, Node(op, (node,)))
                else:
                    for left_size in range(size):
                        right_size = size - 1 - left_size
                        for lv, lm, ln in prev[left_size]:
                            for rv, rm, rn in prev[right_size]:
                                new_values = tuple(
                                    apply_op(op, a, b) for a, b in zip(lv, rv)
                                )
                                emit(new_values, lm | rm, Node(op, (ln, rn)))
            self.levels.append(level)
        return self.levels[n]


def search(
    examples: Sequence[tuple[Sequence[str], Sequence[str]]],
    max_ops: int = 3,
    max_leaves: int = 3,
    node_budget: int = 5_000_000,
) -> Optional[tuple[Program, list[int]]]:
    """Find the first program consistent with all examples.

    Iterative deepening over operator count; within one count, partitions in
    (fewest-parts, lexicographic) order; within one partition, candidate
    trees in recursive (alphabetical operator, left-subtree-size ascending)
    order. The 0-op candidate s1 over the whole-sequence partition comes
    first, so identity tasks are always answered with the identity program.
    Returns None when the node budget runs out before a hit.
    """
    if not examples:
        raise DomainError("search requires at least one example")
    lengths = {len(inp) for inp, _ in examples}
    if len(lengths) != 1:
        raise DomainError(f"example inputs have inconsistent lengths {sorted(lengths)}")
    example_inputs = [tuple(inp) for inp, _ in examples]
    expected = tuple(tuple(out) for _, out in examples)

    partitions = enumerate_partitions(len(example_inputs[0]), max_leaves)
    spaces = [_PartitionSpace(p, example_inputs) for p in partitions]
    counter = [0]
    try:
        for n in range(max_ops + 1):
            for space in spaces:
                for values, mask, node in space.grow(n, counter, node_budget):
                    if mask == space.full_mask and values == expected:
                        return Program(node), list(space.partition)
    except _BudgetExhausted:
        return None
    return None


def predict_with_search(
    task: PCFGTask,
    max_ops: int | None = None,
    max_leaves: int = 3,
    node_budget: int = 5_000_000,
) -> Optional[list[str]]:
    """Search the task's examples; on a hit, apply the program to the query input."""
    if not task.examples:
        raise DomainError("task has no examples")
    limit = task.w if max_ops is None else max_ops
    found = search(
        task.examples, max_ops=limit, max_leaves=max_leaves, node_budget=node_budget
    )
    if found is None:
        return None
    program, partition = found
    return list(eval_program(program, split_segments(task.query[0], partition)))


def searcher_model(max_ops: int = 3, max_leaves: int = 3, node_budget: int = 5_000_000):
    from .models import PcfgSearchModel

    return PcfgSearchModel(max_ops=max_ops, max_leaves=max_leaves, node_budget=node_budget)


# ---------------------------------------------------------------------------
# Dataset records (one task per line in the dataset files)


def task_to_record(task: PCFGTask, private: bool = True) -> dict:
    record = {
        "id": task.task_id,
        "seed": task.seed,
        "k": task.k,
        "w": task.w,
        "program": task.program.to_sexp(),
        "partition": task.partition,
        "examples": [[list(i), list(o)] for i, o in task.examples],
        "query_input": list(task.query[0]),
    }
    if private:
        record["query_output"] = list(task.query[1])
    return record


def record_to_task(record: dict) -> PCFGTask:
    return PCFGTask(
        k=record["k"],
        w=record["w"],
        program=Program.from_sexp(record["program"]),
        partition=list(record["partition"]),
        examples=[(list(i), list(o)) for i, o in record["examples"]],
        query=(list(record["query_input"]), list(record.get("query_output", []))),
        seed=record["seed"],
        task_id=record["id"],
    )
