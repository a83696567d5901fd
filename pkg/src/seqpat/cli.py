"""Batch entry points: dataset generation, evaluation harnesses, run loops.

Every command resolves its configuration (global config file, overridden
by flags), runs one harness, and writes machine-readable artifacts plus a
human-readable summary. Artifacts embed the resolved config, the seed,
and corpus hashes; with a fixed seed and a local model they are
byte-identical across runs. Task-level failures are recorded as data, so
a completed run exits 0 even when individual tasks failed.
"""

from __future__ import annotations

import argparse
import json
import statistics
import sys
from pathlib import Path

from . import __version__, arc, codec, completion, environments, improve, models, pcfg
from .errors import ConfigError, SeqpatError


def _load_config(path: str | None) -> dict:
    if not path:
        return {}
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def _model_spec(args, config: dict) -> models.ModelSpec:
    spec_fields = dict(config.get("model", {}))
    if args.model_kind:
        spec_fields["kind"] = args.model_kind
    if getattr(args, "model_name", None):
        spec_fields["model_name"] = args.model_name
    if getattr(args, "base_url", None):
        spec_fields["base_url"] = args.base_url
    spec_fields.setdefault("kind", "mock_scripted")
    if "seed" not in spec_fields:
        spec_fields["seed"] = args.seed
    return models.ModelSpec(**spec_fields)


def _write_jsonl(path: Path, records) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(record, ensure_ascii=False, sort_keys=True) + "\n")


def _write_summary(out_dir: Path, command: str, seed: int, spec: models.ModelSpec | None,
                   payload: dict) -> None:
    summary = {
        "tool_version": __version__,
        "command": command,
        "seed": seed,
        "model": spec.public_config() if spec else None,
    }
    summary.update(payload)
    with open(out_dir / "summary.json", "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True, ensure_ascii=False)
        fh.write("\n")


def _alphabet(args):
    if getattr(args, "alphabet_seed", None) is None:
        return None
    return codec.sample_alphabet(args.alphabet_seed, codec.bundled_pool())


def _parse_int_set(text: str) -> tuple[int, ...]:
    return tuple(int(v) for v in text.split(","))


# ---------------------------------------------------------------------------
# Commands


def cmd_pcfg_gen(args, config) -> int:
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    tasks = pcfg.make_suite(
        k_set=_parse_int_set(args.k_set),
        w_set=_parse_int_set(args.w_set),
        n_per_cell=args.n,
        seed=args.seed,
        n_examples=args.n_examples,
        max_leaves=args.max_leaves,
    )
    _write_jsonl(out_dir / "pcfg_tasks.jsonl", (pcfg.task_to_record(t, private=False) for t in tasks))
    _write_jsonl(out_dir / "pcfg_tasks.private.jsonl", (pcfg.task_to_record(t) for t in tasks))
    _write_summary(out_dir, "pcfg-gen", args.seed, None, {
        "tasks": len(tasks),
        "k_set": list(_parse_int_set(args.k_set)),
        "w_set": list(_parse_int_set(args.w_set)),
        "n_per_cell": args.n,
    })
    print(f"wrote {len(tasks)} tasks to {out_dir}")
    return 0


def _load_tasks(path: str) -> list[pcfg.PCFGTask]:
    tasks = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                tasks.append(pcfg.record_to_task(json.loads(line)))
    return tasks


def _file_sha256(path: str) -> str:
    import hashlib

    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


def cmd_pcfg_eval(args, config) -> int:
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    tasks = _load_tasks(args.dataset)
    alphabet = _alphabet(args)
    spec = _model_spec(args, config)
    oracle = pcfg.oracle_model(tasks, alphabet) if spec.kind == "mock_oracle" else None
    model = spec.build(oracle=oracle)
    report = pcfg.evaluate(model, tasks, alphabet=alphabet, parallelism=args.parallel)
    for record, task in zip(report["records"], tasks):
        record["model"] = spec.kind
        record["latency_ms"] = 0  # local kinds are timed as 0 so artifacts stay reproducible
    _write_jsonl(out_dir / "results.jsonl", report["records"])
    table = pcfg.format_cell_table(report["cells"])
    (out_dir / "cells.txt").write_text(table + "\n", encoding="utf-8")
    _write_summary(out_dir, "pcfg-eval", args.seed, spec, {
        "dataset": args.dataset,
        "dataset_sha256": _file_sha256(args.dataset),
        "alphabet_seed": args.alphabet_seed,
        "accuracy": report["accuracy"],
        "correct": report["correct"],
        "total": report["total"],
    })
    print(table)
    print(f"accuracy {report['correct']}/{report['total']}")
    return 0


def cmd_pcfg_solve(args, config) -> int:
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    tasks = _load_tasks(args.dataset)
    records = []
    cells: dict[tuple[int, int], dict] = {}
    for task in tasks:
        prediction = pcfg.predict_with_search(
            task, max_ops=args.max_ops, max_leaves=args.max_leaves, node_budget=args.node_budget
        )
        solved = prediction is not None
        correct = solved and bool(task.query[1]) and prediction == list(task.query[1])
        records.append({
            "task_id": task.task_id,
            "k": task.k,
            "w": task.w,
            "solved": solved,
            "correct": correct,
            "prediction": prediction,
        })
        cell = cells.setdefault((task.k, task.w), {"k": task.k, "w": task.w, "n": 0,
                                                   "solved": 0, "correct": 0})
        cell["n"] += 1
        cell["solved"] += int(solved)
        cell["correct"] += int(correct)
    for cell in cells.values():
        cell["accuracy"] = cell["correct"] / cell["n"]
    cell_list = [cells[key] for key in sorted(cells)]
    _write_jsonl(out_dir / "solve_results.jsonl", records)
    table = pcfg.format_cell_table(cell_list)
    (out_dir / "cells.txt").write_text(table + "\n", encoding="utf-8")
    _write_summary(out_dir, "pcfg-solve", args.seed, None, {
        "dataset": args.dataset,
        "dataset_sha256": _file_sha256(args.dataset),
        "max_ops": args.max_ops,
        "max_leaves": args.max_leaves,
        "cells": cell_list,
    })
    print(table)
    return 0


def cmd_arc_eval(args, config) -> int:
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    suite = arc.load_suite(args.suite_dir) if args.suite_dir else arc.default_suite()
    alphabet = _alphabet(args)
    spec = _model_spec(args, config)
    oracle = arc.oracle_model(suite, alphabet=alphabet) if spec.kind == "mock_oracle" else None
    model = spec.build(oracle=oracle)
    report = arc.run_eval(
        model, suite, alphabet=alphabet, parallelism=args.parallel,
        candidates=args.candidates, alphabet_seed=args.alphabet_seed,
    )
    _write_jsonl(out_dir / "results.jsonl", report["records"])
    _write_summary(out_dir, "arc-eval", args.seed, spec, {
        "solved": report["solved"],
        "total": report["total"],
        "corpus_hash": report["corpus_hash"],
        "alphabet_seed": args.alphabet_seed,
    })
    print(f"solved {report['solved']}/{report['total']}")
    return 0


def cmd_complete_eval(args, config) -> int:
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    spec = _model_spec(args, config)
    model = spec.build()
    if args.task in completion.FAMILIES:
        fn_spec = completion.FunctionSpec(
            family=args.task, context_periods=args.context_periods
        )
        report = completion.run_function_suite(model, fn_spec, trials=args.trials, seed=args.seed)
    elif args.task == "loops":
        trials = []
        for name, loop_spec in completion.LOOP_PRESETS.items():
            context, target = completion.make_loop_trace(loop_spec, seed=args.seed)
            task = completion.task_from_traces(context, target, tag=name)
            trials.append(completion.evaluate_completion(model, task))
        report = completion.summarize_trials(trials)
    elif args.task == "sweep":
        trials = []
        for i in range(args.trials):
            trace = completion.synthesize_sweep_demo(seed=args.seed + i)
            context, target = completion.split_two_thirds(trace)
            task = completion.task_from_traces(context, target, tag=f"sweep[{i}]")
            trials.append(completion.evaluate_completion(model, task))
        report = completion.summarize_trials(trials)
    else:
        raise ConfigError(f"unknown completion task {args.task!r}")
    _write_jsonl(out_dir / "trials.jsonl", report["trials"])
    _write_summary(out_dir, "complete-eval", args.seed, spec, {
        "task": args.task,
        "mean_dtw": report["mean_dtw"],
        "var_dtw": report["var_dtw"],
        "mean_dtw_per_step": report["mean_dtw_per_step"],
        "trials": report["n"],
    })
    print(f"{args.task}: mean DTW {report['mean_dtw']:.2f} "
          f"({report['mean_dtw_per_step']:.3f}/step) over {report['n']} trials")
    return 0


def cmd_improve_run(args, config) -> int:
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    if args.env == "grid":
        env_factory = environments.GridEnv
        default_warmup = 20
    elif args.env == "cartpole":
        env_factory = environments.CartPoleEnv
        default_warmup = 100
    else:
        raise ConfigError(f"unknown environment {args.env!r}")
    warmup = args.warmup if args.warmup is not None else default_warmup
    spec = _model_spec(args, config)
    model = spec.build()
    cfg = improve.ImproveConfig(
        token_budget=args.token_budget,
        target_offset_max=args.target_offset,
        ordering=args.ordering,
    )
    if config.get("tokenizer_cmd"):
        cfg.token_counter = models.external_token_counter(config["tokenizer_cmd"])
    report = improve.run_online(
        model, env_factory, episodes=args.episodes, warmup=warmup, cfg=cfg,
        seed=args.seed, env_tag=args.env,
    )
    _write_jsonl(out_dir / "episodes.jsonl", report["curve"])
    curve_lines = ["episode,phase,return,running_max"]
    curve_lines += [
        f"{c['episode']},{c['phase']},{c['return']},{c['running_max']}"
        for c in report["curve"]
    ]
    (out_dir / "curve.csv").write_text("\n".join(curve_lines) + "\n", encoding="utf-8")
    _write_summary(out_dir, "improve-run", args.seed, spec, {
        "env": args.env,
        "episodes": args.episodes,
        "warmup": warmup,
        "final_max": report["final_max"],
    })
    print(f"{args.env}: final max return {report['final_max']} "
          f"after {warmup} warmup + {args.episodes} episodes")
    return 0


def cmd_marker_demo(args, config) -> int:
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    spec = _model_spec(args, config)
    model = spec.build()
    orderings = list(improve.ORDERINGS[:3]) if args.ordering == "all" else [args.ordering]
    import random as _random

    rows = []
    for ordering in orderings:
        rewards = []
        for trial in range(args.trials):
            scene = environments.MarkerScene(
                cup_pos=tuple(
                    _random.Random(args.seed * 1000 + trial).randint(60, 140)
                    for _ in range(3)
                )
            )
            demo = environments.make_marker_demo(scene, seed=args.seed + trial)
            context = environments.marker_build_context(scene, demo)
            cfg = improve.ImproveConfig(ordering=ordering, temperature=0.0)
            result = improve.marker_improve(
                model, scene, cfg, context, rng=_random.Random(args.seed + trial)
            )
            rewards.append(result["reward"])
        rows.append({
            "ordering": ordering,
            "rewards": rewards,
            "mean_reward": statistics.mean(rewards),
        })
        print(f"{ordering}: mean reward {statistics.mean(rewards):.1f} over {args.trials} trials")
    _write_jsonl(out_dir / "marker_results.jsonl", rows)
    _write_summary(out_dir, "marker-demo", args.seed, spec, {"arms": rows})
    return 0


# ---------------------------------------------------------------------------
# Parser


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", default=None, help="global JSON config file")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out", default="runs/latest", help="output directory")
    parser.add_argument("--model-kind", default=None, choices=models.ModelSpec.KINDS)
    parser.add_argument("--model-name", default=None)
    parser.add_argument("--base-url", default=None)
    parser.add_argument("--parallel", type=int, default=1)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="seqpat", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("pcfg-gen", help="generate a grammar-benchmark dataset")
    _add_common(p)
    p.add_argument("--k-set", default="1,2,4,8,16,32")
    p.add_argument("--w-set", default="0,1,3,7,15,31")
    p.add_argument("--n", type=int, default=100, help="tasks per (k, w) cell")
    p.add_argument("--n-examples", type=int, default=4)
    p.add_argument("--max-leaves", type=int, default=3)
    p.set_defaults(fn=cmd_pcfg_gen)

    p = sub.add_parser("pcfg-eval", help="evaluate a model on a dataset")
    _add_common(p)
    p.add_argument("--dataset", required=True, help="private dataset jsonl")
    p.add_argument("--alphabet-seed", type=int, default=None)
    p.set_defaults(fn=cmd_pcfg_eval)

    p = sub.add_parser("pcfg-solve", help="run the enumerative searcher on a dataset")
    _add_common(p)
    p.add_argument("--dataset", required=True)
    p.add_argument("--max-ops", type=int, default=3)
    p.add_argument("--max-leaves", type=int, default=3)
    p.add_argument("--node-budget", type=int, default=5_000_000)
    p.set_defaults(fn=cmd_pcfg_solve)

    p = sub.add_parser("arc-eval", help="evaluate a model on a grid-puzzle suite")
    _add_common(p)
    p.add_argument("--suite-dir", default=None,
                   help="task directory; bundled offline corpus when omitted")
    p.add_argument("--alphabet-seed", type=int, default=None)
    p.add_argument("--candidates", type=int, default=1)
    p.set_defaults(fn=cmd_arc_eval)

    p = sub.add_parser("complete-eval", help="score sequence-completion tasks")
    _add_common(p)
    p.add_argument("--task", default="sin",
                   choices=list(completion.FAMILIES) + ["loops", "sweep"])
    p.add_argument("--trials", type=int, default=11)
    p.add_argument("--context-periods", type=int, default=3)
    p.set_defaults(fn=cmd_complete_eval)

    p = sub.add_parser("improve-run", help="online improvement loop")
    _add_common(p)
    p.add_argument("--env", default="grid", choices=["grid", "cartpole"])
    p.add_argument("--episodes", type=int, default=50)
    p.add_argument("--warmup", type=int, default=None,
                   help="random episodes first (grid 20, cartpole 100)")
    p.add_argument("--token-budget", type=int, default=1024)
    p.add_argument("--target-offset", type=int, default=20)
    p.add_argument("--ordering", default="sorted_asc", choices=improve.ORDERINGS)
    p.set_defaults(fn=cmd_improve_run)

    p = sub.add_parser("marker-demo", help="offline trajectory extrapolation arms")
    _add_common(p)
    p.add_argument("--ordering", default="all",
                   choices=list(improve.ORDERINGS[:3]) + ["all"])
    p.add_argument("--trials", type=int, default=11)
    p.set_defaults(fn=cmd_marker_demo)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = _load_config(args.config)
        return args.fn(args, config)
    except (ConfigError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except SeqpatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
