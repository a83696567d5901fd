#!/usr/bin/env python3
"""Grid-puzzle harness: prompts, oracle closure, token-mapping invariance."""

from seqpat import arc, codec

suite = arc.default_suite()
print(f"loaded {len(suite)} tasks (set SEQPAT_ARC_DIR to point at a real corpus)")

task = suite[0]
print(f"\nprompt for task {task.id}:")
print(arc.build_prompt(task, 0))

# the oracle mock replays ground truth; the harness must score it perfect
sample = suite[:50]
report = arc.run_eval(arc.oracle_model(sample), sample)
print(f"oracle closure: {report['solved']}/{report['total']}")

# the same tasks, expressed in randomly sampled vocabulary tokens
alphabet = codec.sample_alphabet(3, codec.bundled_pool())
print("\nalphabet:", {d: t for d, t in sorted(alphabet.mapping.items())[:4]}, "...")
report = arc.run_eval(arc.oracle_model(sample, alphabet=alphabet), sample, alphabet=alphabet)
print(f"closure under random alphabet: {report['solved']}/{report['total']}")
print("\nremapped prompt excerpt:")
print(arc.build_prompt(task, 0, alphabet=alphabet)[:200], "...")
