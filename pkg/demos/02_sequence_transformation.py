#!/usr/bin/env python3
"""Grammar-operator benchmark: generate tasks, prompt a model, run the searcher."""

from seqpat import pcfg
from seqpat.models import CompletionRequest, PcfgSearchModel, complete

# one task: a hidden operator composition over contiguous input segments
task = pcfg.generate_task(k=8, w=3, seed=42)
print("hidden program:", task.program.to_sexp(), "partition:", task.partition)
print("prompt:")
print(pcfg.build_prompt(task))
print("expected completion:", pcfg.render_completion(task.query[1]))

# the enumerative searcher solves the same prompt offline
model = PcfgSearchModel(max_ops=3)
out = complete(model, CompletionRequest(prompt=pcfg.build_prompt(task), max_tokens=64, stop=(";",)))
print("searcher completion:", out)

# the classic three-example warm-up: swap the first two tokens, drop the third
prompt = " 5 3 0, 3 5; 7 6 1, 6 7; 9 2 3, 2 9; 4 8 5,"
print("\nwarm-up prompt:", prompt)
print("searcher answers:", complete(model, CompletionRequest(prompt=prompt, max_tokens=16, stop=(";",))))

# a small benchmark grid scored against the ground-truth oracle
tasks = pcfg.make_suite(k_set=(2, 4, 8), w_set=(0, 1, 3), n_per_cell=20, seed=0)
report = pcfg.evaluate(pcfg.oracle_model(tasks), tasks)
print("\noracle-closure solve rates (%):")
print(pcfg.format_cell_table(report["cells"], k_set=(2, 4, 8), w_set=(0, 1, 3)))
