#!/usr/bin/env python3
"""Tour of the text codecs: grids, random alphabets, trajectory lines."""

from seqpat import codec

grid = [[0, 3, 4, 0], [0, 7, 6, 0]]
text = codec.encode_grid(grid)
print("grid as prompt text:")
print(text)
print("round-trips:", codec.decode_grid(text) == grid)

# map digits to arbitrary vocabulary tokens, bijectively
alphabet = codec.sample_alphabet(seed=7, pool=codec.bundled_pool())
print("\nsampled alphabet:", alphabet.mapping)
seq = ["8", "6", "8", "6"]
mapped = codec.remap(seq, alphabet)
print("remapped:", " ".join(mapped))
print("unremapped:", " ".join(codec.unremap(mapped, alphabet)))

# reward-prefixed trajectory lines used by the improvement loops
print("\nstates line:   ", codec.encode_reward_states(100, [[104, 83, 123], [105, 83, 123]]))
print("obs/action line:", codec.encode_reward_obs_actions(52, [[40, 50], 1, [40, 54]]))
print("clicker line:  ", codec.encode_clicker_tuple(1, [80, 49, 138, 109, 54, 133], [45, 44, 55]))

line = "100: 104 83 123"
print(f"\nestimate_tokens({line!r}) =", codec.estimate_tokens(line))
