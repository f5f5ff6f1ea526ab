"""
Known-plaintext attack on a key that looks fine
===============================================

The witness key is uniform on its first l' bits and a fixed function of
them elsewhere. Before any leak the best guess succeeds with 2^-l'; once
the l' bits are revealed the rest of the key is determined.
"""

from qkdaudit import (
    SubsetSpec,
    condition_on_revealed_bits,
    guessing_probability,
    kpa_break_length,
    kpa_witness_family,
    revealed_posterior_p1,
)

n, l = 20, 5
l_prime = int(round(kpa_break_length(n, l)))
print(f"n = {n}, l = {l}: revealing {l_prime} bits should break the key")

w = kpa_witness_family(n, l_prime, seed=1)
print("p1 before:", w.p1_before, " p1 after:", w.p1_after)

# Condition on one concrete leak.
bits = "101100101"[:l_prime]
post = condition_on_revealed_bits(w.distribution, SubsetSpec(w.revealed.positions, bits))
p1, guess = guessing_probability(post)
print(f"after seeing {bits}: p1 = {p1}, key = {guess:0{n}b}")

# Every possible leak, at once.
keys, p1s = revealed_posterior_p1(w.distribution, w.revealed.positions)
print(f"{keys.size} possible leaks, min posterior p1 = {p1s.min()}")
