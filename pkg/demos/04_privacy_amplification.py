"""
Privacy amplification cannot raise the attacker's uncertainty
=============================================================

Hashing merges data values, so the most likely key is at least as likely
as the most likely data value.
"""

import numpy as np

from qkdaudit import KeyDistribution, extractable_bits, pa_invariance_check, pushforward, random_toeplitz_hash

rng = np.random.default_rng(3)
m = 12
weights = rng.dirichlet(np.ones(1 << m) * 0.5)
weights[0b101101110001] += 0.05
data = KeyDistribution.from_dense(weights / weights.sum())

for n in (12, 10, 8, 6):
    h = random_toeplitz_hash(m, n, seed=n)
    r = pa_invariance_check(data, h)
    l, _ = extractable_bits(pushforward(data, h))
    print(f"{m} -> {n} bits: q1 = {r['q1']:.4f}, p1 = {r['p1']:.4f}, extractable {l:.2f} bits")
