"""
What a small trace distance does and does not mean
==================================================

Trace distance bounds every measurement's variational distance. The
maximal coupling turns that distance into the probability that the real
key differs from an ideal one, which is the "fails with probability eps"
reading. The same eps allows a guessing probability far above 2^-n.
"""

import numpy as np

from qkdaudit import (
    CqEnsemble,
    DensityOperator,
    KeyDistribution,
    cq_distance,
    interpretation_gap_report,
    maximal_coupling,
    measured_key_distance,
    usd_povm,
    variational_distance,
)

# Two-key ensemble: the probe is one of two nonorthogonal qubit states.
s = 0.8
t = np.arccos(s) / 2
probes = [DensityOperator.pure([np.cos(t), np.sin(t)]), DensityOperator.pure([np.cos(t), -np.sin(t)])]
ens = CqEnsemble.uniform(probes)
povm, success = usd_povm(s)
print(f"cq distance d = {cq_distance(ens):.4f}")
print(f"USD measurement (success {success:.2f}) reaches distance {measured_key_distance(ens, povm):.4f}")

# Coupling: mismatch probability equals the variational distance.
rng = np.random.default_rng(0)
p = KeyDistribution.from_dense(rng.dirichlet(np.ones(8)))
u = KeyDistribution.uniform(3)
c = maximal_coupling(p, u)
print(f"delta(P, U) = {variational_distance(p, u):.4f}, Pr[K != K_ideal] = {c.mismatch:.4f}")

# The gap between the two readings of eps.
r = interpretation_gap_report(2.0**-10, 20)
print(f"eps = 2^-10, n = 20: perceived p1 {r['perceived_p1']:.2e}, actual {r['actual_p1']:.2e}, "
      f"{r['dominance_factor']:.0f}x")
