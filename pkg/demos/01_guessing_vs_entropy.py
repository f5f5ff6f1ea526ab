"""
Guessing probability under an information bound
================================================

A key can leak very little information on average and still be guessed
whole with large probability. The spike distribution shows how large.
"""

import numpy as np

from qkdaudit import eve_information, max_guess_given_information, max_guess_given_vd, shannon_entropy

n = 16

# For each information budget, the best guessing probability consistent with it.
for info in [0.01, 0.1, 0.5, 1.0, 4.0]:
    res = max_guess_given_information(n, info)
    print(f"I_E <= {info:5.2f} bits  ->  p1 up to {res.p1_star:.4g}  (l = {res.l_exponent:.2f} bits)")

# The witness really does sit on the constraint.
res = max_guess_given_information(n, 1.0)
print("witness entropy", shannon_entropy(res.witness), "information", eve_information(res.witness))

# A distance budget behaves the same way, only more simply: p1 = 2^-n + eps.
for eps in 2.0 ** -np.arange(2, 12, 3):
    print(f"vd <= {eps:.2e}  ->  p1 up to {max_guess_given_vd(n, eps).p1_star:.4g}, uniform {2.0**-n:.2e}")
