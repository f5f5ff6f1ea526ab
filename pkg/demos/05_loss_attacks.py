"""
Hiding an attack inside channel loss
====================================

On a lossy line Eve can run unambiguous discrimination, resend only the
states she identified and leave the rest as "loss". Below the transmittance
threshold 1 - s the users see no errors and no drop in detections.
"""

import numpy as np

from qkdaudit import AttackStrategy, ProtocolConfig, breach_threshold, loss_sweep, perceived_vs_real_rates

config = ProtocolConfig(protocol="B92", overlap_s=0.5, n_pulses=50_000, seed=11)
grid = np.round(np.linspace(0.3, 0.7, 5), 2)
print("breach threshold eta* =", breach_threshold(config.overlap_s, config))

honest = loss_sweep(config, AttackStrategy("none"), grid)
attacked = loss_sweep(config, AttackStrategy("usd_resend"), grid)
print(" eta  honest  attacked  qber  perceived  real")
for h, a in zip(honest, attacked):
    r = perceived_vs_real_rates(a)
    print(f"{a.eta:4.2f}  {h.detection_rate:6.4f}  {a.detection_rate:8.4f}  {a.qber:4.2f}  "
          f"{r['perceived_rate']:9.2f}  {r['real_rate_exponent']:4.2f}")

# Above eta* the attacked rate falls short of the honest one and the attack shows.
# BB84 is not open to the same trick: measure-and-resend shows up as 25% errors.
bb84 = ProtocolConfig(protocol="BB84", n_pulses=50_000, seed=12)
t = loss_sweep(bb84, AttackStrategy("intercept_resend"), [1.0])[0]
print(f"BB84 intercept-resend qber = {t.qber:.3f}")
