"""Per-user error probability versus Eb/N0: the waterfall in miniature.

Sweeps a short Eb/N0 grid at a light user load and prints the measured
per-user probability of error with its 95% confidence interval.  The same
machinery (with 200 trials per point and K_a up to 300) produces the
required-Eb/N0 operating curves; see the `sparse-idma sweep` CLI command.
"""

import time

from sparse_idma.sim import SimConfig, estimate_pupe
from sparse_idma.txchain import powers_for_ebn0

cfg = SimConfig(K_a=25, rate=0.125, nu=(0.0, 1.0))
print(f"K_a={cfg.K_a}, rate {cfg.rate}, repeat-twice profile, "
      f"{cfg.K_b}-entry detection list\n")
print(" Eb/N0    Pe        95% CI           trials   time")
for ebn0 in (0.0, 1.0, 2.0, 3.0):
    # 2:1 preamble/coding power split: enough preamble power that the
    # detection stage stays out of the way of the waterfall
    P1, P2 = powers_for_ebn0(cfg.layout, ebn0, 2.0)
    point = cfg.with_powers(P1, P2)
    t0 = time.time()
    est = estimate_pupe(point, trials=20)
    print(f"{ebn0:5.1f}   {est.pe:7.4f}   [{est.ci_low:.4f}, "
          f"{est.ci_high:.4f}]   {est.trials:4d}   {time.time()-t0:5.1f}s")
