"""Searching for a good protograph with differential evolution.

The optimizer works on a real-valued relaxation of the base matrix (entries
rounded to 0..3 parallel edges) and scores each candidate by its multiuser
density-evolution threshold.  This demo runs a deliberately tiny search —
a rate-1/2 shape at light load — so it finishes in about a minute; the
shipped rate-1/8 preset came from the same machinery with a much larger
budget (see the README).
"""

import numpy as np

from sparse_idma.density_evolution import de_threshold
from sparse_idma.optimizer import EnsembleOptimizer
from sparse_idma.protograph import validate_protograph
from sparse_idma.txchain import FrameLayout, RepetitionDD

layout = FrameLayout(B=100, B_p=15, N_t=30000, N_p=2000)
dd = RepetitionDD(nu=(0.0, 1.0))

baseline = de_threshold(validate_protograph(np.ones((3, 6), dtype=int)), dd,
                        layout, 340, 25, split_ratio=1.0, resolution_db=0.25)
print(f"baseline (3,6)-regular threshold at K_a=25: {baseline:.2f} dB")

opt = EnsembleOptimizer((3, 6), 0.5, 25, layout, N=340, seed=1, pop_size=12,
                        optimize_nu=False, fixed_nu=dd,
                        threshold_resolution_db=0.25, de_max_iters=100)
best = opt.run(budget=120)
print(f"best found after {opt.evaluations} evaluations: "
      f"{best.fitness:.2f} dB")
print("base matrix (entries = parallel edges):")
for row in best.base_matrix:
    print("  " + " ".join(str(int(x)) for x in row))
