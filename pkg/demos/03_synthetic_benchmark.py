"""
Perturbation levels and the expansion margin
============================================

Builds detection-space benchmarks (20 bases, 5 noisy variants each) and
reports the average rank of the target under three increasing
perturbation levels, then sweeps the box expansion factor.
"""

from svmf import Hyperparams, reference_catalog
from svmf.synth import REFERENCE_LEVELS, build_benchmark, evaluate_benchmark

catalog = reference_catalog()

#%%
bench = build_benchmark(20, 5, REFERENCE_LEVELS, seed=7, catalog=catalog)
for level, row in zip(REFERENCE_LEVELS, evaluate_benchmark(bench, catalog)):
    print(f"{row['level']}  drop={level.drop_prob:.2f} sub={level.substitute_prob:.2f} "
          f"jitter={level.jitter_frac:.2f}  avg rank {row['average_rank']:.2f} / {row['index_size']}")

#%%
# Expansion factor sweep at the middle level.  Queries and index are both
# rebuilt with the factor under test.
for factor in (-1.0, 0.0, 0.05, 0.1, 0.25):
    hp = Hyperparams(expansion_factor=factor)
    b = build_benchmark(20, 5, REFERENCE_LEVELS[1:2], seed=7, catalog=catalog, hp=hp)
    (row,) = evaluate_benchmark(b, catalog)
    print(f"expansion {factor:+.2f} * d   avg rank {row['average_rank']:.2f}")
