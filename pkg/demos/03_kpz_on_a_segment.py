"""Quantum dimension of a horizontal segment on a few sampled fields.

The segment is chosen without looking at the field, so KPZ predicts its
quantum dimension from its Euclidean dimension 1.  At this size LFPP is
still far from its limit and the estimates sit somewhat low.

    python demos/03_kpz_on_a_segment.py
"""
import numpy as np

from lqgkpz import coupling_params, dimension as dim, gff, kpz, lfpp

n, seeds = 256, range(5)
p = coupling_params(np.sqrt(8 / 3))
seg = dim.segment_set(n)
box = dim.box_dimension(seg)
print(f"box dimension of the segment: {box.exponent:.4f}")
print(f"KPZ prediction: {kpz.quantum_from_euclidean(1.0, p):.4f}\n")

ests = []
for s in seeds:
    grid = lfpp.build_metric(gff.sample_dgff(n, s), p)
    est = dim.quantum_dimension(seg, grid)
    ests.append(est.exponent)
    print(f"seed {s}: quantum dimension {est.exponent:.4f}  (r2 {est.r_squared:.3f})")
print(f"\nmean {np.mean(ests):.4f} +- {np.std(ests) / np.sqrt(len(ests)):.4f}")

# with h = 0 the metric is Euclidean up to a constant and the two agree
flat = lfpp.build_metric(gff.zero_field(n), p)
print(f"h = 0 check: {dim.quantum_dimension(seg, flat).exponent:.4f}")
