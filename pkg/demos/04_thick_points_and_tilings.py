"""Thick points and the quantum dyadic tiling of one field.

First the alpha-thick points for a few alpha and their box dimension
against 2 - alpha^2/2, then the tilings R_m for small m: tile counts by
level, well-formedness and the 4|S| containment property.

    python demos/04_thick_points_and_tilings.py
"""
import numpy as np

from lqgkpz import coupling_params, dimension as dim, gff, kpz, lfpp
from lqgkpz.errors import ResolutionExhausted, ThresholdTooLarge

n, seed = 512, 3
p = coupling_params(np.sqrt(8 / 3))
h = gff.sample_dgff(n, seed)
ladder = [2.0**-k for k in range(5, 9)]

for alpha in (0.0, 0.5, 1.0, 1.5):
    tps = gff.thick_points(h, alpha, 0.7, ladder)
    pts = dim.clip_to_window(tps.points, n)
    if len(pts) == 0:
        print(f"alpha={alpha}: no thick points")
        continue
    est = dim.box_dimension(dim.thick_point_set(tps, n))
    print(f"alpha={alpha}: {len(pts):6d} points, box dimension {est.exponent:.3f} "
          f"(limit {kpz.thick_point_euclidean_dim(2.0, alpha):.3f})")

grid = lfpp.normalize_crossing(lfpp.build_metric(h, p), samples=1, seed=seed)
print()
for m in range(1, 6):
    try:
        tiling = dim.quantum_tiling(grid, m)
    except (ThresholdTooLarge, ResolutionExhausted) as exc:
        print(f"m={m}: skipped ({type(exc).__name__})")
        continue
    levels, counts = np.unique(tiling.levels(), return_counts=True)
    rep = dim.tiling_containment_check(grid, tiling, 200, seed)
    print(f"m={m}: {len(tiling)} tiles, levels {dict(zip(levels.tolist(), counts.tolist()))}, "
          f"well-formed {dim.tiling_is_wellformed(grid, tiling)}, containment violations {rep.violations}")
