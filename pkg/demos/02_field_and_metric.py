"""Sample a discrete GFF, build the LFPP metric and look at it.

Writes a geodesic across the window and a metric-ball mask (PGM) into
./demo_out, and prints the distances involved.

    python demos/02_field_and_metric.py [seed]
"""
import sys
from pathlib import Path

import numpy as np

from lqgkpz import coupling_params, gff, lfpp
from lqgkpz.experiments import write_pgm

seed = int(sys.argv[1]) if len(sys.argv) > 1 else 0
n = 256
out = Path("demo_out")
out.mkdir(exist_ok=True)

p = coupling_params(np.sqrt(8 / 3))
h = gff.sample_dgff(n, seed)
print(f"field: n={n} seed={seed} min={h.values.min():.3f} max={h.values.max():.3f}")
print(f"variance at the centre (Green function) {gff.green_function_column(n, (n // 2, n // 2))[n // 2, n // 2]:.3f}")

grid = lfpp.normalize_crossing(lfpp.build_metric(h, p), samples=4, seed=seed)
print(f"normalisation factor {grid.norm_factor:.4g} (median left-right crossing set to 1)")

u, v = (n // 4, n // 4), (3 * n // 4, 3 * n // 4)
path = lfpp.geodesic(grid, u, v)
print(f"geodesic {u} -> {v}: {len(path)} vertices, length {path.length:.4f}")
np.savetxt(out / "geodesic.txt", path.vertices, fmt="%d")

ball = lfpp.metric_ball(grid, (n // 2, n // 2), 0.15)
print(f"ball of radius 0.15: {int(ball.members.sum())} vertices, "
      f"{len(ball.boundary_components)} boundary components")
write_pgm(out / "ball.pgm", ball.members)
print(f"wrote {out / 'geodesic.txt'} and {out / 'ball.pgm'}")
