"""Tour of the dimension relations at gamma = sqrt(8/3), where d_gamma = 4.

Prints the KPZ pair for a few Euclidean dimensions next to the worst-case
and bi-Hoelder bounds, then the thick-point family that attains the
worst case, and the geodesic and ball-boundary constants.

    python demos/01_dimension_relations.py
"""
import numpy as np

from lqgkpz import coupling_params, kpz

p = coupling_params(np.sqrt(8 / 3))
print(f"gamma={p.gamma:.6f}  d_gamma={p.d_gamma}  Q={p.q:.6f}  xi={p.xi:.6f}\n")

print(" Euclid   KPZ quantum   worst case   Hoelder range")
for d0 in [0.0, 0.25, 0.5, 1.0, np.log(4) / np.log(3), 1.5, 2.0]:
    lo, hi = kpz.holder_bounds(d0, p)
    print(f"{d0:7.4f}   {kpz.quantum_from_euclidean(d0, p):11.6f}   "
          f"{kpz.worstcase_quantum_upper(d0, p):10.6f}   [{lo:.4f}, {hi:.4f}]")

# alpha-thick points of the square have Euclidean dimension 2 - alpha^2/2;
# for alpha >= gamma their quantum dimension meets the worst-case bound
print("\n alpha   Euclid   quantum   worst case at that Euclid")
for a in [0.0, 0.5, 1.0, p.gamma, 1.8]:
    e = kpz.thick_point_euclidean_dim(2.0, a)
    print(f"{a:6.3f}  {e:7.4f}  {kpz.thick_point_quantum_dim(2.0, a, p):8.4f}  "
          f"{kpz.worstcase_quantum_upper(e, p):8.4f}")

print(f"\ngeodesic Euclidean dimension at most      {kpz.geodesic_dim_bound(p):.6f}")
print(f"ball-boundary Euclidean dimension at most {kpz.ball_boundary_dim_bound(p):.6f}")
