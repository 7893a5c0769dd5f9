"""Positive spatial curvature breaks everything, and a perturbation can too.

Run:  python3 demos/spherical_counterexample.py
"""

import numpy as np

from lorcheck import hypotheses as H
from lorcheck import metric as M
from lorcheck import pseudoconvexity as P

sph = M.catalog("ultrastatic-spherical", 2, T=2.0, box=[(0.2, 2.9), (-2.0, 2.0)])
rep = H.scan_curvature_condition(sph, 5)
w = rep.witness
print(f"H1 {rep.verdict}, sup {rep.sup_value:.6f} at {np.round(w.point, 3)}")
print("  re-evaluated:", H.curvature_at_witness(sph, w))

pc = P.verify_pseudoconvexity(sph, np.array([0.0, 1.5, 0.0]), method="both")
bad = pc.witness
print(f"pseudo-convexity {pc.verdict}: Riccati {bad.min_null_hessian:.4f}, "
      f"FD oracle {bad.fd_value:.4f} at r = {bad.r}")

# bending hyperbolic space towards the sphere: h_yy = cos(x1)^2 - e^{2 x1}
hyp = M.catalog("ultrastatic-hyperbolic", 2)
h = [["0", "0", "0"], ["0", "0", "0"], ["0", "0", "cos(x1)^2 - exp(2*x1)"]]
scan = H.perturbation_scan(hyp, h, [0.1, 0.25, 0.5, 1.0], grid=5)
print("kappa of the base metric:", scan.kappa)
for eps, r in zip(scan.epsilons, scan.verdicts):
    print(f"  eps {eps:4.2f}: {r.verdict} (sup {r.sup_value: .4f})")
