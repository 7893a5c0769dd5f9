"""From flat space to strictly pseudo-convex level sets.

Minkowski space satisfies the null-curvature condition only with equality,
and the level sets of r_p^2 are merely boundary-pseudo-convex. A conformal
factor exp(2 delta e^{lam t}) fixes both.

Run:  python3 demos/strictify_minkowski.py
"""

import numpy as np

from lorcheck import hypotheses as H
from lorcheck import metric as M
from lorcheck import pseudoconvexity as P

flat = M.minkowski(2, T=1.0)
p = np.zeros(3)

for strict in (False, True):
    rep = H.scan_curvature_condition(flat, 5, strict=strict)
    print(f"flat {rep.condition:9s} {rep.verdict}  sup {rep.sup_value:.3g}")

res = H.strictify(flat, grid=5, margin=1.0)
print(f"C0 = {res.C0:g}, lambda = {res.lam:g}, C1 = {res.C1:.6f}, delta = {res.delta:.6f}")
print("f =", res.f_string)
print(f"scaled metric {res.verified.condition}: {res.verified.verdict} (sup {res.verified.sup_value:.4g})")
print("kappa =", H.estimate_kappa(res.metric, 5))

for label, spec in (("flat", flat), ("scaled", res.metric)):
    rep = P.verify_pseudoconvexity(spec, p, method="both")
    print(f"{label:7s} pseudo-convexity {rep.verdict:8s} min Hess {rep.min_value: .3e}  "
          f"route disagreement {rep.max_disagreement:.1e}")
