"""Singular Riccati flow for a few coefficient curves.

Run:  python3 demos/riccati_comparison.py
"""

import numpy as np

from lorcheck import nullcone as NC
from lorcheck import riccati as R


def show(label, B, T):
    tr = R.integrate_riccati(B, T, sample_times=np.linspace(0.5, T, 4))
    res = R.verify_comparison(tr)
    print(f"{label:28s} comparison {str(res):14s} min null value {res.min_value: .3e}"
          + (f"  blow-up at {tr.blowup_t:.6f}" if tr.blowup_t else ""))
    for t in np.linspace(0.5, T, 4):
        try:
            i = tr.at(t)
        except KeyError:
            continue
        print(f"    t={t:4.2f}  L00={tr.L[i, 0, 0]: .6f}  null_min={tr.null_min[i]: .6f}")


# B = diag(1, 0) has <Bv, v> = -1 on the null slice: L00 = t cot t
show("diag(1, 0)", lambda t: np.diag([1.0, 0.0]), 3.0)
# pushing past pi the solution ceases to exist
show("diag(1, 0), past pi", lambda t: np.diag([1.0, 0.0]), 3.5)
# the wrong sign: L00 = t coth t and the conclusion fails at once
show("diag(-1, 0)", lambda t: np.diag([-1.0, 0.0]), 3.0)

# a time-dependent ND curve in three dimensions
B0 = np.array([[0.8, 0.1, 0.0], [-0.1, -0.2, 0.05], [0.0, 0.05, -0.3]])
B1 = np.array([[0.1, 0.0, 0.02], [0.0, 0.1, 0.0], [-0.02, 0.0, 0.0]])
for t in (0.0, 2.0):
    print(f"B({t:g}) classified as", NC.classify_null_definiteness(B0 + t * B1).kind)
show("B0 + t B1", lambda t: B0 + t * B1, 2.0)
