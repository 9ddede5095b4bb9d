"""Every frame construction checked on seeded random instances.

Each case builds a new family from an old one (operator equivalences,
multiplier actions, conjugation by invertible U, the canonical K-dual,
Bessel pairs, slot permutations, perturbations) and compares the measured
optimal bounds with the predicted ones.
"""
import time

from cgfusion import gen_random
from cgfusion.constructions import conjugate_U, theta_right
from cgfusion.hilbert_module import AdjointableOp
from cgfusion.suite import run_theorem_suite

sys, ctrl, K = gen_random(3, m=2, n=4, J=5, mode="diagonal")
theta = AdjointableOp.diagonal([[2.0, 1.0, 0.5, 1.0], [1.0, 1.5, 1.0, 3.0]])
r = theta_right(sys, ctrl, theta)
print(f"theta_right: predicted [{r.predicted.A_pred:.4f}, {r.predicted.B_pred:.4f}], "
      f"measured [{r.measured.A_opt:.4f}, {r.measured.B_opt:.4f}]")
r = conjugate_U(sys, ctrl, theta, K)
print(f"conjugate_U: predicted [{r.predicted.A_pred:.4f}, {r.predicted.B_pred:.4f}], "
      f"measured [{r.lower_measured:.4f}, {r.measured.B_opt:.4f}]")

t0 = time.perf_counter()
report = run_theorem_suite(seed=1, count=100)
print(report.table())
print(f"{time.perf_counter() - t0:.1f}s, all passed: {report.all_passed}")
