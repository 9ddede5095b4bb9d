"""How far a family can drift before its bounds stop being guaranteed.

Gamma is Lambda plus small noise.  The smallest epsilon making the
perturbation inequality hold is fitted; when it clears the gate
epsilon < (1 - lambda1) sqrt(A) the measured bounds of Gamma land inside the
predicted interval.  Larger noise eventually fails the gate.
"""
import numpy as np

from cgfusion import gen_random
from cgfusion.constructions import fit_epsilon, perturbation_check
from cgfusion.frames import Member
from cgfusion.hilbert_module import AdjointableOp

sys, ctrl, K = gen_random(5, m=2, n=4, J=6, mode="scalar_ctrl")
rng = np.random.default_rng(0)
noise = [rng.standard_normal(mem.Lambda.blocks.shape) for mem in sys.members]

for size in (1e-3, 1e-2, 1e-1, 1.0):
    gamma = sys.with_members([Member(mem.P, mem.Lambda + AdjointableOp(size * z), mem.v)
                              for mem, z in zip(sys.members, noise)])
    eps = fit_epsilon(sys, gamma, ctrl, K, 0.05, 0.05)
    r = perturbation_check(sys, gamma, ctrl, K, 0.05, 0.05, eps, n_samples=100)
    line = f"noise {size:7.0e}  epsilon {eps:.3e}  hypothesis {r.status}, gate {'passed' if r.gate else 'declined'}"
    if r.certified:
        line += (f"  A_K {r.measured.K_verdict.A_K:.4f} >= {r.predicted_lower:.4f}, "
                 f"B {r.measured.B_opt:.4f} <= {r.predicted_upper:.4f}")
    print(line)
