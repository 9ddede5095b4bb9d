"""Controlled K-g-fusion frames in Hilbert modules over the algebra C^m."""
from .algebra import AlgebraElement, alg_arith, alg_norm_order, alg_sqrt_inv
from .constructions import (BesselPairResult, PerturbationReport, Prediction, TransformResult,
                            bessel_pair_K, c2_equivalence, canonical_K, conjugate_U, fit_epsilon,
                            inverse_conjugate_U, lemma9_check, morphism_transport,
                            perturbation_check, theta_left, theta_right)
from .errors import (BoundsError, CommutationError, ConvergenceError, DimensionError, DocumentError,
                     FrameError, HypothesisError, MorphismError, OrderError, ParamError,
                     PositivityError, SingularError, WeightError)
from .frames import (CoefficientFamily, ControllerPair, FrameAssessment, GFusionSystem, Member,
                     analysis_apply, assess_controlled, assess_k_g_fusion, build_frame_system,
                     frame_operator, synthesis_apply, synthesis_matrix, validate_controllers)
from .generators import gen_paper_example, gen_random, identity_system
from .hilbert_module import (AdjointableOp, ModuleVector, Projector, commutes, inner_product,
                             op_classify, projector_from_generators, range_projector)
from .oracle import OracleReport, k_bound_bisection, sampled_check, slotwise_bounds
from .solver import (SolveReport, cg_invert, conditioning_report, reconstruct, richardson_invert,
                     whitening_controllers)
from .suite import run_theorem_suite

__version__ = "0.1.0"
