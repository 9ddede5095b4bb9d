"""Brute-force cross-checks that share no eigensolver code with the main path.

* :func:`slotwise_bounds` treats each slot as an ordinary Hilbert-space frame,
  accumulates the dense frame operator term by term and extracts extreme
  eigenvalues by power iteration (repeated squaring), never ``eigh``.
* :func:`k_bound_bisection` finds the optimal lower K-bound by bisection with
  a Cholesky positivity test.
* :func:`sampled_check` evaluates the quantified frame inequalities on random
  vectors.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from .algebra import AlgebraElement
from .errors import ParamError
from .frames import (ControllerPair, GFusionSystem, analysis_operators, apply_analysis_operators,
                     assess_controlled, assess_k_g_fusion, ensure_controlled)
from .hilbert_module import AdjointableOp, ModuleVector, inner_product

WITNESS_TOL = 1e-9


@dataclass(frozen=True)
class OracleReport:
    A_oracle: float
    B_oracle: float
    A_K_oracle: Optional[float]
    per_slot: tuple
    samples_checked: int = 0
    max_violation: float = 0.0


def _top_eigenvalue(M: np.ndarray, max_squarings: int = 80) -> float:
    """Largest-magnitude eigenvalue of a Hermitian matrix.

    Power iteration in squaring form: ``X <- X^2 / ||X^2||`` converges to the
    projector onto the dominant eigenspace; the Rayleigh quotient of its
    largest column is the eigenvalue.
    """
    M = 0.5 * (M + np.conj(M.T))
    scale = np.linalg.norm(M)
    if scale == 0.0:
        return 0.0
    X = M / scale
    for _ in range(max_squarings):
        Y = X @ X
        Y /= np.linalg.norm(Y)
        if np.linalg.norm(Y - X) < 1e-15:
            X = Y
            break
        X = Y
    x = X[:, np.argmax(np.linalg.norm(X, axis=0))]
    return float(np.real(np.vdot(x, M @ x)) / np.real(np.vdot(x, x)))


def extreme_eigenvalues(M: np.ndarray) -> tuple:
    """``(lambda_min, lambda_max)`` of a Hermitian PSD matrix without ``eigh``."""
    top = _top_eigenvalue(M)
    shifted = top * np.eye(M.shape[0]) - M
    return top - _top_eigenvalue(shifted), top


def dense_slot_operators(sys: GFusionSystem, ctrl: Optional[ControllerPair]) -> np.ndarray:
    """Slot frame operators accumulated explicitly, one slot and member at a time."""
    ctrl = ensure_controlled(sys, ctrl)
    out = np.zeros((sys.m, sys.n, sys.n), dtype=complex)
    for s in range(sys.m):
        C = np.array(ctrl.C.blocks[s])
        Cp = np.array(ctrl.Cp.blocks[s])
        for mem in sys.members:
            P = np.array(mem.P.op.blocks[s])
            L = np.array(mem.Lambda.blocks[s])
            v2 = float(mem.v.entries[s].real) ** 2
            out[s] += v2 * Cp @ P @ np.conj(L.T) @ L @ P @ C
    return out


def slotwise_bounds(sys: GFusionSystem, ctrl: Optional[ControllerPair] = None) -> OracleReport:
    """Optimal frame bounds from m independent scalar frame problems."""
    per_slot = tuple(extreme_eigenvalues(S_s) for S_s in dense_slot_operators(sys, ctrl))
    return OracleReport(
        A_oracle=min(lo for lo, _ in per_slot),
        B_oracle=max(hi for _, hi in per_slot),
        A_K_oracle=None,
        per_slot=per_slot,
    )


def _psd_with_jitter(M: np.ndarray, jitter: float) -> bool:
    try:
        np.linalg.cholesky(0.5 * (M + np.conj(M.T)) + jitter * np.eye(M.shape[0]))
    except np.linalg.LinAlgError:
        return False
    return True


def k_bound_bisection(sys: GFusionSystem, ctrl: Optional[ControllerPair], K: AdjointableOp,
                      tol_bisect: float = 1e-10) -> float:
    """Largest ``A`` with ``S - A K K^* >= 0`` in every slot, by bisection.

    Returns ``inf`` when ``K K^* = 0`` and 0 when no positive ``A`` is feasible.
    """
    S = dense_slot_operators(sys, ctrl)
    KK = np.array([k @ np.conj(k.T) for k in K.blocks])
    hi = 0.0
    jitter = []
    for s in range(sys.m):
        s_top = _top_eigenvalue(S[s])
        k_top = _top_eigenvalue(KK[s])
        jitter.append(1e-13 * max(1.0, s_top))
        if k_top > 1e-14:
            hi = max(hi, s_top / k_top)
    if hi == 0.0 and all(_top_eigenvalue(k) <= 1e-14 for k in KK):
        return float("inf")
    hi += 1.0

    def feasible(a):
        return all(_psd_with_jitter(S[s] - a * KK[s], jitter[s]) for s in range(sys.m))

    lo = 0.0
    while hi - lo > tol_bisect * max(1.0, lo):
        mid = 0.5 * (lo + hi)
        if feasible(mid):
            lo = mid
        else:
            hi = mid
    return lo


@dataclass(frozen=True, eq=False)
class CheckInstance:
    """Inputs for :func:`sampled_check`.

    ``A``/``B`` default to the assessed optimal constants (``A_K`` for the
    K-inequalities).  ``other`` and the ``lambda``/``epsilon`` fields are only
    used by ``perturbation_hypothesis``.
    """

    system: GFusionSystem
    controllers: Optional[ControllerPair] = None
    K: Optional[AdjointableOp] = None
    A: Optional[float] = None
    B: Optional[float] = None
    other: Optional[GFusionSystem] = None
    lambda1: float = 0.0
    lambda2: float = 0.0
    epsilon: float = 0.0


class SampledResult(NamedTuple):
    max_violation: float
    witness: Optional[ModuleVector]


PREDICATES = ("frame_order", "frame_norm", "k_frame_order", "k_frame_norm", "perturbation_hypothesis")


def controlled_sum(sys: GFusionSystem, ctrl: ControllerPair, f: ModuleVector):
    """``sum_j v_j^2 <Lambda_j P_j C f, Lambda_j P_j C' f>`` evaluated term by term."""
    # both arguments ride through each member as the two columns of one block
    X = np.stack([(ctrl.C @ f).slots, (ctrl.Cp @ f).slots], axis=-1)
    acc = np.zeros(sys.m, dtype=complex)
    for mem in sys.members:
        Y = mem.Lambda.blocks @ (mem.P.op.blocks @ X)
        acc += (mem.v.entries.real ** 2) * np.sum(Y[:, :, 0] * np.conj(Y[:, :, 1]), axis=1)
    return AlgebraElement(acc)


def sampled_check(predicate_id: str, instance: CheckInstance, n_samples: int = 1000,
                  seed: int = 0) -> SampledResult:
    """Worst signed violation of a frame inequality over random vectors.

    ``frame_order`` and ``k_frame_order`` compare algebra elements slot by
    slot (``A <f,f> <= sum <= B <f,f>``, with ``<K^*f, K^*f>`` on the left for
    the K variant); ``frame_norm`` and ``k_frame_norm`` compare their norms.

    Violations are normalised by ``||f||^2`` (``||f||`` for the perturbation
    hypothesis, which is homogeneous of degree one).  A positive value means
    the inequality failed; the witness is returned when it exceeds 1e-9.
    """
    if predicate_id not in PREDICATES:
        raise ParamError(f"unknown predicate {predicate_id!r}; expected one of {PREDICATES}")
    sys = instance.system
    ctrl = ensure_controlled(sys, instance.controllers)
    needs_k = predicate_id in ("k_frame_order", "k_frame_norm", "perturbation_hypothesis")
    K = instance.K
    if needs_k and K is None:
        K = AdjointableOp.identity(sys.m, sys.n)
    A, B = instance.A, instance.B
    if predicate_id != "perturbation_hypothesis" and (A is None or B is None):
        assessed = assess_k_g_fusion(sys, ctrl, K) if needs_k else assess_controlled(sys, ctrl)
        if A is None:
            A = assessed.K_verdict.A_K if needs_k else assessed.A_opt
        if B is None:
            B = assessed.B_opt
    if predicate_id == "perturbation_hypothesis" and instance.other is None:
        raise ParamError("perturbation_hypothesis needs the perturbed system in 'other'")

    if predicate_id == "perturbation_hypothesis":
        ops_l = analysis_operators(sys, ctrl)
        ops_g = analysis_operators(instance.other, ctrl)

    rng = np.random.default_rng(seed)
    worst, witness = -np.inf, None
    for _ in range(n_samples):
        f = ModuleVector.random(rng, sys.m, sys.n)
        ff = inner_product(f, f).entries.real
        fn2 = float(ff.max())
        if predicate_id == "perturbation_hypothesis":
            tl = apply_analysis_operators(ops_l, f)
            tg = apply_analysis_operators(ops_g, f)
            lhs = (tl - tg).norm()
            rhs = (instance.lambda1 * tl.norm() + instance.lambda2 * tg.norm()
                   + instance.epsilon * (K.adjoint() @ f).norm())
            viol = (lhs - rhs) / np.sqrt(fn2)
        else:
            val = controlled_sum(sys, ctrl, f).entries.real
            if predicate_id in ("k_frame_order", "k_frame_norm"):
                kf = K.adjoint() @ f
                low = inner_product(kf, kf).entries.real
            else:
                low = ff
            # A = inf (K K^* = 0) makes the lower inequality vacuous
            if predicate_id in ("frame_order", "k_frame_order"):
                lower = np.max(A * low - val) if np.isfinite(A) else -np.inf
                viol = max(lower, np.max(val - B * ff)) / fn2
            else:
                vn = float(np.max(val))
                lower = A * float(np.max(low)) - vn if np.isfinite(A) else -np.inf
                viol = max(lower, vn - B * fn2) / fn2
        if viol > worst:
            worst, witness = float(viol), f
    return SampledResult(worst, witness if worst > WITNESS_TOL else None)
