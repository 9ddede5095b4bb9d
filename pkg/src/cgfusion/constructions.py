"""Constructive frame transformations with numerically validated hypotheses.

Each operation checks the hypotheses of the underlying result, refuses with a
named :class:`HypothesisError` when one fails, and otherwise returns the new
system together with its predicted and measured bounds.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Sequence

import numpy as np

from .algebra import AlgebraElement
from .errors import (DimensionError, HypothesisError, MorphismError, ParamError, PositivityError,
                     SingularError)
from .frames import (ControllerPair, FrameAssessment, GFusionSystem, Member, analysis_matrix,
                     assess_controlled, assess_k_g_fusion, ensure_controlled, frame_operator,
                     synthesis_matrix, validate_controllers)
from .hilbert_module import (AdjointableOp, ModuleVector, Projector, central_part, commutes,
                             image_projector, inner_product, op_classify, op_inverse)
from .oracle import CheckInstance, sampled_check

HYP_TOL = 1e-10
PRED_RTOL = 1e-9


class Prediction(NamedTuple):
    A_pred: float
    B_pred: float
    formula_id: str


@dataclass(frozen=True, eq=False)
class TransformResult:
    system: GFusionSystem
    controllers: ControllerPair
    K_out: Optional[AdjointableOp]
    predicted: Prediction
    measured: FrameAssessment
    checks: dict = field(default_factory=dict)

    @property
    def lower_measured(self) -> float:
        """``A_K`` for K-frame conclusions, ``A_opt`` otherwise."""
        kv = self.measured.K_verdict
        return kv.A_K if kv is not None else self.measured.A_opt

    def within_predictions(self, rtol: float = PRED_RTOL) -> bool:
        A_pred, B_pred, _ = self.predicted
        low = self.lower_measured
        if np.isinf(A_pred):
            ok_low = np.isinf(low)
        else:
            ok_low = low >= A_pred - rtol * max(1.0, abs(A_pred))
        ok_high = self.measured.B_opt <= B_pred + rtol * max(1.0, abs(B_pred))
        return bool(ok_low and ok_high)


def _require(flag: bool, check: str, residual: float, detail: str = ""):
    if not flag:
        msg = f"hypothesis '{check}' failed (residual {residual:.3e})"
        raise HypothesisError(msg + (f": {detail}" if detail else ""), check, residual)


def _require_commutes(X: AdjointableOp, Y: AdjointableOp, check: str, tol: float = HYP_TOL):
    flag, resid = commutes(X, Y, tol)
    _require(flag, check, resid)
    return resid


def _invariance_residual(T: AdjointableOp, P: Projector) -> float:
    """``||(I - P) T^* T P||``: zero iff ``T^* T`` maps ``range(P)`` into itself."""
    return (P.complement().op @ T.adjoint() @ T @ P.op).norm()


def _invariance_ok(T: AdjointableOp, P: Projector, tol: float = HYP_TOL) -> tuple:
    r = _invariance_residual(T, P)
    return r <= tol * max(1.0, T.norm() ** 2), r


def _square_check(sys: GFusionSystem, X: AdjointableOp, name: str):
    if X.blocks.shape != (sys.m, sys.n, sys.n):
        raise DimensionError(f"{name} has shape {X.blocks.shape}, expected {(sys.m, sys.n, sys.n)}")


# -- C^2 equivalence -----------------------------------------------------------

def c2_equivalence(sys: GFusionSystem, C: AdjointableOp, direction: str = "to_controlled") -> TransformResult:
    """Pass between the plain family and the one controlled by ``(C, C)``.

    ``to_controlled`` predicts the controlled bounds from the plain ones,
    ``from_controlled`` the plain bounds from the controlled ones.
    """
    if direction not in ("to_controlled", "from_controlled"):
        raise ParamError("direction must be 'to_controlled' or 'from_controlled'")
    _square_check(sys, C, "C")
    cls = op_classify(C)
    if not cls.gl_plus:
        raise PositivityError("C must be positive and invertible")
    ctrl = ensure_controlled(sys, ControllerPair(C, C, True))
    c_inv_norm = op_inverse(C).norm()
    plain = assess_controlled(sys, None)
    controlled = assess_controlled(sys, ctrl)
    if direction == "to_controlled":
        pred = Prediction(plain.A_opt / c_inv_norm ** 2, plain.B_opt * cls.norm ** 2,
                          "A*||C^-1||^-2, B*||C||^2")
        return TransformResult(sys, ctrl, None, pred, controlled)
    # ||(C^-2)^-1|| = ||C^2|| = ||C||^2 for positive C
    pred = Prediction(controlled.A_opt / cls.norm ** 2, controlled.B_opt * c_inv_norm ** 2,
                      "A'*||C^2||^-1, B'*||C^-1||^2")
    return TransformResult(sys, ControllerPair.identity(sys.m, sys.n), None, pred, plain)


# -- composition with theta ----------------------------------------------------

def _theta_prediction(base: FrameAssessment, theta: AdjointableOp) -> Prediction:
    cls = op_classify(theta)
    # ||(theta^* theta)^-1||^-1 = sigma_min(theta)^2
    return Prediction(base.A_opt * cls.min_gap ** 2, base.B_opt * cls.norm ** 2,
                      "A*||(theta^* theta)^-1||^-1, B*||theta||^2")


def _theta_bounded_below(theta: AdjointableOp):
    cls = op_classify(theta)
    _require(cls.bounded_below, "theta injective with closed range", cls.min_gap)


def theta_right(sys: GFusionSystem, ctrl: Optional[ControllerPair], theta: AdjointableOp) -> TransformResult:
    """Replace every ``Lambda_j`` by ``Lambda_j theta``."""
    _square_check(sys, theta, "theta")
    ctrl = ensure_controlled(sys, ctrl)
    _theta_bounded_below(theta)
    checks = {"theta,C": _require_commutes(theta, ctrl.C, "theta commutes with C"),
              "theta,C'": _require_commutes(theta, ctrl.Cp, "theta commutes with C'")}
    for j, mem in enumerate(sys.members):
        checks[f"theta,P[{j}]"] = _require_commutes(theta, mem.P.op, f"theta commutes with P[{j}]")
    base = assess_controlled(sys, ctrl)
    new = sys.with_members([Member(mem.P, mem.Lambda @ theta, mem.v) for mem in sys.members])
    return TransformResult(new, ctrl, None, _theta_prediction(base, theta), assess_controlled(new, ctrl), checks)


def theta_left(sys: GFusionSystem, ctrl: Optional[ControllerPair], theta: AdjointableOp) -> TransformResult:
    """Replace every ``Lambda_j`` by ``theta Lambda_j``.

    A central ``theta = a I`` acts on any codomain.  Otherwise every codomain
    must equal ``A^n`` so that ``theta`` and ``Lambda_j P_j C`` share a space.
    """
    if theta.m != sys.m or not theta.is_square:
        raise DimensionError(f"theta must be square with {sys.m} slots, got {theta.blocks.shape}")
    ctrl = ensure_controlled(sys, ctrl)
    _theta_bounded_below(theta)
    base = assess_controlled(sys, ctrl)
    a = central_part(theta)
    checks = {}
    if a is not None:
        members = [Member(mem.P, mem.Lambda.scale(a), mem.v) for mem in sys.members]
    else:
        ragged = [d for d in sys.codomain_dims if d != theta.n]
        _require(not ragged and theta.n == sys.n, "uniform codomain dims", float(len(ragged)),
                 "a non-central theta needs every codomain equal to the ambient space")
        for j, mem in enumerate(sys.members):
            local = mem.Lambda @ mem.P.op
            checks[f"theta,LPC[{j}]"] = _require_commutes(theta, local @ ctrl.C, f"theta commutes with Lambda P C [{j}]")
            checks[f"theta,LPC'[{j}]"] = _require_commutes(theta, local @ ctrl.Cp, f"theta commutes with Lambda P C' [{j}]")
        members = [Member(mem.P, theta @ mem.Lambda, mem.v) for mem in sys.members]
    new = sys.with_members(members)
    return TransformResult(new, ctrl, None, _theta_prediction(base, theta), assess_controlled(new, ctrl), checks)


# -- conjugation by U ----------------------------------------------------------

def _unitary_side_checks(sys, ctrl, U):
    _square_check(sys, U, "U")
    cls = op_classify(U)
    _require(cls.invertible, "U invertible", cls.min_gap)
    return {"U,C": _require_commutes(U, ctrl.C, "C commutes with U"),
            "U,C'": _require_commutes(U, ctrl.Cp, "C' commutes with U")}


def conjugate_U(sys: GFusionSystem, ctrl: Optional[ControllerPair], U: AdjointableOp,
                K: AdjointableOp) -> TransformResult:
    """Members ``(U W_j, Lambda_j P_j U^*, v_j)``, a ``U K U^*`` frame."""
    ctrl = ensure_controlled(sys, ctrl)
    checks = _unitary_side_checks(sys, ctrl, U)
    _square_check(sys, K, "K")
    members, lemma = [], 0.0
    for j, mem in enumerate(sys.members):
        ok, r = _invariance_ok(U, mem.P)
        _require(ok, f"U^*U W[{j}] in W[{j}]", r)
        P_new = image_projector(U, mem.P)
        lemma = max(lemma, lemma9_check(mem.P, U).residual)
        members.append(Member(P_new, mem.Lambda @ mem.P.op @ U.adjoint(), mem.v))
    checks["lemma9"] = lemma
    base = assess_k_g_fusion(sys, ctrl, K)
    u2 = U.norm() ** 2
    pred = Prediction(base.K_verdict.A_K / u2, base.B_opt * u2, "A_K/||U||^2, B*||U||^2")
    new = sys.with_members(members)
    K_out = U @ K @ U.adjoint()
    return TransformResult(new, ctrl, K_out, pred, assess_k_g_fusion(new, ctrl, K_out), checks)


def inverse_conjugate_U(sys_t: GFusionSystem, ctrl: Optional[ControllerPair], U: AdjointableOp,
                        K: AdjointableOp) -> TransformResult:
    """Undo :func:`conjugate_U`: from ``(V_j, Gamma_j)`` with ``V_j = U W_j``
    and ``Gamma_j = Lambda_j P_j U^*`` recover ``(W_j, Gamma_j U^{-*})``,
    a ``U^-1 K U`` frame.
    """
    ctrl = ensure_controlled(sys_t, ctrl)
    checks = _unitary_side_checks(sys_t, ctrl, U)
    _square_check(sys_t, K, "K")
    U_inv = op_inverse(U)
    U_inv_adj = U_inv.adjoint()
    members, form = [], 0.0
    for j, mem in enumerate(sys_t.members):
        P_w = image_projector(U_inv, mem.P)
        ok, r = _invariance_ok(U, P_w)
        _require(ok, f"U^*U W[{j}] in W[{j}]", r)
        Lam = mem.Lambda @ mem.P.op @ U_inv_adj
        # the family must have the transformed shape Gamma_j = Lambda_j P_W U^*
        r_form = (mem.Lambda @ mem.P.op - Lam @ P_w.op @ U.adjoint()).norm()
        _require(r_form <= HYP_TOL * max(1.0, mem.Lambda.norm() * U.norm() * U_inv.norm()),
                 f"Gamma[{j}] = Lambda P_W U^*", r_form)
        form = max(form, r_form)
        members.append(Member(P_w, Lam, mem.v))
    checks["form"] = form
    base = assess_k_g_fusion(sys_t, ctrl, K)
    pred = Prediction(base.K_verdict.A_K / U.norm() ** 2, base.B_opt * U_inv.norm() ** 2,
                      "A_K/||U||^2, B*||U^-1||^2")
    new = sys_t.with_members(members)
    K_out = U_inv @ K @ U
    return TransformResult(new, ctrl, K_out, pred, assess_k_g_fusion(new, ctrl, K_out), checks)


# -- the K S^-1 K^* system -----------------------------------------------------

def canonical_K(sys: GFusionSystem, ctrl: Optional[ControllerPair], K: AdjointableOp) -> TransformResult:
    """Members ``(T W_j, Lambda_j P_j T^*, v_j)`` with ``T = K S^-1``.

    Its frame operator is ``K S^-1 K^*``; the residual of that identity is
    recorded in ``checks["frame_operator_identity"]``.
    """
    ctrl = ensure_controlled(sys, ctrl)
    _square_check(sys, K, "K")
    if not op_classify(K).invertible:
        raise SingularError("K must be invertible")
    base = assess_k_g_fusion(sys, ctrl, K)
    if not base.is_frame:
        raise SingularError("frame operator is singular")
    S_inv = op_inverse(base.S)
    T = K @ S_inv
    checks = {"T,C": _require_commutes(T, ctrl.C, "C commutes with K S^-1"),
              "T,C'": _require_commutes(T, ctrl.Cp, "C' commutes with K S^-1")}
    members = []
    for j, mem in enumerate(sys.members):
        ok, r = _invariance_ok(T, mem.P)
        _require(ok, f"T^*T W[{j}] in W[{j}]", r)
        members.append(Member(image_projector(T, mem.P), mem.Lambda @ mem.P.op @ T.adjoint(), mem.v))
    new = sys.with_members(members)
    measured = assess_k_g_fusion(new, ctrl, K)
    target = K @ S_inv @ K.adjoint()
    checks["frame_operator_identity"] = (measured.S - target).norm()
    A, B = base.A_opt, base.B_opt
    pred = Prediction(A / B ** 2, B * K.norm() ** 2 / A ** 2, "A/B^2, B*||K||^2/A^2")
    return TransformResult(new, ctrl, K, pred, measured, checks)


# -- Bessel pairs --------------------------------------------------------------

class BesselPairResult(NamedTuple):
    K: AdjointableOp
    lower_Lambda: float
    lower_Gamma: float
    A_K_Lambda: float
    A_K_Gamma: float

    @property
    def verified(self) -> bool:
        return bool(self.A_K_Lambda >= self.lower_Lambda - 1e-9 * max(1.0, self.lower_Lambda)
                    and self.A_K_Gamma >= self.lower_Gamma - 1e-9 * max(1.0, self.lower_Gamma))


def bessel_pair_K(sys_lambda: GFusionSystem, sys_gamma: GFusionSystem,
                  ctrl: Optional[ControllerPair]) -> BesselPairResult:
    """``K^* = T_Gamma T_Lambda^*`` and the lower K-bounds it certifies.

    Lambda is a ``K`` frame with lower bound ``1/B_Gamma``; Gamma is a ``K^*``
    frame with lower bound ``1/B_Lambda``.
    """
    if (sys_lambda.m, sys_lambda.n) != (sys_gamma.m, sys_gamma.n):
        raise DimensionError("the two families live on different modules")
    if sys_lambda.codomain_dims != sys_gamma.codomain_dims:
        raise DimensionError("the two families need the same coefficient spaces")
    ctrl_l = ensure_controlled(sys_lambda, ctrl)
    ensure_controlled(sys_gamma, ctrl_l)
    K_adj = synthesis_matrix(sys_gamma, ctrl_l) @ synthesis_matrix(sys_lambda, ctrl_l).adjoint()
    K = K_adj.adjoint()
    a_l = assess_k_g_fusion(sys_lambda, ctrl_l, K)
    a_g = assess_k_g_fusion(sys_gamma, ctrl_l, K_adj)
    return BesselPairResult(K, 1.0 / a_g.B_opt, 1.0 / a_l.B_opt, a_l.K_verdict.A_K, a_g.K_verdict.A_K)


# -- transport along a slot map ------------------------------------------------

def _check_slot_map(slot_map, m: int, strict: bool) -> np.ndarray:
    sm = np.asarray(slot_map, dtype=int).reshape(-1)
    if sm.size == 0:
        raise MorphismError("slot map is empty")
    if sm.min() < 0 or sm.max() >= m:
        raise MorphismError(f"slot map entries must lie in [0, {m})")
    if strict and len(set(sm.tolist())) != sm.size:
        raise MorphismError("slot map is not injective, so the transport is not onto")
    return sm


def transport_vector(f: ModuleVector, slot_map) -> ModuleVector:
    return ModuleVector(f.slots[np.asarray(slot_map)])


def morphism_transport(sys: GFusionSystem, ctrl: Optional[ControllerPair], slot_map: Sequence[int],
                       strict: bool = True, n_samples: int = 16, seed: int = 0) -> TransformResult:
    """Push the family along ``phi(a)_t = a[slot_map[t]]``.

    ``slot_map[t]`` is the source slot feeding target slot ``t``.  With
    ``strict`` (the default) repeated sources are refused, since the vector map
    is then not onto.  ``checks["intertwining"]`` is the largest
    ``|<S_B theta f, theta g> - phi(<S_A f, g>)|`` over random pairs.
    """
    ctrl = ensure_controlled(sys, ctrl)
    sm = _check_slot_map(slot_map, sys.m, strict)

    def op(X):
        return AdjointableOp(X.blocks[sm])

    members = [Member(Projector(op(mem.P.op), tuple(np.asarray(mem.P.ranks)[sm].tolist())),
                      op(mem.Lambda), AlgebraElement(mem.v.entries[sm])) for mem in sys.members]
    new = sys.with_members(members)
    new_ctrl = validate_controllers(new, op(ctrl.C), op(ctrl.Cp))
    base = assess_controlled(sys, ctrl)
    measured = assess_controlled(new, new_ctrl)
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_samples):
        f = ModuleVector.random(rng, sys.m, sys.n)
        g = ModuleVector.random(rng, sys.m, sys.n)
        lhs = inner_product(measured.S @ transport_vector(f, sm), transport_vector(g, sm)).entries
        rhs = inner_product(base.S @ f, g).entries[sm]
        worst = max(worst, float(np.max(np.abs(lhs - rhs))))
    checks = {"intertwining": worst,
              "bounds_shift": max(abs(measured.A_opt - base.A_opt), abs(measured.B_opt - base.B_opt))}
    pred = Prediction(base.A_opt, base.B_opt, "A, B preserved")
    return TransformResult(new, new_ctrl, None, pred, measured, checks)


# -- the projection identity ---------------------------------------------------

class Lemma9Result(NamedTuple):
    holds: bool
    residual: float
    hypothesis_residual: float


def lemma9_check(W: Projector, T: AdjointableOp, tol: float = 1e-10) -> Lemma9Result:
    """Measure ``||P_W T^* - P_W T^* P_TW||`` for invertible ``T``.

    ``holds`` needs both ``T^*T W`` inside ``W`` and the residual within
    ``tol`` (scaled by ``||T||`` when that exceeds 1).
    """
    if not op_classify(T).invertible:
        raise SingularError("T must be invertible")
    hyp_ok, hyp = _invariance_ok(T, W, tol)
    P_tw = image_projector(T, W)
    lhs = W.op @ T.adjoint()
    residual = (lhs - lhs @ P_tw.op).norm()
    return Lemma9Result(bool(hyp_ok and residual <= tol * max(1.0, T.norm())), residual, hyp)


# -- perturbation --------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class PerturbationReport:
    lambda1: float
    lambda2: float
    epsilon: float
    hypothesis: dict
    gate: bool
    predicted_lower: float
    predicted_upper: float
    measured: FrameAssessment
    A: float
    B: float

    @property
    def status(self) -> str:
        """``certified``, ``falsified`` or ``inconclusive`` for the hypothesis."""
        if self.hypothesis["falsified_by_sample"]:
            return "falsified"
        return "certified" if self.hypothesis["certificate"] else "inconclusive"

    @property
    def certified(self) -> bool:
        """Hypothesis certified and the gate on ``epsilon`` passed."""
        return self.status == "certified" and self.gate

    @property
    def bounds_hold(self) -> bool:
        rel = 1e-8
        low = self.measured.K_verdict.A_K
        return bool(low >= self.predicted_lower * (1 - rel) - 1e-300
                    and self.measured.B_opt <= self.predicted_upper * (1 + rel))

    @property
    def verified(self) -> Optional[bool]:
        """Measured bounds inside predictions; ``None`` when not certified."""
        return self.bounds_hold if self.certified else None


def _check_perturbation_params(lambda1, lambda2, epsilon):
    if not (0 < lambda1 < 1 and 0 < lambda2 < 1):
        raise ParamError("lambda1 and lambda2 must lie in (0, 1)")
    if not (epsilon >= 0 and np.isfinite(epsilon)):
        raise ParamError("epsilon must be finite and >= 0")


def _perturbation_pieces(sys_l, sys_g, ctrl, K):
    if (sys_l.m, sys_l.n) != (sys_g.m, sys_g.n) or sys_l.codomain_dims != sys_g.codomain_dims:
        raise DimensionError("the two families need the same module and coefficient spaces")
    ctrl = ensure_controlled(sys_l, ctrl)
    ensure_controlled(sys_g, ctrl)
    _square_check(sys_l, K, "K")
    T_l = analysis_matrix(sys_l, ctrl).blocks
    T_g = analysis_matrix(sys_g, ctrl).blocks
    d_norm = np.linalg.norm(T_l - T_g, ord=2, axis=(1, 2))
    n = sys_l.n

    def smin(X):
        sv = np.linalg.svd(X, compute_uv=False)
        return sv[:, n - 1] if X.shape[1] >= n else np.zeros(X.shape[0])

    return ctrl, d_norm, smin(T_l), smin(T_g), smin(np.conj(np.swapaxes(K.blocks, 1, 2)))


def fit_epsilon(sys_lambda, sys_gamma, ctrl, K, lambda1: float, lambda2: float) -> float:
    """Smallest ``epsilon`` for which the slotwise certificate holds."""
    _check_perturbation_params(lambda1, lambda2, 0.0)
    _, d, s_l, s_g, s_k = _perturbation_pieces(sys_lambda, sys_gamma, ctrl, K)
    deficit = d - lambda1 * s_l - lambda2 * s_g
    eps = 0.0
    for df, sk in zip(deficit, s_k):
        if df <= 0:
            continue
        if sk <= 0:
            return float("inf")
        eps = max(eps, df / sk)
    return eps * (1 + 1e-12) + 1e-15


def perturbation_check(sys_lambda: GFusionSystem, sys_gamma: GFusionSystem,
                       ctrl: Optional[ControllerPair], K: AdjointableOp, lambda1: float,
                       lambda2: float, epsilon: float, n_samples: int = 200,
                       seed: int = 0) -> PerturbationReport:
    """Test the perturbation hypothesis and compare Gamma with the predicted bounds.

    The certificate is per slot: ``||D_s|| <= lambda1 s_min(T_Lambda,s^*) +
    lambda2 s_min(T_Gamma,s^*) + epsilon s_min(K_s^*)`` with ``D`` the
    difference of the analysis operators.  It implies the hypothesis for all
    ``f``; sampling can only refute it.
    """
    _check_perturbation_params(lambda1, lambda2, epsilon)
    ctrl, d, s_l, s_g, s_k = _perturbation_pieces(sys_lambda, sys_gamma, ctrl, K)
    rhs = lambda1 * s_l + lambda2 * s_g + epsilon * s_k
    slack = 1e-12 * max(1.0, float(d.max()))
    certificate = bool(np.all(d <= rhs + slack))
    inst = CheckInstance(sys_lambda, ctrl, K, other=sys_gamma, lambda1=lambda1,
                         lambda2=lambda2, epsilon=epsilon)
    sampled = sampled_check("perturbation_hypothesis", inst, n_samples, seed) if n_samples > 0 \
        else None
    gap = sampled.max_violation if sampled is not None else float("-inf")
    base = assess_k_g_fusion(sys_lambda, ctrl, K)
    A, B = base.K_verdict.A_K, base.B_opt
    rootA = np.sqrt(A)
    gate = bool(epsilon < (1 - lambda1) * rootA)
    lower = max((1 - lambda1) * rootA - epsilon, 0.0) ** 2 / (1 + lambda2) ** 2
    upper = ((1 + lambda1) * np.sqrt(B) + epsilon * K.norm()) ** 2 / (1 - lambda2) ** 2
    hyp = {"certificate": certificate,
           "falsified_by_sample": bool(sampled is not None and sampled.witness is not None),
           "worst_sample_gap": float(gap)}
    measured = assess_k_g_fusion(sys_gamma, ctrl, K)
    return PerturbationReport(lambda1, lambda2, epsilon, hyp, gate, float(lower), float(upper),
                              measured, float(A), float(B))
