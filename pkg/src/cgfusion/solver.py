"""Iterative inversion of the frame operator and signal reconstruction."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np

from .errors import BoundsError, ConvergenceError, ParamError, PositivityError, SingularError
from .frames import (CoefficientFamily, ControllerPair, GFusionSystem, assess_controlled,
                     ensure_controlled, frame_operator, synthesis_apply, validate_controllers)
from .hilbert_module import AdjointableOp, ModuleVector, op_classify, op_inv_sqrt, op_inverse


@dataclass
class SolveReport:
    method: str
    iterations: int = 0
    residual_history: list = field(default_factory=list)
    contraction_observed: float = 0.0
    bound_ratio: float = float("nan")
    rel_error: float = float("nan")
    energy_history: list = field(default_factory=list)
    error_history: list = field(default_factory=list)
    predicted_iterations: Optional[int] = None


def _norm(x: np.ndarray) -> float:
    return float(np.linalg.norm(x, axis=-1).max())


def _max_ratio(hist) -> float:
    ratios = [b / a for a, b in zip(hist, hist[1:]) if a > 0]
    return max(ratios) if ratios else 0.0


def predicted_iterations(A: float, B: float, tol: float) -> int:
    """``ceil(ln tol / ln r)`` steps with ``r = (B - A)/(B + A)``; at least 1."""
    r = (B - A) / (B + A)
    if r <= 0:
        return 1
    return max(1, math.ceil(math.log(tol) / math.log(r)))


def certify_bounds(S: AdjointableOp, A: float, B: float, rtol: float = 1e-9) -> None:
    """Raise BoundsError unless ``A I <= S <= B I`` with ``0 < A <= B``."""
    if not (np.isfinite(A) and np.isfinite(B) and 0 < A <= B):
        raise BoundsError(f"need 0 < A <= B < inf, got A={A}, B={B}")
    H = S.hermitian_part()
    if (S - H).norm() > rtol * max(1.0, S.norm()):
        raise BoundsError("operator is not self-adjoint")
    w = np.linalg.eigvalsh(H.blocks)
    slack = rtol * max(1.0, B)
    if w.min() < A - slack or w.max() > B + slack:
        raise BoundsError(f"spectrum [{w.min():.6g}, {w.max():.6g}] not inside [{A:.6g}, {B:.6g}]")


def richardson_invert(S: AdjointableOp, b: ModuleVector, A: float, B: float, tol: float = 1e-8,
                      max_iter: int = 100000, error_tol: Optional[float] = None,
                      x_true: Optional[ModuleVector] = None):
    """Solve ``S x = b`` by ``x <- x + 2/(A+B) (b - S x)`` from ``x = 0``.

    Stops when ``||b - S x|| <= tol ||b||`` or, if ``error_tol`` is given, once
    ``r^k <= error_tol`` which bounds the relative error a priori.  With
    ``x_true`` the error history and final relative error are recorded.
    """
    if tol <= 0 or (error_tol is not None and error_tol <= 0):
        raise ParamError("tolerances must be positive")
    certify_bounds(S, A, B)
    omega = 2.0 / (A + B)
    ratio = (B - A) / (B + A)
    report = SolveReport("richardson", bound_ratio=ratio)
    if error_tol is not None:
        report.predicted_iterations = predicted_iterations(A, B, error_tol)
    blocks = S.blocks
    bb = b.slots
    bnorm = _norm(bb)
    truth = None if x_true is None else x_true.slots
    tnorm = None if truth is None else _norm(truth)
    x = np.zeros_like(bb)
    r = bb.copy()
    report.residual_history.append(1.0 if bnorm > 0 else 0.0)
    if truth is not None:
        report.error_history.append(1.0 if tnorm > 0 else 0.0)
    if bnorm == 0:
        report.rel_error = 0.0
        return ModuleVector(x), report
    k = 0
    while True:
        if report.residual_history[-1] <= tol:
            break
        if error_tol is not None and ratio ** k <= error_tol and k > 0:
            break
        if k >= max_iter:
            _finish(report, k, truth, x, tnorm)
            raise ConvergenceError(f"richardson did not converge in {max_iter} iterations", report)
        # r <- (I - omega S) r: same as b - S x without the cancellation
        x = x + omega * r
        r = r - omega * np.einsum("spn,sn->sp", blocks, r)
        k += 1
        report.residual_history.append(_norm(r) / bnorm)
        if truth is not None:
            report.error_history.append(_norm(x - truth) / tnorm if tnorm > 0 else _norm(x))
    _finish(report, k, truth, x, tnorm)
    return ModuleVector(x), report


def _finish(report, k, truth, x, tnorm):
    report.iterations = k
    report.contraction_observed = _max_ratio(report.residual_history)
    if truth is not None:
        report.rel_error = report.error_history[-1]
    else:
        report.rel_error = report.residual_history[-1]


def cg_invert(S: AdjointableOp, b: ModuleVector, tol: float = 1e-8, max_iter: Optional[int] = None,
              x_true: Optional[ModuleVector] = None):
    """Conjugate gradients run independently in every slot, in lock step.

    Each new search direction is made S-conjugate to all earlier ones, so
    the n-step termination survives rounding on clustered spectra.

    A slot stops once its residual is at most ``tol`` times its right-hand
    side.  ``energy_history`` holds ``sum_s (x^*Sx/2 - Re b^*x)``, which CG
    decreases monotonically.
    """
    if tol <= 0:
        raise ParamError("tol must be positive")
    if not op_classify(S).gl_plus:
        raise PositivityError("conjugate gradients needs a positive definite operator")
    m, n = S.m, S.n
    max_iter = 10 * n if max_iter is None else max_iter
    H = S.hermitian_part().blocks
    w = np.linalg.eigvalsh(H)
    report = SolveReport("cg", bound_ratio=float((w[:, -1].max() - w[:, 0].min()) / (w[:, -1].max() + w[:, 0].min())))
    bb = b.slots
    bnorm = _norm(bb)
    slot_b = np.linalg.norm(bb, axis=1)
    x = np.zeros_like(bb)
    r = bb.copy()
    p = r.copy()
    rr = np.einsum("sn,sn->s", r.conj(), r).real
    active = np.sqrt(rr) > tol * slot_b
    per_slot_iters = np.zeros(m, dtype=int)
    history = []

    def energy(xv):
        Sx = np.einsum("spn,sn->sp", H, xv)
        return float(np.sum(0.5 * np.einsum("sn,sn->s", xv.conj(), Sx).real
                            - np.einsum("sn,sn->s", bb.conj(), xv).real))

    report.residual_history.append(1.0 if bnorm > 0 else 0.0)
    report.energy_history.append(energy(x))
    k = 0
    while active.any():
        if k >= max_iter:
            _finish(report, k, None if x_true is None else x_true.slots, x, None)
            raise ConvergenceError(f"cg did not converge in {max_iter} iterations", report)
        Sp = np.einsum("spn,sn->sp", H, p)
        pSp = np.einsum("sn,sn->s", p.conj(), Sp).real
        alpha = np.where(active, rr / np.where(pSp > 0, pSp, 1.0), 0.0)
        x = x + alpha[:, None] * p
        r = r - alpha[:, None] * Sp
        rr_new = np.einsum("sn,sn->s", r.conj(), r).real
        beta = np.where(active, rr_new / np.where(rr > 0, rr, 1.0), 0.0)
        history.append((p, Sp, pSp))
        p_next = r + beta[:, None] * p
        # re-conjugate against every earlier direction; keeps finite termination in floating point
        for q, Sq, qSq in history:
            coef = np.einsum("sn,sn->s", Sq.conj(), p_next) / np.where(qSq > 0, qSq, 1.0)
            p_next = p_next - coef[:, None] * q
        p = np.where(active[:, None], p_next, p)
        rr = np.where(active, rr_new, rr)
        per_slot_iters += active
        active = active & (np.sqrt(rr) > tol * slot_b)
        k += 1
        report.residual_history.append(_norm(r) / bnorm)
        report.energy_history.append(energy(x))
    report.iterations = int(per_slot_iters.max()) if m else 0
    report.contraction_observed = _max_ratio(report.residual_history)
    if x_true is not None:
        t = x_true.slots
        tn = _norm(t)
        report.rel_error = _norm(x - t) / tn if tn > 0 else _norm(x)
    else:
        report.rel_error = _norm(bb - np.einsum("spn,sn->sp", S.blocks, x)) / bnorm if bnorm > 0 else 0.0
    return ModuleVector(x), report


def reconstruct(sys: GFusionSystem, ctrl: Optional[ControllerPair], coeffs: CoefficientFamily,
                method: str = "richardson", tol: float = 1e-8, max_iter: int = 100000,
                x_true: Optional[ModuleVector] = None):
    """Synthesize ``coeffs`` and invert the frame operator on the result.

    When ``coeffs`` is the analysis of ``f`` the output approximates ``f`` to
    relative accuracy ``tol``: the residual threshold is ``tol / kappa`` and
    Richardson may also stop after the a-priori count ``ceil(ln tol / ln r)``.
    """
    if method not in ("richardson", "cg"):
        raise ParamError("method must be 'richardson' or 'cg'")
    ctrl = ensure_controlled(sys, ctrl)
    assessed = assess_controlled(sys, ctrl)
    if not assessed.is_frame:
        raise SingularError("the family is not a frame, the frame operator is not invertible")
    b = synthesis_apply(sys, ctrl, coeffs)
    A, B = assessed.A_opt, assessed.B_opt
    res_tol = tol / assessed.condition_number
    if method == "richardson":
        return richardson_invert(assessed.S, b, A, B, res_tol, max_iter, error_tol=tol, x_true=x_true)
    return cg_invert(assessed.S, b, res_tol, None, x_true=x_true)


class ConditioningReport(NamedTuple):
    kappa_base: float
    kappa_test: float
    iters_base: int
    iters_test: int


def whitening_controllers(sys: GFusionSystem, kind: str = "inverse") -> ControllerPair:
    """Controllers that turn the controlled frame operator into the identity.

    With ``S0`` the uncontrolled frame operator, ``inverse`` gives
    ``C = S0^-1, C' = I`` and ``sqrt`` gives ``C = C' = S0^-1/2``.  The pair is
    validated, so it is only usable when ``S0`` commutes with every member.
    """
    S0 = frame_operator(sys, None)
    if kind == "inverse":
        C, Cp = op_inverse(S0.hermitian_part()), AdjointableOp.identity(sys.m, sys.n)
    elif kind == "sqrt":
        C = op_inv_sqrt(S0.hermitian_part())
        Cp = C
    else:
        raise ParamError("kind must be 'inverse' or 'sqrt'")
    return validate_controllers(sys, C.hermitian_part(), Cp.hermitian_part())


def conditioning_report(sys: GFusionSystem, base_ctrl: Optional[ControllerPair],
                        test_ctrl: Optional[ControllerPair], tol: float = 1e-8,
                        seed: int = 0, max_iter: int = 100000) -> ConditioningReport:
    """Condition numbers and Richardson iteration counts under two controller pairs."""
    b = ModuleVector.random(np.random.default_rng(seed), sys.m, sys.n)
    out = []
    for ctrl in (base_ctrl, test_ctrl):
        ctrl = ensure_controlled(sys, ctrl)
        a = assess_controlled(sys, ctrl)
        _, rep = richardson_invert(a.S, b, a.A_opt, a.B_opt, tol, max_iter)
        out.append((a.condition_number, rep.iterations))
    return ConditioningReport(out[0][0], out[1][0], out[0][1], out[1][1])
