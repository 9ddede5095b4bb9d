"""Controlled g-fusion systems, their synthesis/analysis/frame operators and
optimal bounds.

A system is a finite family of members ``(P_j, Lambda_j, v_j)``: an
orthogonal projector onto the submodule W_j, an adjointable map
``Lambda_j: A^n -> A^{n_j}`` and a positive invertible weight.  A controller
pair ``(C, C')`` of positive invertible operators reshapes the frame
operator to ``S = sum_j v_j^2 C' P_j Lambda_j^* Lambda_j P_j C``.

Frame bounds are always reported as optimal scalar constants, i.e. extreme
eigenvalues of ``S`` over all slots.
"""
from __future__ import annotations

import weakref
from dataclasses import dataclass, field, replace
from typing import NamedTuple, Optional, Sequence

import numpy as np

from .algebra import TAU_ALG, AlgebraElement
from .errors import CommutationError, DimensionError, PositivityError, WeightError
from .hilbert_module import (AdjointableOp, ModuleVector, Projector, commutes,
                             inner_product, op_classify, op_sqrt)

#: Relative tolerance used for commutation hypotheses.
COMMUTE_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class Member:
    """One frame member ``(W_j, Lambda_j, v_j)`` with W_j given by its projector."""

    P: Projector
    Lambda: AdjointableOp
    v: AlgebraElement

    @property
    def codim(self) -> int:
        return self.Lambda.p

    def local_operator(self) -> AdjointableOp:
        """``P_j Lambda_j^* Lambda_j P_j``."""
        LP = self.Lambda @ self.P.op
        return LP.adjoint() @ LP


@dataclass(frozen=True, eq=False)
class GFusionSystem:
    """A validated family of frame members over A^n, A = C^m."""

    members: tuple

    def __post_init__(self):
        members = tuple(self.members)
        if not members:
            raise DimensionError("a system needs at least one member")
        m, n = members[0].P.m, members[0].P.n
        for j, mem in enumerate(members):
            if mem.P.op.blocks.shape != (m, n, n):
                raise DimensionError(f"member {j}: projector shape {mem.P.op.blocks.shape}, expected {(m, n, n)}")
            if mem.Lambda.m != m or mem.Lambda.n != n:
                raise DimensionError(f"member {j}: Lambda shape {mem.Lambda.blocks.shape} not defined on A^{n} (m={m})")
            if mem.v.m != m:
                raise DimensionError(f"member {j}: weight has {mem.v.m} slots, expected {m}")
            if not (mem.v.is_self_adjoint() and np.all(mem.v.entries.real > TAU_ALG)):
                raise WeightError(f"member {j}: weight {mem.v.entries} is not positive invertible")
        object.__setattr__(self, "members", members)

    @property
    def m(self) -> int:
        return self.members[0].P.m

    @property
    def n(self) -> int:
        return self.members[0].P.n

    @property
    def J(self) -> int:
        return len(self.members)

    @property
    def codomain_dims(self) -> tuple:
        return tuple(mem.codim for mem in self.members)

    def local_operators(self) -> list:
        return [mem.local_operator() for mem in self.members]

    def with_members(self, members) -> "GFusionSystem":
        return GFusionSystem(tuple(members))

    def __repr__(self):
        return f"GFusionSystem(m={self.m}, n={self.n}, J={self.J}, codims={self.codomain_dims})"


@dataclass(frozen=True, eq=False)
class ControllerPair:
    """Controllers ``(C, C')``; ``validated`` records the commutation checks."""

    C: AdjointableOp
    Cp: AdjointableOp
    validated: bool = False
    residuals: dict = field(default_factory=dict)

    @classmethod
    def identity(cls, m: int, n: int) -> "ControllerPair":
        I = AdjointableOp.identity(m, n)
        return cls(I, I, True, {})

    @classmethod
    def scalar(cls, alpha: float, beta: float, m: int, n: int) -> "ControllerPair":
        I = AdjointableOp.identity(m, n)
        return cls(I.scale(alpha), I.scale(beta), True, {})


def validate_controllers(sys: GFusionSystem, C: AdjointableOp, Cp: AdjointableOp,
                         tol: float = COMMUTE_TOL) -> ControllerPair:
    """Measure every commutation hypothesis of ``(C, C')`` against ``sys``.

    Never raises on a failed commutation; the returned pair simply has
    ``validated=False``.  Non-positive or singular controllers are rejected.
    """
    for name, X in (("C", C), ("C'", Cp)):
        if X.blocks.shape != (sys.m, sys.n, sys.n):
            raise DimensionError(f"{name} has shape {X.blocks.shape}, expected {(sys.m, sys.n, sys.n)}")
        if not op_classify(X).gl_plus:
            raise PositivityError(f"{name} is not positive invertible")
    residuals = {}
    ok = True
    flag, residuals["CC'"] = commutes(C, Cp, tol)
    ok &= flag
    for j, phi in enumerate(sys.local_operators()):
        for name, X in (("C", C), ("C'", Cp)):
            flag, residuals[f"{name},phi[{j}]"] = commutes(X, phi, tol)
            ok &= flag
    return ControllerPair(C, Cp, bool(ok), residuals)


def ensure_controlled(sys: GFusionSystem, ctrl: Optional[ControllerPair]) -> ControllerPair:
    """Return ``ctrl`` re-validated for ``sys``; ``None`` means ``C = C' = I``.

    Raises CommutationError for a pair marked unvalidated or one that fails
    the hypotheses for this particular system.
    """
    if ctrl is None:
        return ControllerPair.identity(sys.m, sys.n)
    if not ctrl.validated:
        raise CommutationError("controller pair is not validated", ctrl.residuals)
    seen = _VALIDATED.setdefault(sys, {})
    hit = seen.get(id(ctrl))
    if hit is not None and hit[0] is ctrl:
        return hit[1]
    checked = validate_controllers(sys, ctrl.C, ctrl.Cp)
    if not checked.validated:
        worst = max(checked.residuals, key=checked.residuals.get)
        raise CommutationError(
            f"controllers fail commutation for this system (worst: {worst} = {checked.residuals[worst]:.3e})",
            checked.residuals)
    # systems and pairs are immutable, so a passed validation stays valid
    seen[id(ctrl)] = (ctrl, checked)
    seen[id(checked)] = (checked, checked)
    return checked


_VALIDATED: "weakref.WeakKeyDictionary" = weakref.WeakKeyDictionary()


def build_frame_system(members: Sequence[Member], controllers: Optional[ControllerPair] = None,
                       strict: bool = True) -> GFusionSystem:
    """Validate members and, optionally, a controller pair for them.

    With ``strict=False`` a failing pair does not raise; call
    :func:`validate_controllers` to inspect its residuals.
    """
    sys = GFusionSystem(tuple(members))
    if controllers is not None:
        checked = validate_controllers(sys, controllers.C, controllers.Cp)
        if strict and not checked.validated:
            raise CommutationError("controllers fail commutation hypotheses", checked.residuals)
    return sys


@dataclass(frozen=True, eq=False)
class CoefficientFamily:
    """Element ``{f_j}`` of l^2({H_j}); part j lives in A^{n_j}."""

    parts: tuple

    def __post_init__(self):
        object.__setattr__(self, "parts", tuple(self.parts))

    def energy(self) -> AlgebraElement:
        """``sum_j <f_j, f_j>``."""
        return sum((inner_product(f, f) for f in self.parts[1:]), inner_product(self.parts[0], self.parts[0]))

    def inner(self, other: "CoefficientFamily") -> AlgebraElement:
        self._check(other)
        acc = inner_product(self.parts[0], other.parts[0])
        for f, g in zip(self.parts[1:], other.parts[1:]):
            acc = acc + inner_product(f, g)
        return acc

    def norm(self) -> float:
        return float(np.sqrt(self.energy().norm()))

    def _check(self, other: "CoefficientFamily"):
        if len(other.parts) != len(self.parts):
            raise DimensionError("coefficient families have different lengths")

    def __sub__(self, other):
        self._check(other)
        return CoefficientFamily(tuple(f - g for f, g in zip(self.parts, other.parts)))

    @classmethod
    def zeros(cls, sys: GFusionSystem) -> "CoefficientFamily":
        return cls(tuple(ModuleVector.zeros(sys.m, d) for d in sys.codomain_dims))

    @classmethod
    def random(cls, sys: GFusionSystem, rng: np.random.Generator) -> "CoefficientFamily":
        return cls(tuple(ModuleVector.random(rng, sys.m, d) for d in sys.codomain_dims))


def _sqrt_product(X: AdjointableOp, Y: AdjointableOp) -> AdjointableOp:
    # XY is positive when X, Y are commuting positives; symmetrize away roundoff
    return op_sqrt((X @ Y).hermitian_part())


def _synthesis_sum(sys: GFusionSystem, root: AdjointableOp, coeffs: CoefficientFamily) -> ModuleVector:
    if len(coeffs.parts) != sys.J:
        raise DimensionError(f"expected {sys.J} coefficient parts, got {len(coeffs.parts)}")
    acc = np.zeros((sys.m, sys.n), dtype=complex)
    for mem, f in zip(sys.members, coeffs.parts):
        if f.slots.shape != (sys.m, mem.codim):
            raise DimensionError(f"coefficient part shape {f.slots.shape}, expected {(sys.m, mem.codim)}")
        acc += (mem.P.op @ (mem.Lambda.adjoint() @ f)).slots * mem.v.entries[:, None]
    return root @ ModuleVector(acc)


def synthesis_apply(sys: GFusionSystem, ctrl: Optional[ControllerPair],
                    coeffs: CoefficientFamily) -> ModuleVector:
    """``sum_j v_j (C C')^(1/2) P_j Lambda_j^* f_j`` in index order."""
    ctrl = ensure_controlled(sys, ctrl)
    return _synthesis_sum(sys, _sqrt_product(ctrl.C, ctrl.Cp), coeffs)


def analysis_operators(sys: GFusionSystem, ctrl: Optional[ControllerPair]) -> list:
    """Per-member maps ``v_j Lambda_j P_j (C' C)^(1/2)``, A^n -> A^{n_j}."""
    ctrl = ensure_controlled(sys, ctrl)
    root = _sqrt_product(ctrl.Cp, ctrl.C)
    return [(mem.Lambda @ mem.P.op @ root).scale(mem.v) for mem in sys.members]


def apply_analysis_operators(ops: Sequence[AdjointableOp], g: ModuleVector) -> CoefficientFamily:
    return CoefficientFamily(tuple(op @ g for op in ops))


def analysis_apply(sys: GFusionSystem, ctrl: Optional[ControllerPair],
                   g: ModuleVector) -> CoefficientFamily:
    """``{v_j Lambda_j P_j (C' C)^(1/2) g}_j``."""
    if g.slots.shape != (sys.m, sys.n):
        raise DimensionError(f"vector shape {g.slots.shape}, expected {(sys.m, sys.n)}")
    return apply_analysis_operators(analysis_operators(sys, ctrl), g)


def analysis_matrix(sys: GFusionSystem, ctrl: Optional[ControllerPair] = None) -> AdjointableOp:
    """Analysis operator as one stacked map ``A^n -> A^{sum n_j}``."""
    return AdjointableOp(np.concatenate([op.blocks for op in analysis_operators(sys, ctrl)], axis=1))


def frame_operator(sys: GFusionSystem, ctrl: Optional[ControllerPair] = None) -> AdjointableOp:
    """``S = sum_j v_j^2 C' P_j Lambda_j^* Lambda_j P_j C``."""
    ctrl = ensure_controlled(sys, ctrl)
    acc = np.zeros((sys.m, sys.n, sys.n), dtype=complex)
    for mem in sys.members:
        w2 = (mem.v.entries.real ** 2)[:, None, None]
        acc += w2 * (ctrl.Cp @ mem.local_operator() @ ctrl.C).blocks
    return AdjointableOp(acc)


def synthesis_matrix(sys: GFusionSystem, ctrl: Optional[ControllerPair] = None) -> AdjointableOp:
    """Matrix of the synthesis operator ``A^{sum n_j} -> A^n``.

    Built column by column by synthesising unit
    coefficient families, so it shares no algebra with :func:`frame_operator`.
    """
    ctrl = ensure_controlled(sys, ctrl)
    root = _sqrt_product(ctrl.C, ctrl.Cp)
    total = sum(sys.codomain_dims)
    cols = np.zeros((sys.m, sys.n, total), dtype=complex)
    col = 0
    for j, d in enumerate(sys.codomain_dims):
        for i in range(d):
            parts = [ModuleVector.zeros(sys.m, dj) for dj in sys.codomain_dims]
            parts[j] = ModuleVector.basis(sys.m, d, i)
            cols[:, :, col] = _synthesis_sum(sys, root, CoefficientFamily(parts)).slots
            col += 1
    return AdjointableOp(cols)


class KVerdict(NamedTuple):
    A_K: float
    is_K_frame: bool


@dataclass(frozen=True, eq=False)
class FrameAssessment:
    S: AdjointableOp
    A_opt: float
    B_opt: float
    per_slot_spectrum: tuple
    is_bessel: bool
    is_frame: bool
    is_tight: bool
    is_parseval: bool
    norm_form: tuple
    K_verdict: Optional[KVerdict] = None

    @property
    def condition_number(self) -> float:
        return self.B_opt / self.A_opt if self.A_opt > 0 else float("inf")


def _spectrum(S: AdjointableOp) -> np.ndarray:
    return np.linalg.eigvalsh(S.hermitian_part().blocks)


def assess_operator(S: AdjointableOp, tol: float = 1e-9) -> FrameAssessment:
    """Optimal bounds and verdicts of an already-formed frame operator."""
    w = _spectrum(S)
    per_slot = tuple((float(ws[0]), float(ws[-1])) for ws in w)
    A = float(w[:, 0].min())
    B = float(w[:, -1].max())
    # norm form: sqrt(A)||f|| <= ||S^(1/2) f|| <= sqrt(B)||f||, read off singular values
    root_sv = np.linalg.svd(op_sqrt(S.hermitian_part(), tol=max(TAU_ALG, 1e-9 * max(1.0, B))).blocks,
                            compute_uv=False)
    norm_form = (float(root_sv[:, -1].min() ** 2), float(root_sv[:, 0].max() ** 2))
    scale = max(1.0, B)
    I = AdjointableOp.identity(S.m, S.n)
    return FrameAssessment(
        S=S, A_opt=A, B_opt=B, per_slot_spectrum=per_slot,
        is_bessel=bool(np.isfinite(B)),
        is_frame=A > TAU_ALG,
        is_tight=abs(A - B) <= tol * scale,
        is_parseval=(S - I).norm() <= tol,
        norm_form=norm_form,
    )


def assess_controlled(sys: GFusionSystem, ctrl: Optional[ControllerPair] = None,
                      tol: float = 1e-9) -> FrameAssessment:
    """Frame operator, optimal bounds and Bessel/frame/tight/Parseval verdicts."""
    return assess_operator(frame_operator(sys, ctrl), tol)


def k_frame_bound(S: AdjointableOp, K: AdjointableOp, tol: float = TAU_ALG) -> float:
    """Largest ``A >= 0`` with ``A K K^* <= S``; ``inf`` when ``K K^* = 0``.

    Per slot: 0 if the range of ``K`` leaves the range of ``S``, else
    ``1 / lambda_max(S^{+1/2} K K^* S^{+1/2})`` with the range-restricted
    pseudo-inverse square root.  The result is the minimum over slots.
    """
    if K.blocks.shape != S.blocks.shape:
        raise DimensionError(f"K has shape {K.blocks.shape}, expected {S.blocks.shape}")
    KK = (K @ K.adjoint()).hermitian_part().blocks
    w, V = np.linalg.eigh(S.hermitian_part().blocks)
    best = np.inf
    for s in range(S.m):
        knorm = np.linalg.norm(KK[s], 2)
        if knorm <= tol:
            continue
        keep = w[s] > tol * max(1.0, w[s, -1])
        Vr = V[s][:, keep]
        outside = K.blocks[s] - Vr @ (np.conj(Vr.T) @ K.blocks[s])
        if np.linalg.norm(outside, 2) > 1e-8 * max(1.0, np.sqrt(knorm)):
            return 0.0
        R = Vr / np.sqrt(w[s, keep])
        M = np.conj(R.T) @ KK[s] @ R
        best = min(best, 1.0 / float(np.linalg.eigvalsh(0.5 * (M + np.conj(M.T)))[-1]))
    return float(best)


def assess_k_g_fusion(sys: GFusionSystem, ctrl: Optional[ControllerPair], K: AdjointableOp,
                      tol: float = 1e-9) -> FrameAssessment:
    """Assessment plus the optimal lower K-bound ``A_K``."""
    base = assess_controlled(sys, ctrl, tol)
    A_K = k_frame_bound(base.S, K)
    return _with_k(base, A_K)


def _with_k(base: FrameAssessment, A_K: float) -> FrameAssessment:
    return replace(base, K_verdict=KVerdict(A_K, bool(A_K > TAU_ALG)))
