"""Free Hilbert A-modules A^n over the diagonal algebra A = C^m.

A vector of A^n is an ``(m, n)`` complex array: slot ``s`` is an ordinary
vector of C^n.  The A-valued inner product is evaluated slot by slot, and an
adjointable A-linear map A^n -> A^p is a stack of ``m`` complex ``p x n``
matrices acting independently on the slots.  All operator functions (square
root, inverse, classification) go through per-slot Hermitian
eigendecompositions or SVDs.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence

import numpy as np

from .algebra import TAU_ALG, AlgebraElement
from .errors import DimensionError, PositivityError, SingularError


def _frozen(arr) -> np.ndarray:
    a = np.array(arr, dtype=complex, order="C")
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class ModuleVector:
    """Element of A^n stored as an ``(m, n)`` complex array."""

    slots: np.ndarray

    def __post_init__(self):
        s = _frozen(self.slots)
        if s.ndim != 2 or 0 in s.shape:
            raise DimensionError(f"module vector needs shape (m, n), got {s.shape}")
        object.__setattr__(self, "slots", s)

    @property
    def m(self) -> int:
        return self.slots.shape[0]

    @property
    def n(self) -> int:
        return self.slots.shape[1]

    @classmethod
    def zeros(cls, m: int, n: int) -> "ModuleVector":
        return cls(np.zeros((m, n)))

    @classmethod
    def basis(cls, m: int, n: int, i: int) -> "ModuleVector":
        """The standard basis vector e_i (index from 0) in every slot."""
        s = np.zeros((m, n))
        s[:, i] = 1.0
        return cls(s)

    @classmethod
    def random(cls, rng: np.random.Generator, m: int, n: int) -> "ModuleVector":
        """Per-slot standard complex Gaussian sample."""
        return cls((rng.standard_normal((m, n)) + 1j * rng.standard_normal((m, n))) / np.sqrt(2))

    def _check(self, other: "ModuleVector"):
        if not isinstance(other, ModuleVector):
            raise TypeError(f"expected ModuleVector, got {type(other).__name__}")
        if other.slots.shape != self.slots.shape:
            raise DimensionError(f"shape mismatch: {self.slots.shape} vs {other.slots.shape}")

    def __add__(self, other):
        self._check(other)
        return ModuleVector(self.slots + other.slots)

    def __sub__(self, other):
        self._check(other)
        return ModuleVector(self.slots - other.slots)

    def __neg__(self):
        return ModuleVector(-self.slots)

    def __mul__(self, a):
        if isinstance(a, AlgebraElement):
            if a.m != self.m:
                raise DimensionError(f"slot count mismatch: {a.m} vs {self.m}")
            return ModuleVector(self.slots * a.entries[:, None])
        if np.isscalar(a):
            return ModuleVector(self.slots * a)
        return NotImplemented

    __rmul__ = __mul__

    def inner(self, other: "ModuleVector") -> AlgebraElement:
        return inner_product(self, other)

    def norm(self) -> float:
        """Module norm ``||<f, f>||^(1/2)``: the largest slot Euclidean norm."""
        return float(np.sqrt(np.max(np.sum(np.abs(self.slots) ** 2, axis=1))))

    def slot_norms(self) -> np.ndarray:
        return np.linalg.norm(self.slots, axis=1)

    def __repr__(self):
        return f"ModuleVector(m={self.m}, n={self.n})"


def inner_product(f: ModuleVector, g: ModuleVector) -> AlgebraElement:
    """A-valued inner product, linear in ``f`` and conjugate-linear in ``g``."""
    f._check(g)
    return AlgebraElement(np.einsum("si,si->s", f.slots, np.conj(g.slots)))


@dataclass(frozen=True, eq=False)
class AdjointableOp:
    """A-linear map A^n -> A^p stored as ``m`` complex ``p x n`` blocks.

    ``T @ S`` composes, ``T @ f`` (or ``T(f)``) applies to a ModuleVector.
    """

    blocks: np.ndarray

    def __post_init__(self):
        b = _frozen(self.blocks)
        if b.ndim != 3 or 0 in b.shape:
            raise DimensionError(f"operator blocks need shape (m, p, n), got {b.shape}")
        object.__setattr__(self, "blocks", b)

    @property
    def m(self) -> int:
        return self.blocks.shape[0]

    @property
    def p(self) -> int:
        """Codomain rank."""
        return self.blocks.shape[1]

    @property
    def n(self) -> int:
        """Domain rank."""
        return self.blocks.shape[2]

    @property
    def is_square(self) -> bool:
        return self.p == self.n

    @classmethod
    def identity(cls, m: int, n: int) -> "AdjointableOp":
        return cls(np.broadcast_to(np.eye(n), (m, n, n)))

    @classmethod
    def zeros(cls, m: int, p: int, n: int) -> "AdjointableOp":
        return cls(np.zeros((m, p, n)))

    @classmethod
    def from_matrix(cls, mat, m: int) -> "AdjointableOp":
        """The same matrix in every slot."""
        mat = np.asarray(mat, dtype=complex)
        return cls(np.broadcast_to(mat, (m,) + mat.shape))

    @classmethod
    def diagonal(cls, diag) -> "AdjointableOp":
        """Diagonal operator from an ``(m, n)`` array of diagonal entries."""
        d = np.asarray(diag, dtype=complex)
        out = np.zeros(d.shape + (d.shape[-1],), dtype=complex)
        idx = np.arange(d.shape[-1])
        out[:, idx, idx] = d
        return cls(out)

    @classmethod
    def scalar(cls, a, n: int) -> "AdjointableOp":
        """Left multiplication by the central element ``a`` on A^n."""
        a = a if isinstance(a, AlgebraElement) else AlgebraElement(np.atleast_1d(a))
        return cls(a.entries[:, None, None] * np.eye(n))

    def adjoint(self) -> "AdjointableOp":
        return AdjointableOp(np.conj(np.swapaxes(self.blocks, 1, 2)))

    @property
    def H(self) -> "AdjointableOp":
        return self.adjoint()

    def apply(self, f: ModuleVector) -> ModuleVector:
        if f.m != self.m or f.n != self.n:
            raise DimensionError(f"cannot apply (m={self.m}, {self.p}x{self.n}) to vector {f.slots.shape}")
        return ModuleVector((self.blocks @ f.slots[:, :, None])[:, :, 0])

    __call__ = apply

    def compose(self, other: "AdjointableOp") -> "AdjointableOp":
        if other.m != self.m or other.p != self.n:
            raise DimensionError(
                f"cannot compose {self.blocks.shape} after {other.blocks.shape}")
        return AdjointableOp(self.blocks @ other.blocks)

    def __matmul__(self, other):
        if isinstance(other, AdjointableOp):
            return self.compose(other)
        if isinstance(other, ModuleVector):
            return self.apply(other)
        return NotImplemented

    def _check_same(self, other: "AdjointableOp"):
        if not isinstance(other, AdjointableOp):
            raise TypeError(f"expected AdjointableOp, got {type(other).__name__}")
        if other.blocks.shape != self.blocks.shape:
            raise DimensionError(f"shape mismatch: {self.blocks.shape} vs {other.blocks.shape}")

    def __add__(self, other):
        self._check_same(other)
        return AdjointableOp(self.blocks + other.blocks)

    def __sub__(self, other):
        self._check_same(other)
        return AdjointableOp(self.blocks - other.blocks)

    def __neg__(self):
        return AdjointableOp(-self.blocks)

    def scale(self, a) -> "AdjointableOp":
        """Multiply by a complex scalar or by a central algebra element."""
        if isinstance(a, AlgebraElement):
            if a.m != self.m:
                raise DimensionError(f"slot count mismatch: {a.m} vs {self.m}")
            return AdjointableOp(self.blocks * a.entries[:, None, None])
        return AdjointableOp(self.blocks * a)

    def __mul__(self, a):
        if isinstance(a, (AlgebraElement, int, float, complex, np.number)):
            return self.scale(a)
        return NotImplemented

    __rmul__ = __mul__

    def slot_norms(self) -> np.ndarray:
        return np.linalg.norm(self.blocks, ord=2, axis=(1, 2))

    def norm(self) -> float:
        """Operator norm: the largest slot spectral norm."""
        return float(np.max(self.slot_norms()))

    def hermitian_part(self) -> "AdjointableOp":
        return AdjointableOp(0.5 * (self.blocks + np.conj(np.swapaxes(self.blocks, 1, 2))))

    def allclose(self, other: "AdjointableOp", atol: float = 1e-10) -> bool:
        self._check_same(other)
        return (self - other).norm() <= atol

    def __repr__(self):
        return f"AdjointableOp(m={self.m}, {self.p}x{self.n})"


def op_algebra(T: AdjointableOp, S: Optional[AdjointableOp] = None,
               f: Optional[ModuleVector] = None, kind: str = "apply", scalar=None):
    """Single dispatch point for operator plumbing.

    ``kind`` is one of ``apply`` (needs ``f``), ``compose`` (``T S``),
    ``adjoint``, ``add`` (``T + S``) and ``scale`` (``scalar * T``).
    """
    if kind == "apply":
        if f is None:
            raise DimensionError("apply needs a vector")
        return T.apply(f)
    if kind == "adjoint":
        return T.adjoint()
    if kind == "scale":
        return T.scale(1.0 if scalar is None else scalar)
    if S is None:
        raise DimensionError(f"{kind!r} needs a second operator")
    if kind == "compose":
        return T.compose(S)
    if kind == "add":
        return T + S
    raise ValueError(f"unknown kind {kind!r}")


class OpClass(NamedTuple):
    self_adjoint: bool
    positive: bool
    invertible: bool
    gl_plus: bool
    bounded_below: bool
    norm: float
    min_gap: float


def op_classify(T: AdjointableOp, tol: float = TAU_ALG) -> OpClass:
    """Classify ``T`` from per-slot singular values and Hermitian eigenvalues.

    ``min_gap`` is the smallest singular value over all slots, counting the
    rank deficit of wide blocks (``p < n``) as a zero singular value.
    """
    sv = np.linalg.svd(T.blocks, compute_uv=False)
    norm = float(sv[:, 0].max())
    min_gap = 0.0 if T.p < T.n else float(sv[:, T.n - 1].min())
    bounded_below = min_gap > tol
    if not T.is_square:
        return OpClass(False, False, False, False, bounded_below, norm, min_gap)
    asym = np.linalg.norm(T.blocks - np.conj(np.swapaxes(T.blocks, 1, 2)), ord=2, axis=(1, 2))
    self_adjoint = bool(asym.max() <= tol * max(1.0, norm))
    positive = False
    if self_adjoint:
        w = np.linalg.eigvalsh(T.hermitian_part().blocks)
        positive = bool(w.min() >= -tol * max(1.0, norm))
    invertible = min_gap > tol
    return OpClass(self_adjoint, positive, invertible, positive and invertible,
                   bounded_below, norm, min_gap)


class CommuteResult(NamedTuple):
    flag: bool
    residual: float


def commutes(T: AdjointableOp, S: AdjointableOp, tol: float = 1e-10) -> CommuteResult:
    """Commutator test, relative to ``||T|| ||S||``."""
    if not (T.is_square and S.is_square) or T.blocks.shape != S.blocks.shape:
        raise DimensionError(f"commutes needs equal square operators, got {T.blocks.shape}, {S.blocks.shape}")
    residual = (T @ S - S @ T).norm()
    return CommuteResult(residual <= tol * (1.0 + T.norm() * S.norm()), residual)


def central_part(T: AdjointableOp, tol: float = 1e-12) -> Optional[AlgebraElement]:
    """Return ``a`` if ``T`` is left multiplication by a central element ``a``."""
    if not T.is_square:
        return None
    a = np.einsum("sii->s", T.blocks) / T.n
    resid = np.linalg.norm(T.blocks - a[:, None, None] * np.eye(T.n), axis=(1, 2))
    if resid.max() <= tol * max(1.0, float(np.abs(a).max())):
        return AlgebraElement(a)
    return None


def _hermitian_function(T: AdjointableOp, func, tol: float, what: str) -> AdjointableOp:
    cls = op_classify(T, tol)
    if not cls.positive:
        raise PositivityError(f"{what} needs a positive operator")
    w, V = np.linalg.eigh(T.hermitian_part().blocks)
    w = np.clip(w, 0.0, None)
    return AdjointableOp((V * func(w)[:, None, :]) @ np.conj(np.swapaxes(V, 1, 2)))


def op_sqrt(T: AdjointableOp, tol: float = TAU_ALG) -> AdjointableOp:
    """Principal square root of a positive operator."""
    return _hermitian_function(T, np.sqrt, tol, "op_sqrt")


def op_inverse(T: AdjointableOp, tol: float = TAU_ALG) -> AdjointableOp:
    if not T.is_square:
        raise DimensionError("only square operators can be inverted")
    sv = np.linalg.svd(T.blocks, compute_uv=False)
    if sv[:, -1].min() <= tol:
        raise SingularError(f"operator is singular (smallest singular value {sv[:, -1].min():.3e})")
    return AdjointableOp(np.linalg.inv(T.blocks))


def op_inv_sqrt(T: AdjointableOp, tol: float = TAU_ALG) -> AdjointableOp:
    """``T^(-1/2)`` for a positive invertible operator."""
    cls = op_classify(T, tol)
    if not cls.gl_plus:
        raise PositivityError("op_inv_sqrt needs a positive invertible operator")
    return _hermitian_function(T, lambda w: 1.0 / np.sqrt(w), tol, "op_inv_sqrt")


@dataclass(frozen=True, eq=False)
class Projector:
    """Orthogonal projector onto a submodule; ``ranks[s]`` is its rank in slot ``s``."""

    op: AdjointableOp
    ranks: tuple

    @property
    def m(self) -> int:
        return self.op.m

    @property
    def n(self) -> int:
        return self.op.n

    @classmethod
    def identity(cls, m: int, n: int) -> "Projector":
        return cls(AdjointableOp.identity(m, n), (n,) * m)

    @classmethod
    def coordinate(cls, m: int, n: int, mask) -> "Projector":
        """Diagonal projector onto the coordinates selected by ``mask``.

        ``mask`` is a boolean array of shape ``(n,)`` or ``(m, n)``.
        """
        mask = np.broadcast_to(np.asarray(mask, dtype=bool), (m, n))
        return cls(AdjointableOp.diagonal(mask.astype(float)), tuple(int(r) for r in mask.sum(axis=1)))

    @classmethod
    def from_op(cls, op: AdjointableOp, tol: float = 1e-10) -> "Projector":
        """Wrap an operator after checking idempotence and self-adjointness."""
        if not op.is_square:
            raise DimensionError("projector must be square")
        if (op @ op - op).norm() > tol or (op - op.adjoint()).norm() > tol:
            raise PositivityError("operator is not an orthogonal projector")
        ranks = tuple(int(round(r)) for r in np.einsum("sii->s", op.blocks).real)
        return cls(op, ranks)

    def complement(self) -> "Projector":
        return Projector(AdjointableOp.identity(self.m, self.n) - self.op,
                         tuple(self.n - r for r in self.ranks))

    def __repr__(self):
        return f"Projector(m={self.m}, n={self.n}, ranks={self.ranks})"


def range_projector(columns: np.ndarray, tol_rank: float = 1e-10) -> Projector:
    """Projector onto the per-slot column span of an ``(m, n, k)`` array."""
    cols = np.asarray(columns, dtype=complex)
    m, n, _ = cols.shape
    blocks = np.zeros((m, n, n), dtype=complex)
    ranks = []
    for s in range(m):
        U, sv, _ = np.linalg.svd(cols[s], full_matrices=False)
        r = 0 if sv.size == 0 or sv[0] == 0.0 else int(np.sum(sv > tol_rank * sv[0]))
        Ur = U[:, :r]
        blocks[s] = Ur @ np.conj(Ur.T)
        ranks.append(r)
    return Projector(AdjointableOp(blocks), tuple(ranks))


def projector_from_generators(G: Sequence[ModuleVector], tol_rank: float = 1e-10) -> Projector:
    """Orthogonal projector onto the submodule generated by ``G``.

    Slots are handled independently, so the rank may differ across slots.
    """
    G = list(G)
    if not G:
        raise DimensionError("need at least one generator")
    shape = G[0].slots.shape
    for g in G:
        if g.slots.shape != shape:
            raise DimensionError(f"inconsistent generator shapes {shape} vs {g.slots.shape}")
    return range_projector(np.stack([g.slots for g in G], axis=2), tol_rank)


def image_projector(T: AdjointableOp, P: Projector, tol_rank: float = 1e-10) -> Projector:
    """Projector onto ``T(W)`` where ``W`` is the range of ``P``."""
    return range_projector((T @ P.op).blocks, tol_rank)
