"""The commutative C*-algebra A = C^m with pointwise operations.

Every element is a vector of ``m`` complex numbers ("slots").  Product,
adjoint and functional calculus act slot by slot; the C*-norm is the
largest slot modulus.  Because the algebra is commutative its centre is the
whole algebra, so any positive invertible element is a legal frame weight.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from .errors import DimensionError, OrderError, PositivityError, SingularError

#: Absolute tolerance for self-adjointness, positivity and invertibility.
TAU_ALG = 1e-10


@dataclass(frozen=True, eq=False)
class AlgebraElement:
    """Element of C^m, stored as a read-only complex array of shape ``(m,)``."""

    entries: np.ndarray

    def __post_init__(self):
        e = np.array(self.entries, dtype=complex).reshape(-1)
        if e.size == 0:
            raise DimensionError("algebra element needs at least one slot")
        e.setflags(write=False)
        object.__setattr__(self, "entries", e)

    @property
    def m(self) -> int:
        return self.entries.shape[0]

    @classmethod
    def constant(cls, value, m: int) -> "AlgebraElement":
        return cls(np.full(m, value, dtype=complex))

    @classmethod
    def one(cls, m: int) -> "AlgebraElement":
        return cls.constant(1.0, m)

    def _check(self, other: "AlgebraElement"):
        if not isinstance(other, AlgebraElement):
            raise TypeError(f"expected AlgebraElement, got {type(other).__name__}")
        if other.m != self.m:
            raise DimensionError(f"slot count mismatch: {self.m} vs {other.m}")

    def __add__(self, other):
        if np.isscalar(other):
            return AlgebraElement(self.entries + other)
        self._check(other)
        return AlgebraElement(self.entries + other.entries)

    __radd__ = __add__

    def __sub__(self, other):
        if np.isscalar(other):
            return AlgebraElement(self.entries - other)
        self._check(other)
        return AlgebraElement(self.entries - other.entries)

    def __neg__(self):
        return AlgebraElement(-self.entries)

    def __mul__(self, other):
        if np.isscalar(other):
            return AlgebraElement(self.entries * other)
        if isinstance(other, AlgebraElement):
            self._check(other)
            return AlgebraElement(self.entries * other.entries)
        return NotImplemented

    def __rmul__(self, other):
        if np.isscalar(other):
            return AlgebraElement(self.entries * other)
        return NotImplemented

    def adjoint(self) -> "AlgebraElement":
        return AlgebraElement(np.conj(self.entries))

    def norm(self) -> float:
        return float(np.max(np.abs(self.entries)))

    @property
    def real(self) -> np.ndarray:
        return self.entries.real.copy()

    def is_self_adjoint(self, tol: float = TAU_ALG) -> bool:
        return bool(np.all(np.abs(self.entries.imag) <= tol))

    def is_positive(self, tol: float = TAU_ALG) -> bool:
        return self.is_self_adjoint(tol) and bool(np.all(self.entries.real >= -tol))

    def is_invertible(self, tol: float = TAU_ALG) -> bool:
        return bool(np.min(np.abs(self.entries)) > tol)

    def leq(self, other: "AlgebraElement", tol: float = TAU_ALG) -> bool:
        """``self <= other`` in the C*-order, i.e. ``other - self`` is positive."""
        self._check(other)
        if not (self.is_self_adjoint(tol) and other.is_self_adjoint(tol)):
            raise OrderError("order is only defined between self-adjoint elements")
        return (other - self).is_positive(tol)

    def sqrt(self, tol: float = TAU_ALG) -> "AlgebraElement":
        if not self.is_positive(tol):
            raise PositivityError(f"square root of non-positive element {self.entries}")
        return AlgebraElement(np.sqrt(np.clip(self.entries.real, 0.0, None)))

    def inverse(self, tol: float = TAU_ALG) -> "AlgebraElement":
        if not self.is_invertible(tol):
            raise SingularError(f"element {self.entries} has a slot of modulus <= {tol}")
        return AlgebraElement(1.0 / self.entries)

    def allclose(self, other: "AlgebraElement", atol: float = 1e-12) -> bool:
        self._check(other)
        return bool(np.all(np.abs(self.entries - other.entries) <= atol))

    def __repr__(self):
        return f"AlgebraElement({np.array2string(self.entries, precision=6)})"


def as_element(value, m: int) -> AlgebraElement:
    """Promote a scalar or sequence to an :class:`AlgebraElement` with ``m`` slots."""
    if isinstance(value, AlgebraElement):
        if value.m != m:
            raise DimensionError(f"expected {m} slots, got {value.m}")
        return value
    arr = np.asarray(value, dtype=complex)
    if arr.ndim == 0:
        return AlgebraElement.constant(complex(arr), m)
    a = AlgebraElement(arr)
    if a.m != m:
        raise DimensionError(f"expected {m} slots, got {a.m}")
    return a


def alg_arith(a: AlgebraElement, b: Optional[AlgebraElement], kind: str) -> AlgebraElement:
    """Pointwise ``add``, ``mul`` or ``adjoint`` (which ignores ``b``)."""
    if kind == "adjoint":
        return a.adjoint()
    if b is None:
        raise DimensionError(f"{kind!r} needs two operands")
    if kind == "add":
        return a + b
    if kind == "mul":
        return a * b
    raise ValueError(f"unknown kind {kind!r}")


class NormOrder(NamedTuple):
    norm: float
    is_positive: bool
    leq: Optional[bool]


def alg_norm_order(a: AlgebraElement, b: Optional[AlgebraElement] = None,
                   tol: float = TAU_ALG) -> NormOrder:
    return NormOrder(a.norm(), a.is_positive(tol), None if b is None else a.leq(b, tol))


def alg_sqrt_inv(a: AlgebraElement, kind: str, tol: float = TAU_ALG) -> AlgebraElement:
    if kind == "sqrt":
        return a.sqrt(tol)
    if kind == "inverse":
        return a.inverse(tol)
    raise ValueError(f"unknown kind {kind!r}")
