"""Instance generators: the truncated Parseval example and seeded random systems."""
from __future__ import annotations

import numpy as np

from .algebra import AlgebraElement
from .errors import ParamError
from .frames import ControllerPair, GFusionSystem, Member, validate_controllers
from .hilbert_module import AdjointableOp, Projector, range_projector

MODES = ("scalar_ctrl", "diagonal")


def gen_paper_example(N: int, m: int = 1, C_scale: float = 2.0, Cp_scale: float = 0.5):
    """Truncation to A^N of the c_0 example over l^infinity.

    Member j (1-based) has W_j = span{e_j}, codomain A^j and
    ``Lambda_j f = sum_{k<=j} <f, e_j / sqrt(j)> e_k``; all weights are 1 and
    the controllers are ``C = C_scale I``, ``C' = Cp_scale I``.  With
    ``C_scale * Cp_scale == 1`` the family is Parseval.
    """
    if N < 1 or m < 1:
        raise ParamError("N and m must be positive")
    if C_scale <= 0 or Cp_scale <= 0:
        raise ParamError("controller scales must be positive")
    members = []
    one = AlgebraElement.one(m)
    for j in range(1, N + 1):
        mask = np.zeros(N, dtype=bool)
        mask[j - 1] = True
        L = np.zeros((j, N))
        L[:, j - 1] = 1.0 / np.sqrt(j)
        members.append(Member(Projector.coordinate(m, N, mask), AdjointableOp.from_matrix(L, m), one))
    sys = GFusionSystem(tuple(members))
    I = AdjointableOp.identity(m, N)
    ctrl = validate_controllers(sys, I.scale(C_scale), I.scale(Cp_scale))
    return sys, ctrl


def _log_uniform(rng, lo, hi, size):
    return np.exp(rng.uniform(np.log(lo), np.log(hi), size))


def _cgauss(rng, shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


def gen_random(seed: int, m: int, n: int, J: int, mode: str = "scalar_ctrl", spread: float = 4.0):
    """Seeded random ``(system, controllers, K)`` satisfying the commutation hypotheses.

    ``scalar_ctrl``: random projectors (ranks may differ per slot), dense
    random ``Lambda_j`` and scalar controllers ``alpha I``, ``beta I`` with
    ``alpha, beta`` in ``[1/spread, spread]``; ``K`` is a dense random matrix.

    ``diagonal``: coordinate projectors, ``Lambda_j`` diagonal on A^n, and
    diagonal ``C``, ``C'``, ``K``, so every commutator vanishes exactly.
    Diagonal magnitudes are log-uniform in ``[spread^-1/2, spread^1/2]``.

    In both modes every coordinate of every slot is reached by some member,
    which makes the instance a frame.
    """
    if min(m, n, J) < 1:
        raise ParamError("m, n and J must be positive")
    if spread < 1:
        raise ParamError("spread must be >= 1")
    if mode not in MODES:
        raise ParamError(f"mode must be one of {MODES}")
    rng = np.random.default_rng(seed)
    if mode == "scalar_ctrl":
        return _gen_scalar(rng, m, n, J, spread)
    return _gen_diagonal(rng, m, n, J, spread)


def _weights(rng, m, J):
    return [AlgebraElement(rng.uniform(0.5, 2.0, m)) for _ in range(J)]


def _gen_scalar(rng, m, n, J, spread):
    ranks = rng.integers(1, n + 1, size=(J, m))
    for s in range(m):
        while ranks[:, s].sum() < n:
            j = rng.choice(np.flatnonzero(ranks[:, s] < n))
            ranks[j, s] += 1
    weights = _weights(rng, m, J)
    members = []
    for j in range(J):
        gens = np.zeros((m, n, n), dtype=complex)
        for s in range(m):
            gens[s, :, :ranks[j, s]] = _cgauss(rng, (n, ranks[j, s]))
        P = range_projector(gens)
        codim = int(ranks[j].max()) + int(rng.integers(0, 2))
        L = AdjointableOp(_cgauss(rng, (m, codim, n)) / np.sqrt(n))
        members.append(Member(P, L, weights[j]))
    sys = GFusionSystem(tuple(members))
    alpha, beta = _log_uniform(rng, 1.0 / spread, spread, 2)
    I = AdjointableOp.identity(m, n)
    ctrl = validate_controllers(sys, I.scale(alpha), I.scale(beta))
    K = AdjointableOp(_cgauss(rng, (m, n, n)) / np.sqrt(n))
    return sys, ctrl, K


def _gen_diagonal(rng, m, n, J, spread):
    lo, hi = spread ** -0.5, spread ** 0.5
    masks = rng.random((J, m, n)) < 0.6
    diags = _log_uniform(rng, lo, hi, (J, m, n)) * np.exp(2j * np.pi * rng.random((J, m, n)))
    diags[rng.random((J, m, n)) < 0.2] = 0.0
    covered = (masks & (diags != 0)).any(axis=0)
    for s, i in zip(*np.nonzero(~covered)):
        j = rng.integers(J)
        masks[j, s, i] = True
        diags[j, s, i] = _log_uniform(rng, lo, hi, 1)[0]
    weights = _weights(rng, m, J)
    members = [Member(Projector.coordinate(m, n, masks[j]), AdjointableOp.diagonal(diags[j]), weights[j])
               for j in range(J)]
    sys = GFusionSystem(tuple(members))
    C = AdjointableOp.diagonal(_log_uniform(rng, lo, hi, (m, n)))
    Cp = AdjointableOp.diagonal(_log_uniform(rng, lo, hi, (m, n)))
    ctrl = validate_controllers(sys, C, Cp)
    K = AdjointableOp.diagonal(_log_uniform(rng, lo, hi, (m, n)) * np.exp(2j * np.pi * rng.random((m, n))))
    return sys, ctrl, K


def identity_system(m: int, n: int) -> GFusionSystem:
    """The single-member frame ``P = I``, ``Lambda = I``, ``v = 1``."""
    return GFusionSystem((Member(Projector.identity(m, n), AdjointableOp.identity(m, n), AlgebraElement.one(m)),))
