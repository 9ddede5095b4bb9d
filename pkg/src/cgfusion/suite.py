"""Seeded sweep that runs every construction on fresh random instances."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .constructions import (bessel_pair_K, c2_equivalence, canonical_K, conjugate_U,
                            fit_epsilon, inverse_conjugate_U, lemma9_check, morphism_transport,
                            perturbation_check, theta_left, theta_right)
from .errors import FrameError
from .frames import Member, frame_operator
from .generators import gen_random
from .hilbert_module import AdjointableOp

CASES = ("c2_equivalence", "theta_right_scalar", "theta_right_diagonal", "theta_left_scalar",
         "theta_left_diagonal", "conjugate_roundtrip", "canonical_K", "bessel_pair_K",
         "morphism_transport", "lemma9", "perturbation")


@dataclass
class SuiteReport:
    count: int
    passes: dict = field(default_factory=lambda: {c: 0 for c in CASES})
    failures: list = field(default_factory=list)

    @property
    def all_passed(self) -> bool:
        return not self.failures

    def table(self) -> str:
        width = max(len(c) for c in CASES)
        lines = [f"{'theorem'.ljust(width)}  passed"]
        for c in CASES:
            mark = "ok" if self.passes[c] == self.count else "FAIL"
            lines.append(f"{c.ljust(width)}  {self.passes[c]}/{self.count}  {mark}")
        return "\n".join(lines)


def _rel_close(X: AdjointableOp, Y: AdjointableOp, tol: float) -> bool:
    return (X - Y).norm() <= tol * max(1.0, Y.norm())


def _random_diag(rng, m, n, lo=0.5, hi=2.0) -> AdjointableOp:
    mags = np.exp(rng.uniform(np.log(lo), np.log(hi), (m, n)))
    return AdjointableOp.diagonal(mags * np.exp(2j * np.pi * rng.random((m, n))))


def _random_scalar(rng, m, n) -> AdjointableOp:
    a = np.exp(rng.uniform(np.log(0.5), np.log(2.0))) * np.exp(2j * np.pi * rng.random())
    return AdjointableOp.identity(m, n).scale(complex(a))


def _jiggle(rng, sys, size):
    """Same projectors and weights, each ``Lambda_j`` shifted by Gaussian noise."""
    return sys.with_members([
        Member(mem.P, mem.Lambda + AdjointableOp(size * rng.standard_normal(mem.Lambda.blocks.shape)), mem.v)
        for mem in sys.members])


def _run_cases(rng, diag, scal):
    sys, ctrl, K = diag
    ss, sc, sk = scal
    m, n = sys.m, sys.n
    out = {}
    out["c2_equivalence"] = (c2_equivalence(sys, ctrl.C, "to_controlled").within_predictions()
                             and c2_equivalence(sys, ctrl.C, "from_controlled").within_predictions())
    out["theta_right_scalar"] = theta_right(ss, sc, _random_scalar(rng, ss.m, ss.n)).within_predictions()
    out["theta_right_diagonal"] = theta_right(sys, ctrl, _random_diag(rng, m, n)).within_predictions()
    out["theta_left_scalar"] = theta_left(ss, sc, _random_scalar(rng, ss.m, ss.n)).within_predictions()
    out["theta_left_diagonal"] = theta_left(sys, ctrl, _random_diag(rng, m, n)).within_predictions()

    U = _random_diag(rng, m, n)
    fwd = conjugate_U(sys, ctrl, U, K)
    back = inverse_conjugate_U(fwd.system, ctrl, U, fwd.K_out)
    out["conjugate_roundtrip"] = (fwd.within_predictions() and back.within_predictions()
                                  and _rel_close(back.measured.S, frame_operator(sys, ctrl), 1e-10)
                                  and all(_rel_close(b.local_operator(), a.local_operator(), 1e-10)
                                          for a, b in zip(sys.members, back.system.members)))

    ck = canonical_K(sys, ctrl, K)
    target_scale = max(1.0, (ck.measured.S).norm())
    out["canonical_K"] = ck.checks["frame_operator_identity"] <= 1e-8 * target_scale and ck.within_predictions()

    out["bessel_pair_K"] = bessel_pair_K(ss, _jiggle(rng, ss, 0.1), sc).verified

    mt = morphism_transport(ss, sc, rng.permutation(ss.m), seed=int(rng.integers(2**31)))
    out["morphism_transport"] = (mt.checks["intertwining"] <= 1e-12 * max(1.0, mt.measured.B_opt)
                                 and mt.checks["bounds_shift"] == 0.0)

    W = next(mem.P for mem in sys.members)
    out["lemma9"] = lemma9_check(W, U).holds

    gamma = _jiggle(rng, ss, 1e-3)
    eps = fit_epsilon(ss, gamma, sc, sk, 0.05, 0.05)
    pr = perturbation_check(ss, gamma, sc, sk, 0.05, 0.05, eps, n_samples=50,
                            seed=int(rng.integers(2**31)))
    out["perturbation"] = pr.certified and bool(pr.verified)
    return out


def instance_seed(seed: int, i: int) -> int:
    return int(np.random.SeedSequence([seed, i]).generate_state(1)[0])


def run_theorem_suite(seed: int, count: int) -> SuiteReport:
    """Run every case on ``count`` seeded instances; exceptions count as failures."""
    report = SuiteReport(count)
    for i in range(count):
        s = instance_seed(seed, i)
        rng = np.random.default_rng(s)
        m, n, J = int(rng.integers(1, 5)), int(rng.integers(1, 9)), int(rng.integers(1, 13))
        try:
            diag = gen_random(s, m, n, J, "diagonal", spread=4.0)
            scal = gen_random(s, m, n, J, "scalar_ctrl", spread=4.0)
            results = _run_cases(rng, diag, scal)
        except FrameError as exc:
            report.failures.append((i, "instance", f"{type(exc).__name__}: {exc}"))
            continue
        for case, ok in results.items():
            if ok:
                report.passes[case] += 1
            else:
                report.failures.append((i, case, "prediction or identity check failed"))
    return report
