"""Acceptance criteria, one test per criterion, each printing a PASS/FAIL line.

The lines are also collected and repeated in the pytest terminal summary.
"""
import json
import time

import numpy as np
import pytest

from cgfusion.algebra import AlgebraElement
from cgfusion.cli import cli_dispatch
from cgfusion.constructions import fit_epsilon, perturbation_check
from cgfusion.documents import InstanceDocument
from cgfusion.frames import (GFusionSystem, Member, analysis_apply, assess_controlled,
                             assess_k_g_fusion, frame_operator, synthesis_matrix)
from cgfusion.generators import gen_paper_example, gen_random
from cgfusion.hilbert_module import AdjointableOp, ModuleVector, Projector, inner_product
from cgfusion.oracle import controlled_sum, k_bound_bisection, slotwise_bounds
from cgfusion.solver import (cg_invert, conditioning_report, reconstruct, richardson_invert,
                             whitening_controllers)
from cgfusion.suite import run_theorem_suite

RESULTS = []


def record(number, title, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {title} ({detail})"
    print(line)
    RESULTS.append(line)
    assert ok, line


_CACHE = {}


def instances(count=100):
    """Seeded instances with m <= 4, n <= 8, J <= 12, alternating modes."""
    key = ("inst", count)
    if key not in _CACHE:
        out = []
        for i in range(count):
            rng = np.random.default_rng(1000 + i)
            m, n, J = int(rng.integers(1, 5)), int(rng.integers(1, 9)), int(rng.integers(1, 13))
            out.append(gen_random(1000 + i, m, n, J, "diagonal" if i % 2 else "scalar_ctrl"))
        _CACHE[key] = out
    return _CACHE[key]


def jiggle(sys, rng, size, diagonal):
    def noise(L):
        if diagonal:
            return AdjointableOp.diagonal(size * rng.standard_normal((L.m, L.n)))
        return AdjointableOp(size * rng.standard_normal(L.blocks.shape))
    return sys.with_members([Member(m.P, m.Lambda + noise(m.Lambda), m.v) for m in sys.members])


def test_criterion_1_parseval_example():
    t0 = time.perf_counter()
    worst_bound = worst_S = worst_sum = 0.0
    rng = np.random.default_rng(0)
    for N in (4, 16, 64):
        for m in (1, 4):
            sys, ctrl = gen_paper_example(N, m, 2.0, 0.5)
            a = assess_controlled(sys, ctrl)
            worst_bound = max(worst_bound, abs(a.A_opt - 1), abs(a.B_opt - 1))
            worst_S = max(worst_S, (a.S - AdjointableOp.identity(m, N)).norm())
            for _ in range(200):
                f = ModuleVector.random(rng, m, N)
                ff = inner_product(f, f).entries.real
                gap = np.abs(controlled_sum(sys, ctrl, f).entries - ff) / ff.max()
                worst_sum = max(worst_sum, float(gap.max()))
    elapsed = time.perf_counter() - t0
    ok = worst_bound <= 1e-12 and worst_S <= 1e-12 and worst_sum <= 1e-12 and elapsed < 2.0
    record(1, "Parseval example", ok,
           f"|A-1|,|B-1| <= {worst_bound:.1e}, ||S-I|| = {worst_S:.1e}, sum gap {worst_sum:.1e}, {elapsed:.2f}s")


def test_criterion_2_factorisation_and_sum_identity():
    worst_fact = worst_sum = 0.0
    for k, (sys, ctrl, _) in enumerate(instances()):
        S = frame_operator(sys, ctrl)
        T = synthesis_matrix(sys, ctrl)
        worst_fact = max(worst_fact, (S - T @ T.adjoint()).norm())
        rng = np.random.default_rng(k)
        for _ in range(100):
            f = ModuleVector.random(rng, sys.m, sys.n)
            diff = controlled_sum(sys, ctrl, f).entries - inner_product(S @ f, f).entries
            worst_sum = max(worst_sum, float(np.abs(diff).max()))
    ok = worst_fact <= 1e-10 and worst_sum <= 1e-10
    record(2, "S = T T^* and the frame-sum identity", ok,
           f"max ||S - TT*|| = {worst_fact:.1e}, max identity gap = {worst_sum:.1e}, 100 instances")


def test_criterion_3_synthesis_norm():
    worst = -np.inf
    for sys, ctrl, _ in instances():
        a = assess_controlled(sys, ctrl)
        worst = max(worst, synthesis_matrix(sys, ctrl).norm() - np.sqrt(a.B_opt))
    record(3, "||T|| <= sqrt(B)", worst <= 1e-8, f"max ||T|| - sqrt(B) = {worst:.1e}, 100 instances")


def test_criterion_4_oracle_agreement():
    worst_ab = worst_k = 0.0
    for sys, ctrl, K in instances():
        a = assess_k_g_fusion(sys, ctrl, K)
        r = slotwise_bounds(sys, ctrl)
        worst_ab = max(worst_ab, abs(a.A_opt - r.A_oracle) / max(1, a.A_opt),
                       abs(a.B_opt - r.B_oracle) / max(1, a.B_opt))
        A_K = a.K_verdict.A_K
        worst_k = max(worst_k, abs(A_K - k_bound_bisection(sys, ctrl, K)) / max(1, A_K))
    ok = worst_ab <= 1e-9 and worst_k <= 1e-6
    record(4, "oracle agreement", ok,
           f"bounds rel gap {worst_ab:.1e} (tol 1e-9), A_K rel gap {worst_k:.1e} (tol 1e-6), 100 pairs")


def test_criterion_5_theorem_suite():
    t0 = time.perf_counter()
    report = run_theorem_suite(1, 100)
    elapsed = time.perf_counter() - t0
    print(report.table())
    ok = report.all_passed and all(v == 100 for v in report.passes.values()) and elapsed < 60
    worst = min(report.passes.values())
    record(5, "theorem suite", ok, f"min passes {worst}/100 across {len(report.passes)} cases, {elapsed:.1f}s")


def test_criterion_6_perturbation():
    lam1 = lam2 = 0.05
    inside = gated = 0
    worst_low = worst_high = -np.inf
    for i in range(50):
        diagonal = bool(i % 2)
        rng = np.random.default_rng(500 + i)
        m, n, J = int(rng.integers(1, 5)), int(rng.integers(1, 9)), int(rng.integers(1, 13))
        sys, ctrl, K = gen_random(500 + i, m, n, J, "diagonal" if diagonal else "scalar_ctrl")
        gamma = jiggle(sys, rng, 1e-3, diagonal)
        eps = fit_epsilon(sys, gamma, ctrl, K, lam1, lam2)
        r = perturbation_check(sys, gamma, ctrl, K, lam1, lam2, eps, n_samples=50, seed=i)
        if r.certified and r.gate and eps < (1 - lam1) * np.sqrt(r.A):
            low, high = r.measured.K_verdict.A_K, r.measured.B_opt
            worst_low = max(worst_low, (r.predicted_lower - low) / r.predicted_lower)
            worst_high = max(worst_high, (high - r.predicted_upper) / r.predicted_upper)
            inside += bool(r.bounds_hold)
        edge = (1 - lam1) * np.sqrt(r.A)
        declined = perturbation_check(sys, gamma, ctrl, K, lam1, lam2, edge, n_samples=0)
        gated += not declined.certified
    ok = inside == 50 and gated == 50 and worst_low <= 1e-8 and worst_high <= 1e-8
    record(6, "perturbation bounds", ok,
           f"{inside}/50 inside predictions, worst rel excess lower {worst_low:.1e} upper {worst_high:.1e}, "
           f"gate declined {gated}/50")


def test_criterion_7_solver():
    worst_contraction = -np.inf
    recon_ok = cg_ok = 0
    worst_err = 0.0
    for i in range(50):
        rng = np.random.default_rng(700 + i)
        m, n, J = int(rng.integers(1, 5)), int(rng.integers(1, 9)), int(rng.integers(1, 13))
        sys, ctrl, _ = gen_random(700 + i, m, n, J, "diagonal")
        a = assess_controlled(sys, ctrl)
        f = ModuleVector.random(rng, m, n)
        _, rep = richardson_invert(a.S, a.S @ f, a.A_opt, a.B_opt, tol=1e-10)
        worst_contraction = max(worst_contraction, rep.contraction_observed - rep.bound_ratio)
        mode = "scalar_ctrl" if i % 2 else "diagonal"
        sys2, ctrl2, _ = gen_random(700 + i, m, n, J, mode)
        _, rec = reconstruct(sys2, ctrl2, analysis_apply(sys2, ctrl2, f), "richardson", 1e-8, x_true=f)
        worst_err = max(worst_err, rec.rel_error)
        recon_ok += rec.rel_error <= 1e-8 and rec.iterations <= rec.predicted_iterations
        S2 = frame_operator(sys2, ctrl2)
        _, cg = cg_invert(S2, ModuleVector.random(rng, m, n), tol=1e-8)
        cg_ok += cg.iterations <= n and cg.residual_history[-1] <= 1e-8
    ok = worst_contraction <= 1e-10 and recon_ok == 50 and cg_ok == 50
    record(7, "solver", ok,
           f"contraction excess {worst_contraction:.1e}, reconstruct {recon_ok}/50 (max err {worst_err:.1e}), "
           f"CG within n {cg_ok}/50")


def test_criterion_8_preconditioning():
    sys, _, _ = gen_random(0, 2, 6, 8, "diagonal", spread=100.0)
    f = ModuleVector.random(np.random.default_rng(8), 2, 6)
    details, ok = [], True
    for kind in ("inverse", "sqrt"):
        ctrl = whitening_controllers(sys, kind)
        rep = conditioning_report(sys, None, ctrl)
        gap = (frame_operator(sys, ctrl) - AdjointableOp.identity(2, 6)).norm()
        _, rec = reconstruct(sys, ctrl, analysis_apply(sys, ctrl, f), "richardson", 1e-8, x_true=f)
        ok &= (rep.kappa_base >= 100 and rep.iters_base >= 200 and gap <= 1e-10
               and rep.iters_test == 1 and rec.iterations == 1 and rec.rel_error <= 1e-8)
        details.append(f"{kind}: kappa {rep.kappa_base:.0f}, iters {rep.iters_base} -> {rep.iters_test}, "
                       f"||S-I|| {gap:.1e}, reconstruct {rec.iterations} it")
    record(8, "controlled preconditioning", ok, "; ".join(details))


def test_criterion_9_cli_determinism_and_exit_codes(tmp_path):
    a, b, c = tmp_path / "a.json", tmp_path / "b.json", tmp_path / "c.json"
    gen = ["gen", "--seed", "7", "--m", "2", "--n", "4", "--J", "6", "--mode", "diagonal"]
    codes = [cli_dispatch(gen + ["--out", str(a)]), cli_dispatch(gen + ["--out", str(b)])]
    InstanceDocument.load(a).save(c)
    identical = a.read_bytes() == b.read_bytes() == c.read_bytes()

    ex = tmp_path / "ex.json"
    cli_dispatch(["example", "--N", "64", "--m", "1", "--cscale", "2", "--cpscale", "0.5", "--out", str(ex)])
    code0 = cli_dispatch(["check", "--in", str(ex)])

    degenerate = tmp_path / "degenerate.json"
    I = AdjointableOp.identity(1, 2)
    sys = GFusionSystem((Member(Projector.coordinate(1, 2, [True, False]), I, AlgebraElement([1.0])),))
    InstanceDocument(sys, I, I, None, {"seed": None, "mode": "fixture", "created": "x"}).save(degenerate)
    code1 = cli_dispatch(["check", "--in", str(degenerate)])

    code2 = cli_dispatch(["check", "--in", str(tmp_path / "missing.json")])

    bad = tmp_path / "bad.json"
    s2, _, K2 = gen_random(0, 1, 3, 4, "scalar_ctrl")
    C = AdjointableOp.diagonal([[1.0, 2.0, 3.0]])
    InstanceDocument(s2, C, C, K2, {"seed": 0, "mode": "fixture", "created": "x"}).save(bad)
    code3 = cli_dispatch(["check", "--in", str(bad)])

    ok = codes == [0, 0] and identical and (code0, code1, code2, code3) == (0, 1, 2, 3)
    record(9, "CLI determinism and exit codes", ok,
           f"byte-identical {identical}, exit codes {code0}/{code1}/{code2}/{code3} for pass/negative/usage/validation")
