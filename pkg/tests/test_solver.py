import numpy as np
import pytest
from hypothesis import given

from cgfusion.errors import BoundsError, CommutationError, ConvergenceError, PositivityError
from cgfusion.frames import ControllerPair, analysis_apply, assess_controlled, frame_operator
from cgfusion.generators import gen_paper_example, gen_random, identity_system
from cgfusion.hilbert_module import AdjointableOp, ModuleVector
from cgfusion.solver import (cg_invert, conditioning_report, predicted_iterations, reconstruct,
                             richardson_invert, whitening_controllers)

from conftest import instance_params


def diag13():
    return AdjointableOp.diagonal([[1.0, 3.0]]), ModuleVector(np.array([[1.0, 1.0]]))


def test_richardson_identity_one_step(rng):
    b = ModuleVector.random(rng, 2, 3)
    x, rep = richardson_invert(AdjointableOp.identity(2, 3), b, 1.0, 1.0)
    assert rep.iterations == 1 and np.allclose(x.slots, b.slots)


def test_richardson_exact_contraction_on_diagonal():
    S, b = diag13()
    _, rep = richardson_invert(S, b, 1.0, 3.0, tol=1e-10)
    ratios = np.array(rep.residual_history[1:]) / np.array(rep.residual_history[:-1])
    assert rep.bound_ratio == 0.5
    assert np.allclose(ratios, 0.5, rtol=1e-12)


def test_richardson_rejects_invalid_bounds():
    S, b = diag13()
    with pytest.raises(BoundsError):
        richardson_invert(S, b, 1.5, 3.0)
    with pytest.raises(BoundsError):
        richardson_invert(S, b, 1.0, 2.0)
    with pytest.raises(BoundsError):
        richardson_invert(S, b, 0.0, 3.0)


def test_richardson_reports_on_max_iter():
    S, b = diag13()
    with pytest.raises(ConvergenceError) as exc:
        richardson_invert(S, b, 1.0, 3.0, tol=1e-12, max_iter=3)
    assert exc.value.report.iterations == 3 and len(exc.value.report.residual_history) == 4


@given(instance_params)
def test_richardson_error_decays_geometrically(params):
    seed, m, n, J, _ = params
    sys, ctrl, _ = gen_random(seed, m, n, J, "diagonal")
    a = assess_controlled(sys, ctrl)
    rng = np.random.default_rng(seed)
    f = ModuleVector.random(rng, m, n)
    b = a.S @ f
    _, rep = richardson_invert(a.S, b, a.A_opt, a.B_opt, tol=1e-9, x_true=f)
    assert rep.contraction_observed <= rep.bound_ratio + 1e-10
    for k, err in enumerate(rep.error_history):
        assert err <= rep.bound_ratio ** k + 1e-10


def test_cg_small_cases(rng):
    _, rep = cg_invert(AdjointableOp.identity(2, 3), ModuleVector.random(rng, 2, 3))
    assert rep.iterations == 1
    S, b = diag13()
    x, rep = cg_invert(S, b, tol=1e-12)
    assert rep.iterations <= 2 and np.allclose(x.slots, [[1.0, 1 / 3]])
    with pytest.raises(PositivityError):
        cg_invert(AdjointableOp.diagonal([[1.0, -1.0]]), b)


@given(instance_params)
def test_cg_converges_and_energy_decreases(params):
    seed, m, n, J, mode = params
    sys, ctrl, _ = gen_random(seed, m, n, J, mode)
    S = frame_operator(sys, ctrl)
    f = ModuleVector.random(np.random.default_rng(seed), m, n)
    x, rep = cg_invert(S, S @ f, tol=1e-10, x_true=f)
    assert rep.iterations <= n
    assert rep.residual_history[-1] <= 1e-10
    e = np.array(rep.energy_history)
    assert np.all(np.diff(e) <= 1e-12 * max(1.0, abs(e).max()))


def test_reconstruct_paper_example(rng):
    sys, ctrl = gen_paper_example(16)
    f = ModuleVector.random(rng, 1, 16)
    x, rep = reconstruct(sys, ctrl, analysis_apply(sys, ctrl, f))
    assert np.abs(x.slots - f.slots).max() <= 1e-12


def test_reconstruct_identity_frame(rng):
    sys = identity_system(3, 2)
    f = ModuleVector.random(rng, 3, 2)
    x, _ = reconstruct(sys, None, analysis_apply(sys, None, f), method="cg")
    assert np.array_equal(x.slots, f.slots)


@given(instance_params)
def test_reconstruct_inverts_analysis(params):
    sys, ctrl, _ = gen_random(*params)
    f = ModuleVector.random(np.random.default_rng(params[0]), sys.m, sys.n)
    for method in ("richardson", "cg"):
        _, rep = reconstruct(sys, ctrl, analysis_apply(sys, ctrl, f), method, 1e-8, x_true=f)
        assert rep.rel_error <= 1e-8
        if method == "richardson":
            assert rep.iterations <= rep.predicted_iterations


def test_predicted_iterations():
    assert predicted_iterations(1.0, 3.0, 1e-8) == 27
    assert predicted_iterations(2.0, 2.0, 1e-8) == 1


def test_conditioning_same_pair_gives_same_counts():
    sys, ctrl, _ = gen_random(1, 2, 4, 5, "diagonal")
    rep = conditioning_report(sys, ctrl, ctrl)
    assert rep.iters_base == rep.iters_test and rep.kappa_base == rep.kappa_test


@pytest.mark.parametrize("kind", ["inverse", "sqrt"])
def test_whitening_gives_identity(kind):
    sys, _, _ = gen_random(0, 2, 6, 8, "diagonal", spread=100.0)
    ctrl = whitening_controllers(sys, kind)
    S = frame_operator(sys, ctrl)
    assert (S - AdjointableOp.identity(2, 6)).norm() <= 1e-10
    rep = conditioning_report(sys, None, ctrl)
    assert rep.kappa_test == pytest.approx(1.0, abs=1e-10) and rep.iters_test == 1


def test_conditioning_rejects_unvalidated_pair():
    sys, _, _ = gen_random(0, 1, 3, 4, "scalar_ctrl")
    bad = ControllerPair(AdjointableOp.diagonal([[1.0, 2.0, 3.0]]), AdjointableOp.identity(1, 3), False)
    with pytest.raises(CommutationError):
        conditioning_report(sys, None, bad)
