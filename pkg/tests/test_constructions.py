import numpy as np
import pytest
from hypothesis import given

from cgfusion.algebra import AlgebraElement
from cgfusion.constructions import (bessel_pair_K, c2_equivalence, canonical_K, conjugate_U,
                                    fit_epsilon, inverse_conjugate_U, lemma9_check,
                                    morphism_transport, perturbation_check, theta_left, theta_right)
from cgfusion.errors import (DimensionError, HypothesisError, MorphismError, ParamError,
                             PositivityError, SingularError)
from cgfusion.frames import (ControllerPair, Member, assess_controlled, frame_operator)
from cgfusion.generators import gen_paper_example, gen_random, identity_system
from cgfusion.hilbert_module import AdjointableOp, ModuleVector, Projector, inner_product, op_inverse

from conftest import instance_params, make_instance


def I(m, n):
    return AdjointableOp.identity(m, n)


def jiggle(sys, rng, size, mode):
    """Perturb every Lambda_j, keeping it diagonal in diagonal mode."""
    def noise(L):
        if mode == "diagonal":
            return AdjointableOp.diagonal(size * rng.standard_normal((L.m, L.n)))
        return AdjointableOp(size * rng.standard_normal(L.blocks.shape))
    return sys.with_members([Member(mem.P, mem.Lambda + noise(mem.Lambda), mem.v) for mem in sys.members])


def same_system(a, b, tol=1e-12):
    return all((x.local_operator() - y.local_operator()).norm() <= tol for x, y in zip(a.members, b.members))


# c2_equivalence

def test_c2_identity_frame_doubling():
    r = c2_equivalence(identity_system(1, 3), I(1, 3).scale(2.0))
    assert r.predicted[:2] == pytest.approx((4, 4))
    assert (r.measured.A_opt, r.measured.B_opt) == pytest.approx((4, 4))


def test_c2_trivial_controller_and_reverse_direction():
    sys, ctrl, _ = gen_random(2, 2, 3, 4, "diagonal")
    plain = assess_controlled(sys)
    r = c2_equivalence(sys, I(2, 3))
    assert r.predicted[:2] == pytest.approx((plain.A_opt, plain.B_opt))
    back = c2_equivalence(sys, ctrl.C, "from_controlled")
    assert back.within_predictions()
    assert back.measured.A_opt == pytest.approx(plain.A_opt)


def test_c2_rejects_non_positive():
    with pytest.raises(PositivityError):
        c2_equivalence(identity_system(1, 2), AdjointableOp.diagonal([[1.0, -1.0]]))
    with pytest.raises(ParamError):
        c2_equivalence(identity_system(1, 2), I(1, 2), "sideways")


# theta compositions

def test_theta_right_examples():
    sys = identity_system(1, 3)
    r = theta_right(sys, None, I(1, 3))
    assert same_system(r.system, sys)
    r = theta_right(sys, None, I(1, 3).scale(2.0))
    assert r.predicted[:2] == pytest.approx((4, 4))
    assert (r.measured.A_opt, r.measured.B_opt) == pytest.approx((4, 4))


def test_theta_right_hypotheses_named():
    sys, ctrl, _ = gen_random(4, 1, 3, 4, "diagonal")
    rot = AdjointableOp.from_matrix(np.linalg.qr(np.random.default_rng(0).standard_normal((3, 3)))[0], 1)
    with pytest.raises(HypothesisError) as exc:
        theta_right(sys, ctrl, rot)
    assert "commutes" in exc.value.check
    with pytest.raises(HypothesisError) as exc:
        theta_right(sys, ctrl, AdjointableOp.diagonal([[1.0, 0.0, 1.0]]))
    assert "injective" in exc.value.check


def test_theta_left_scalar_on_paper_example():
    sys, ctrl = gen_paper_example(6)
    alpha = 0.7 - 0.4j
    r = theta_left(sys, ctrl, I(1, 6).scale(alpha))
    expected = abs(alpha) ** 2
    assert r.predicted[:2] == pytest.approx((expected, expected))
    assert (r.measured.A_opt, r.measured.B_opt) == pytest.approx((expected, expected))


def test_theta_left_rejects_ragged_codomains():
    sys, ctrl = gen_paper_example(3)
    with pytest.raises(HypothesisError) as exc:
        theta_left(sys, ctrl, AdjointableOp.diagonal([[1.0, 2.0, 3.0]]))
    assert exc.value.check == "uniform codomain dims"


@given(instance_params)
def test_theta_predictions_hold(params):
    sys, ctrl, _ = make_instance(params)
    rng = np.random.default_rng(params[0])
    if params[4] == "diagonal":
        theta = AdjointableOp.diagonal(np.exp(rng.uniform(-0.7, 0.7, (sys.m, sys.n))))
    else:
        theta = I(sys.m, sys.n).scale(complex(rng.uniform(0.5, 2), rng.uniform(-1, 1)))
    assert theta_right(sys, ctrl, theta).within_predictions()
    assert theta_left(sys, ctrl, theta).within_predictions()


# conjugation

def test_conjugate_identity_and_doubling():
    sys, ctrl, K = gen_random(6, 2, 3, 5, "diagonal")
    r = conjugate_U(sys, ctrl, I(2, 3), K)
    assert same_system(r.system, sys, 1e-12) and (r.K_out - K).norm() == 0
    ident = identity_system(1, 2)
    r = conjugate_U(ident, None, I(1, 2).scale(2.0), I(1, 2))
    assert (r.K_out - I(1, 2).scale(4.0)).norm() < 1e-14
    assert (r.measured.A_opt, r.measured.B_opt) == pytest.approx((4, 4))
    assert r.measured.K_verdict.is_K_frame
    back = inverse_conjugate_U(r.system, None, I(1, 2).scale(2.0), r.K_out)
    assert (back.measured.A_opt, back.measured.B_opt) == pytest.approx((1, 1), abs=1e-10)


def test_conjugate_invariance_hypothesis():
    sys, ctrl, K = gen_random(1, 1, 3, 4, "diagonal")
    U = AdjointableOp.from_matrix([[1, 1, 0], [0, 1, 0], [0, 0, 1]], 1)
    with pytest.raises(HypothesisError):
        conjugate_U(sys, None, U, K)
    with pytest.raises(HypothesisError) as exc:
        conjugate_U(sys, None, AdjointableOp.diagonal([[1.0, 0.0, 1.0]]), K)
    assert exc.value.check == "U invertible"


@given(instance_params)
def test_conjugate_round_trip(params):
    seed, m, n, J, _ = params
    sys, ctrl, K = gen_random(seed, m, n, J, "diagonal")
    rng = np.random.default_rng(seed)
    U = AdjointableOp.diagonal(np.exp(rng.uniform(-0.7, 0.7, (m, n))) * np.exp(2j * np.pi * rng.random((m, n))))
    fwd = conjugate_U(sys, ctrl, U, K)
    assert fwd.within_predictions() and fwd.checks["lemma9"] <= 1e-10
    back = inverse_conjugate_U(fwd.system, ctrl, U, fwd.K_out)
    assert back.within_predictions()
    S = frame_operator(sys, ctrl)
    assert (back.measured.S - S).norm() <= 1e-10 * max(1, S.norm())


# canonical K

def test_canonical_K_examples():
    sys = identity_system(1, 3)
    ctrl = ControllerPair.scalar(2.0, 3.0, 1, 3)
    S = frame_operator(sys, ctrl)
    r = canonical_K(sys, ctrl, S)
    assert same_system(r.system, sys, 1e-12)
    assert (r.measured.S - S).norm() < 1e-12
    dsys, dctrl, _ = gen_random(8, 2, 4, 6, "diagonal")
    r = canonical_K(dsys, dctrl, I(2, 4))
    assert (r.measured.S - op_inverse(frame_operator(dsys, dctrl))).norm() <= 1e-8
    with pytest.raises(SingularError):
        canonical_K(dsys, dctrl, AdjointableOp.diagonal(np.ones((2, 4)) * [1, 1, 1, 0]))


@given(instance_params)
def test_canonical_K_identity(params):
    seed, m, n, J, _ = params
    sys, ctrl, K = gen_random(seed, m, n, J, "diagonal")
    r = canonical_K(sys, ctrl, K)
    assert r.checks["frame_operator_identity"] <= 1e-8 * max(1, r.measured.S.norm())
    assert r.within_predictions()


# Bessel pairs

def test_bessel_pair_examples():
    r = bessel_pair_K(identity_system(1, 2), identity_system(1, 2), None)
    assert (r.K - I(1, 2)).norm() < 1e-14 and r.lower_Lambda == pytest.approx(1) and r.lower_Gamma == pytest.approx(1)
    sys, ctrl = gen_paper_example(5)
    r = bessel_pair_K(sys, sys, ctrl)
    assert (r.K - I(1, 5)).norm() < 1e-12 and r.verified
    with pytest.raises(DimensionError):
        bessel_pair_K(identity_system(1, 2), identity_system(1, 3), None)


@given(instance_params)
def test_bessel_pair_lower_bounds(params):
    sys, ctrl, _ = make_instance(params)
    rng = np.random.default_rng(params[0])
    gamma = jiggle(sys, rng, 0.2, params[4])
    r = bessel_pair_K(sys, gamma, ctrl)
    assert r.A_K_Lambda >= r.lower_Lambda - 1e-9
    assert r.A_K_Gamma >= r.lower_Gamma - 1e-9


# transport along slot maps

def test_morphism_identity_and_duplicate():
    sys, ctrl, _ = gen_random(3, 1, 3, 4, "scalar_ctrl")
    base = assess_controlled(sys, ctrl)
    r = morphism_transport(sys, ctrl, [0])
    assert (r.measured.A_opt, r.measured.B_opt) == (base.A_opt, base.B_opt)
    with pytest.raises(MorphismError):
        morphism_transport(sys, ctrl, [0, 0])
    dup = morphism_transport(sys, ctrl, [0, 0], strict=False)
    assert (dup.measured.A_opt, dup.measured.B_opt) == pytest.approx((base.A_opt, base.B_opt), rel=1e-14)
    with pytest.raises(MorphismError):
        morphism_transport(sys, ctrl, [1])


@given(instance_params)
def test_morphism_permutation_intertwines(params):
    sys, ctrl, _ = make_instance(params)
    perm = np.random.default_rng(params[0]).permutation(sys.m)
    r = morphism_transport(sys, ctrl, perm)
    assert r.checks["intertwining"] <= 1e-12 * max(1, r.measured.B_opt)
    assert r.checks["bounds_shift"] == 0.0


# projection identity

def test_lemma9_examples(rng):
    W = Projector.coordinate(2, 4, [True, True, False, False])
    r = lemma9_check(W, I(2, 4))
    assert r.holds and r.residual == 0.0
    r = lemma9_check(W, I(2, 4).scale(2.0))
    assert r.holds and r.residual <= 1e-14
    blocks = np.zeros((2, 4, 4), dtype=complex)
    blocks[:, :2, :2] = rng.standard_normal((2, 2, 2)) + 2 * np.eye(2)
    blocks[:, 2:, 2:] = rng.standard_normal((2, 2, 2)) + 2 * np.eye(2)
    assert lemma9_check(W, AdjointableOp(blocks)).holds
    with pytest.raises(SingularError):
        lemma9_check(W, AdjointableOp.diagonal([[1, 1, 1, 0], [1, 1, 1, 1]]))


def test_lemma9_fails_without_invariance():
    W = Projector.coordinate(1, 2, [True, False])
    T = AdjointableOp.from_matrix([[1.0, 0.0], [1.0, 1.0]], 1)
    r = lemma9_check(W, T)
    assert not r.holds and r.hypothesis_residual > 0.1


# perturbation

def test_perturbation_zero():
    sys, ctrl, K = gen_random(5, 2, 3, 5, "scalar_ctrl")
    r = perturbation_check(sys, sys, ctrl, K, 0.01, 0.01, 0.0, n_samples=50)
    assert r.status == "certified" and r.certified
    assert r.predicted_lower == pytest.approx((0.99 * np.sqrt(r.A) / 1.01) ** 2)
    assert r.verified


def test_perturbation_scaled_member_on_paper_example():
    sys, ctrl = gen_paper_example(8)
    members = list(sys.members)
    members[3] = Member(members[3].P, members[3].Lambda.scale(1.001), members[3].v)
    gamma = sys.with_members(members)
    K = I(1, 8)
    eps = fit_epsilon(sys, gamma, ctrl, K, 0.01, 0.01)
    r = perturbation_check(sys, gamma, ctrl, K, 0.01, 0.01, eps, n_samples=100)
    assert r.certified and r.verified


def test_perturbation_gate_and_params():
    sys, ctrl, K = gen_random(5, 1, 3, 4, "scalar_ctrl")
    A = perturbation_check(sys, sys, ctrl, K, 0.1, 0.1, 0.0, n_samples=0).A
    r = perturbation_check(sys, sys, ctrl, K, 0.1, 0.1, 0.9 * np.sqrt(A) + 1e-9, n_samples=0)
    assert not r.gate and not r.certified and r.verified is None
    with pytest.raises(ParamError):
        perturbation_check(sys, sys, ctrl, K, 1.0, 0.1, 0.0)
    with pytest.raises(ParamError):
        perturbation_check(sys, sys, ctrl, K, 0.1, 0.1, -1.0)


def test_perturbation_falsified_by_sampling():
    sys, ctrl, K = gen_random(5, 1, 3, 4, "scalar_ctrl")
    gamma = sys.with_members([Member(m.P, m.Lambda.scale(-1.0), m.v) for m in sys.members])
    r = perturbation_check(sys, gamma, ctrl, K, 0.1, 0.1, 0.0, n_samples=50)
    assert r.status == "falsified" and not r.certified


@given(instance_params)
def test_certified_perturbation_bounds_hold(params):
    sys, ctrl, K = make_instance(params)
    rng = np.random.default_rng(params[0])
    gamma = jiggle(sys, rng, 1e-3, params[4])
    eps = fit_epsilon(sys, gamma, ctrl, K, 0.05, 0.05)
    r = perturbation_check(sys, gamma, ctrl, K, 0.05, 0.05, eps, n_samples=20)
    assert r.certified and r.bounds_hold
