"""Command-line entry point.

Exit codes: 0 all checks pass, 1 negative mathematical verdict, 2 usage or
I/O error, 3 failed hypothesis or validation.
"""
from __future__ import annotations

import argparse
import sys as _sys
from typing import Optional, Sequence

import numpy as np

from .constructions import fit_epsilon, perturbation_check
from .documents import InstanceDocument, load_signal, result_document
from .errors import (CommutationError, ConvergenceError, DimensionError, DocumentError, FrameError,
                     HypothesisError, ParamError)
from .frames import analysis_apply, assess_controlled, assess_k_g_fusion, ensure_controlled
from .generators import MODES, gen_paper_example, gen_random
from .hilbert_module import AdjointableOp, ModuleVector
from .oracle import CheckInstance, k_bound_bisection, sampled_check, slotwise_bounds
from .solver import reconstruct
from .suite import run_theorem_suite

EXIT_OK, EXIT_NEGATIVE, EXIT_USAGE, EXIT_HYPOTHESIS = 0, 1, 2, 3
ORACLE_RTOL = 1e-9
A_K_RTOL = 1e-6


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


class _UsageError(Exception):
    pass


def _positive_int(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return value


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="cgfusion", description="Controlled K-g-fusion frames over C^m.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("gen", help="write a seeded random instance")
    g.add_argument("--seed", type=int, required=True)
    g.add_argument("--m", type=_positive_int, default=2, help="algebra slots")
    g.add_argument("--n", type=_positive_int, default=4, help="module rank")
    g.add_argument("--J", type=_positive_int, default=6, help="number of members")
    g.add_argument("--mode", choices=MODES, default="scalar_ctrl")
    g.add_argument("--spread", type=float, default=4.0, help="controller and spectrum spread")
    g.add_argument("--out", help="output path (default: stdout)")

    e = sub.add_parser("example", help="write the truncated Parseval example")
    e.add_argument("--N", type=_positive_int, default=16, help="truncation size")
    e.add_argument("--m", type=_positive_int, default=1)
    e.add_argument("--cscale", type=float, default=2.0)
    e.add_argument("--cpscale", type=float, default=0.5)
    e.add_argument("--out", help="output path (default: stdout)")

    c = sub.add_parser("check", help="assess an instance and cross-check with the oracle")
    c.add_argument("--in", dest="inp", required=True)
    c.add_argument("--K", choices=("instance", "identity", "none"), default="instance",
                   help="operator for the K-frame verdict (default: the one stored, if any)")
    c.add_argument("--samples", type=int, default=200, help="random vectors for the sampled checks")
    c.add_argument("--json-out", help="write a result document")

    r = sub.add_parser("reconstruct", help="analyse a signal and reconstruct it")
    r.add_argument("--in", dest="inp", required=True)
    r.add_argument("--signal", default="random:0", help="signal document path or random:SEED")
    r.add_argument("--method", choices=("richardson", "cg"), default="richardson")
    r.add_argument("--tol", type=float, default=1e-8)
    r.add_argument("--json-out", help="write a result document")

    t = sub.add_parser("theorems", help="run the construction suite")
    t.add_argument("--seed", type=int, default=1)
    t.add_argument("--count", type=_positive_int, default=100)

    q = sub.add_parser("perturb", help="check a perturbed family against predicted bounds")
    q.add_argument("--in", dest="inp", required=True, help="reference instance")
    q.add_argument("--in2", required=True, help="perturbed instance")
    q.add_argument("--lambda1", type=float, default=0.05)
    q.add_argument("--lambda2", type=float, default=0.05)
    q.add_argument("--epsilon", type=float, default=None, help="omit to fit the smallest certified value")
    q.add_argument("--samples", type=int, default=200)
    q.add_argument("--json-out", help="write a result document")
    return p


def _emit(doc_text: str, path: Optional[str]):
    if path:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(doc_text)


def _write_instance(doc: InstanceDocument, path: Optional[str]):
    if path:
        doc.save(path)
    else:
        _sys.stdout.write(doc.dumps())


def cmd_gen(a) -> int:
    if a.spread < 1:
        raise ParamError("--spread must be >= 1")
    system, ctrl, K = gen_random(a.seed, a.m, a.n, a.J, a.mode, a.spread)
    created = f"gen seed={a.seed} m={a.m} n={a.n} J={a.J} mode={a.mode} spread={a.spread!r}"
    _write_instance(InstanceDocument(system, ctrl.C, ctrl.Cp, K,
                                     {"seed": a.seed, "mode": a.mode, "created": created}), a.out)
    return EXIT_OK


def cmd_example(a) -> int:
    system, ctrl = gen_paper_example(a.N, a.m, a.cscale, a.cpscale)
    created = f"example N={a.N} m={a.m} cscale={a.cscale!r} cpscale={a.cpscale!r}"
    _write_instance(InstanceDocument(system, ctrl.C, ctrl.Cp, None,
                                     {"seed": None, "mode": "example", "created": created}), a.out)
    return EXIT_OK


def _load_with_ctrl(path):
    doc = InstanceDocument.load(path)
    ctrl = ensure_controlled(doc.system, doc.controllers())
    return doc, ctrl


def _pick_K(doc, choice):
    if choice == "none":
        return None
    if choice == "identity":
        return AdjointableOp.identity(doc.system.m, doc.system.n)
    return doc.K


def cmd_check(a) -> int:
    doc, ctrl = _load_with_ctrl(a.inp)
    system = doc.system
    K = _pick_K(doc, a.K)
    assessed = assess_controlled(system, ctrl)
    oracle = slotwise_bounds(system, ctrl)
    scale_a, scale_b = max(1.0, abs(assessed.A_opt)), max(1.0, abs(assessed.B_opt))
    agree = (abs(oracle.A_oracle - assessed.A_opt) <= ORACLE_RTOL * scale_a
             and abs(oracle.B_oracle - assessed.B_opt) <= ORACLE_RTOL * scale_b)
    frame_sample = sampled_check("frame_order", CheckInstance(system, ctrl), a.samples)
    verdicts = {"is_bessel": assessed.is_bessel, "is_frame": assessed.is_frame,
                "is_tight": assessed.is_tight, "is_parseval": assessed.is_parseval,
                "oracle_agrees": agree, "samples_clean": frame_sample.witness is None}
    bounds = {"A_opt": assessed.A_opt, "B_opt": assessed.B_opt,
              "A_oracle": oracle.A_oracle, "B_oracle": oracle.B_oracle}
    reports = {"frame_order_max_violation": frame_sample.max_violation}
    ok = assessed.is_frame and agree and frame_sample.witness is None
    if K is not None:
        ka = assess_k_g_fusion(system, ctrl, K)
        A_K = ka.K_verdict.A_K
        A_K_bis = k_bound_bisection(system, ctrl, K)
        k_agree = (A_K == A_K_bis) if np.isinf(A_K) else abs(A_K - A_K_bis) <= A_K_RTOL * max(1.0, A_K)
        k_sample = sampled_check("k_frame_order", CheckInstance(system, ctrl, K), a.samples)
        verdicts.update(is_K_frame=ka.K_verdict.is_K_frame, A_K_bisection_agrees=bool(k_agree),
                        K_samples_clean=k_sample.witness is None)
        bounds.update(A_K=A_K, A_K_bisection=A_K_bis)
        reports["k_frame_order_max_violation"] = k_sample.max_violation
        ok = ok and ka.K_verdict.is_K_frame and k_agree and k_sample.witness is None
    print(f"A_opt={assessed.A_opt:.12g} B_opt={assessed.B_opt:.12g} "
          f"frame={assessed.is_frame} parseval={assessed.is_parseval} oracle_agrees={agree}")
    if K is not None:
        print(f"A_K={bounds['A_K']:.12g} K_frame={verdicts['is_K_frame']} "
              f"bisection_agrees={verdicts['A_K_bisection_agrees']}")
    _emit(result_document("check", verdicts, bounds, {}, reports), a.json_out)
    return EXIT_OK if ok else EXIT_NEGATIVE


def _signal(spec: str, m: int, n: int) -> ModuleVector:
    if spec.startswith("random:"):
        try:
            seed = int(spec.split(":", 1)[1])
        except ValueError:
            raise ParamError(f"bad signal spec {spec!r}") from None
        return ModuleVector.random(np.random.default_rng(seed), m, n)
    f = load_signal(spec)
    if f.slots.shape != (m, n):
        raise DimensionError(f"signal shape {f.slots.shape}, instance needs {(m, n)}")
    return f


def cmd_reconstruct(a) -> int:
    if not a.tol > 0:
        raise ParamError("--tol must be positive")
    doc, ctrl = _load_with_ctrl(a.inp)
    system = doc.system
    f = _signal(a.signal, system.m, system.n)
    if not assess_controlled(system, ctrl).is_frame:
        print("not a frame: the frame operator is singular", file=_sys.stderr)
        return EXIT_NEGATIVE
    try:
        _, rep = reconstruct(system, ctrl, analysis_apply(system, ctrl, f), a.method, a.tol, x_true=f)
    except ConvergenceError as exc:
        print(f"no convergence: {exc}", file=_sys.stderr)
        return EXIT_NEGATIVE
    ok = rep.rel_error <= a.tol
    print(f"method={rep.method} iterations={rep.iterations} rel_error={rep.rel_error:.3e} ok={ok}")
    _emit(result_document("reconstruct", {"reconstructed": ok}, {"bound_ratio": rep.bound_ratio},
                          {"predicted_iterations": rep.predicted_iterations},
                          {"iterations": rep.iterations, "rel_error": rep.rel_error,
                           "contraction_observed": rep.contraction_observed,
                           "residual_history": rep.residual_history}), a.json_out)
    return EXIT_OK if ok else EXIT_NEGATIVE


def cmd_theorems(a) -> int:
    report = run_theorem_suite(a.seed, a.count)
    print(report.table())
    for i, case, msg in report.failures[:20]:
        print(f"instance {i}: {case}: {msg}", file=_sys.stderr)
    return EXIT_OK if report.all_passed else EXIT_NEGATIVE


def cmd_perturb(a) -> int:
    doc, ctrl = _load_with_ctrl(a.inp)
    doc2 = InstanceDocument.load(a.in2)
    K = doc.K if doc.K is not None else AdjointableOp.identity(doc.system.m, doc.system.n)
    eps = a.epsilon
    if eps is None:
        eps = fit_epsilon(doc.system, doc2.system, ctrl, K, a.lambda1, a.lambda2)
    rep = perturbation_check(doc.system, doc2.system, ctrl, K, a.lambda1, a.lambda2, eps, a.samples)
    measured_A_K = rep.measured.K_verdict.A_K
    print(f"status={rep.status} gate={rep.gate} epsilon={eps:.6g} "
          f"predicted=[{rep.predicted_lower:.12g}, {rep.predicted_upper:.12g}] "
          f"measured=[{measured_A_K:.12g}, {rep.measured.B_opt:.12g}] verified={rep.verified}")
    _emit(result_document(
        "perturb",
        {"status": rep.status, "gate": rep.gate, "certified": rep.certified, "verified": rep.verified},
        {"A": rep.A, "B": rep.B, "A_K_gamma": measured_A_K, "B_gamma": rep.measured.B_opt},
        {"lower": rep.predicted_lower, "upper": rep.predicted_upper},
        {"lambda1": rep.lambda1, "lambda2": rep.lambda2, "epsilon": rep.epsilon,
         "worst_sample_gap": rep.hypothesis["worst_sample_gap"]}), a.json_out)
    return EXIT_OK if rep.certified and rep.verified else EXIT_NEGATIVE


COMMANDS = {"gen": cmd_gen, "example": cmd_example, "check": cmd_check,
            "reconstruct": cmd_reconstruct, "theorems": cmd_theorems, "perturb": cmd_perturb}


def cli_dispatch(argv: Sequence[str]) -> int:
    """Run one subcommand and return its exit code."""
    try:
        args = build_parser().parse_args(list(argv))
    except _UsageError as exc:
        print(f"usage error: {exc}", file=_sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    try:
        return COMMANDS[args.command](args)
    except (OSError, DocumentError, ParamError, DimensionError) as exc:
        print(f"error: {exc}", file=_sys.stderr)
        return EXIT_USAGE
    except (CommutationError, HypothesisError, FrameError) as exc:
        print(f"validation failed: {type(exc).__name__}: {exc}", file=_sys.stderr)
        return EXIT_HYPOTHESIS


def main(argv: Optional[Sequence[str]] = None) -> int:
    return cli_dispatch(_sys.argv[1:] if argv is None else argv)


if __name__ == "__main__":
    raise SystemExit(main())
