"""Command line interface: ``mdpfold <command> ...``.

Exit codes: 0 ok, 1 parse error, 2 validation error, 3 a structural
condition is violated, 4 the model is not even and cannot be folded.
"""
from __future__ import annotations

import argparse
import contextlib
import csv
import os
import sys
import warnings

import numpy as np

from . import modelfile, remote
from .errors import MDPError, ModelParseError, NotEven, ValidationError
from .folding import fold_mdp
from .model import format_number
from .monotone import monotone_solve, value_iteration
from .solve import solve_finite_horizon
from .structure import EPS, full_report, is_quasi_convex_even

EXIT_OK, EXIT_PARSE, EXIT_VALIDATION, EXIT_VIOLATED, EXIT_NOT_EVEN = 0, 1, 2, 3, 4


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_PARSE, f"{self.prog}: error: {message}\n")


@contextlib.contextmanager
def _open_out(path):
    if path is None or path == "-":
        yield sys.stdout
    else:
        with open(path, "w", newline="") as fh:
            yield fh


def _write_values(path, points, values, first_stage=1):
    with _open_out(path) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "x", "V"])
        for t, row in enumerate(np.atleast_2d(values), start=first_stage):
            for x, v in zip(points, row):
                w.writerow([t, format_number(x), format_number(v)])


def _write_policy(path, points, policy, first_stage=1):
    with _open_out(path) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "x", "u"])
        for t, row in enumerate(np.atleast_2d(policy), start=first_stage):
            for x, u in zip(points, row):
                w.writerow([t, format_number(x), format_number(u)])


def cmd_solve(args):
    model = modelfile.load_model(args.model)
    sol = solve_finite_horizon(model, args.horizon)
    _write_values(args.out, sol.points, sol.values)
    if args.policy:
        _write_policy(args.policy, sol.points, sol.policy)
    return EXIT_OK


def cmd_verify(args):
    model = modelfile.load_model(args.model)
    report = full_report(model, args.tolerance)
    text = str(report)
    print(text)
    if args.report:
        with open(args.report, "w") as fh:
            fh.write(text + "\n")
    return EXIT_OK if report.theorem_conditions else EXIT_VIOLATED


def cmd_fold(args):
    model = modelfile.load_model(args.model)
    folded = fold_mdp(model)
    modelfile.dump_model(folded, args.out)
    print(f"folded model with {folded.grid.size} states written to {args.out}")
    return EXIT_OK


def cmd_monotone(args):
    model = modelfile.load_model(args.model)
    report = full_report(model)
    if not report.theorem_conditions:
        print("warning: C1-C5 do not all hold; the accelerated solver may be wrong", file=sys.stderr)
        for name in ("C1", "C2", "C3", "C4", "C5"):
            if not report.verdicts[name]:
                print(f"  {name} violated {report.verdicts[name].witness}", file=sys.stderr)
    sol = monotone_solve(model, args.horizon)
    _write_values(args.out, sol.points, sol.values)
    if args.policy:
        _write_policy(args.policy, sol.points, sol.policy)
    if args.compare:
        full = solve_finite_horizon(model, sol.horizon)
        dev = float(np.max(np.abs(full.values - sol.values)))
        same = bool(np.array_equal(full.policy_index, sol.policy_index))
        print(f"Q-evaluations per stage: monotone {list(sol.q_evaluations)}, "
              f"unpruned half-grid {list(sol.baseline_evaluations)}, "
              f"full {list(full.q_evaluations)}", file=sys.stderr)
        print(f"max |V_monotone - V_full| = {dev:.3g}; strategies identical: {same}",
              file=sys.stderr)
    return EXIT_OK


def cmd_vi(args):
    model = modelfile.load_model(args.model)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        res = value_iteration(model, args.beta, args.tol, args.max_iter)
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    _write_values(args.out, res.points, res.value, first_stage=0)
    if args.policy:
        _write_policy(args.policy, res.points, res.policy, first_stage=0)
    print(f"iterations {res.iterations}, last change {res.residual:.3g}, "
          f"converged {res.converged}", file=sys.stderr)
    return EXIT_OK


_PRESET_OPTIONS = {
    "fig1": ("half_range", "step", "horizon", "a", "sigma", "lam", "q1"),
    "counterexample-m5": ("p", "k", "K", "half_range"),
    "counterexample-m2": ("half_range", "horizon"),
    "remote-estimation": (),
}


def cmd_example(args):
    preset = args.preset
    if preset not in _PRESET_OPTIONS:
        raise ModelParseError(f"unknown preset {preset!r}; choose from "
                              f"{', '.join(_PRESET_OPTIONS)}", "preset")
    given = {k: getattr(args, k) for k in ("half_range", "step", "horizon", "a", "sigma", "lam",
                                            "q1", "p", "k", "K") if getattr(args, k) is not None}
    extra = set(given) - set(_PRESET_OPTIONS[preset])
    if extra:
        raise ModelParseError(f"option(s) {sorted(extra)} do not apply to {preset}", "options")
    if preset == "remote-estimation":
        raise ModelParseError("remote-estimation has no default instance; write a model file "
                              "with a generator section", "preset")
    if preset != "fig1" and "half_range" in given:
        given["half_range"] = int(given["half_range"])
    if "horizon" in given:
        given["horizon"] = int(given["horizon"])

    if preset == "fig1":
        res = remote.reproduce_fig1(**given)
        model = res.model
        for t, k in enumerate(res.thresholds, start=1):
            print(f"k{t} = {k}")
        print(f"threshold strategy: {res.threshold_form}")
    elif preset == "counterexample-m5":
        ex = remote.counterexample_m5(**given)
        model = ex.model
        sol = solve_finite_horizon(ex.model)
        g = ex.model.grid
        for x in (-1, 0, 1):
            print(f"V1({x}) = {format_number(sol.values[0, g.index_of(x)])}")
        qc = is_quasi_convex_even(sol.values[0], g)
        print("V1 is quasi-convex" if qc else "V1 is NOT quasi-convex")
    else:
        ex = remote.counterexample_m2(**given)
        model = ex.model
        g = model.grid
        pol = [format_number(ex.solution.policy[0, g.index_of(x)]) for x in range(-2, 3)]
        rel = [format_number(ex.relabeled_solution.policy[0, g.index_of(x)]) for x in range(-2, 3)]
        print(f"g1(-2..2) = {' '.join(pol)}  (quasi-convex: {ex.policy_quasi_convex})")
        print(f"relabeled g1(-2..2) = {' '.join(rel)}  "
              f"(quasi-convex: {ex.relabeled_policy_quasi_convex})")

    if args.out:
        gen = {"preset": preset, "params": given} if given else {"preset": preset}
        modelfile.dump_model(model, args.out, generator=gen)
        print(f"model written to {args.out}")
    code = EXIT_OK
    if args.verify:
        report = full_report(model)
        print(report)
        if not report.theorem_conditions:
            code = EXIT_VIOLATED
    if args.solve:
        sol = solve_finite_horizon(model)
        _write_values(None, sol.points, sol.values)
    return code


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="mdpfold", description="Structure checks and solvers for symmetric 1-D MDPs.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("solve", help="finite-horizon backward induction")
    s.add_argument("model")
    s.add_argument("--horizon", type=int)
    s.add_argument("--out", help="values CSV (default stdout)")
    s.add_argument("--policy", help="strategy CSV")
    s.set_defaults(func=cmd_solve)

    s = sub.add_parser("verify", help="check C1-C5 and related conditions")
    s.add_argument("model")
    s.add_argument("--report")
    s.add_argument("--tolerance", type=float, default=EPS)
    s.set_defaults(func=cmd_verify)

    s = sub.add_parser("fold", help="write the folded model")
    s.add_argument("model")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_fold)

    s = sub.add_parser("monotone-solve", help="accelerated solver for quasi-convex strategies")
    s.add_argument("model")
    s.add_argument("--horizon", type=int)
    s.add_argument("--out")
    s.add_argument("--policy")
    s.add_argument("--compare", action="store_true", help="also run the full solver and compare")
    s.set_defaults(func=cmd_monotone)

    s = sub.add_parser("vi", help="discounted value iteration")
    s.add_argument("model")
    s.add_argument("--beta", type=float, required=True)
    s.add_argument("--tol", type=float, default=1e-8)
    s.add_argument("--max-iter", type=int, default=10_000)
    s.add_argument("--out")
    s.add_argument("--policy")
    s.set_defaults(func=cmd_vi)

    s = sub.add_parser("example", help="built-in instances")
    s.add_argument("preset")
    for name in ("half-range", "step", "horizon", "a", "sigma", "lam", "q1", "p", "k"):
        s.add_argument(f"--{name}", type=float)
    s.add_argument("--K", type=float)
    s.add_argument("--out")
    s.add_argument("--solve", action="store_true")
    s.add_argument("--verify", action="store_true")
    s.set_defaults(func=cmd_example)
    return p


def _limit_threads():
    n = os.environ.get("MDPFOLD_THREADS")
    if not n:
        return contextlib.nullcontext()
    from threadpoolctl import threadpool_limits
    return threadpool_limits(int(n))


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        with _limit_threads():
            return args.func(args)
    except ModelParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except NotEven as exc:
        print(f"not even: {exc}", file=sys.stderr)
        return EXIT_NOT_EVEN
    except ValidationError as exc:
        print(f"validation error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except MDPError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
