"""Command-line front end: ``pacbayes certify|compare|coverage|anytime|sweep``.

Exit status is 0 on success, 1 when the input is invalid and 2 when a
computation fails.  JSON output carries ``schema_version``; floats are
written with ``repr`` so they parse back to the identical double.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from typing import Any, Sequence

import numpy as np

from pacbayes import anytime, registry
from pacbayes.context import BoundContext, Certificate, EssSupInfo
from pacbayes.specfun import DomainError, NumericalError
from pacbayes.tails import BoundedRange, CustomCGF, SubExponential, SubGamma, SubGaussian

SCHEMA_VERSION = 1
EXIT_OK, EXIT_INVALID, EXIT_RUNTIME = 0, 1, 2
SEED_ENV = "PACBAYES_SEED"
LN2 = math.log(2.0)

COMPARE_IDS = ("mcallester", "seeger-langford", "catoni-uniform", "fast-rate-strong",
               "fast-rate-simple", "mixed-rate", "thiemann", "rivasplata")


class InputError(Exception):
    """Invalid command-line input; reported with exit status 1."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise InputError(message)


# -- argument groups ------------------------------------------------------------

def _add_context(p: argparse.ArgumentParser, need_n: bool = True) -> None:
    g = p.add_argument_group("context")
    g.add_argument("--n", type=int, required=need_n, help="sample size")
    conf = g.add_mutually_exclusive_group()
    conf.add_argument("--beta", type=float, help="confidence level in (0, 1), default 0.05")
    conf.add_argument("--log-inv-beta", type=float, help="ln(1/beta) in nats, for extreme confidence")
    kl = g.add_mutually_exclusive_group()
    kl.add_argument("--kl", type=float, help="KL(posterior || prior) in nats (default 0)")
    kl.add_argument("--kl-bits", type=float, help="KL(posterior || prior) in bits")
    g.add_argument("--emp-risk", type=float, default=0.0, help="posterior-averaged empirical risk")
    g.add_argument("--xi-mode", choices=("bound", "exact"), default="bound",
                   help="use the upper bound on xi(n) or its exact value")
    g.add_argument("--anytime-substitution", action="store_true",
                   help="replace xi(n) by sqrt(pi (n+1)) so bounds hold for all n")


def _add_tail(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("tail family (general-tail bounds)")
    g.add_argument("--family", choices=("bounded", "subgaussian", "subgamma", "subexponential", "custom"),
                   help="tail family of the loss")
    g.add_argument("--sigma2", type=float, help="variance proxy")
    g.add_argument("--c", type=float, help="scale parameter of subgamma/subexponential families")
    g.add_argument("--range", type=float, nargs=2, metavar=("A", "B"), help="loss range [A, B]")
    g.add_argument("--psi-expr", help="custom psi as an expression in lam, e.g. 'lam**2/2'")
    g.add_argument("--psi-table", help="custom psi as a CSV file with columns lambda,psi")
    g.add_argument("--b-dom", type=float, default=math.inf, help="domain end of a custom psi")
    g.add_argument("--esssup", type=float, help="known essential supremum of the population risk")
    g.add_argument("--k-max", type=int, help="KL cut-off for the Chernoff analogue (default n)")
    g.add_argument("--lambda", dest="lam", type=float, help="parameter of fixed-lambda bounds")
    g.add_argument("--sigma2-n", type=float, help="second-moment aggregate for the second-moment bound")


def _add_output(p: argparse.ArgumentParser) -> None:
    p.add_argument("--format", choices=("json", "csv"), default="json", help="output format")
    p.add_argument("--output", help="write to this file instead of stdout")


def _add_lab(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("experiment")
    src = g.add_mutually_exclusive_group()
    src.add_argument("--problem", help="problem definition JSON file")
    src.add_argument("--preset", help="name of a built-in problem")
    g.add_argument("--rule", choices=("gibbs", "prior", "erm-softmax"), help="posterior rule")
    g.add_argument("--gibbs-lambda", type=float, help="Gibbs temperature")
    g.add_argument("--scale", choices=("unscaled", "n"), default="unscaled", help="Gibbs temperature convention")
    g.add_argument("--temperature", type=float, default=0.1, help="softmax temperature for erm-softmax")
    g.add_argument("--trials", type=int, default=10_000, help="Monte-Carlo trials")
    g.add_argument("--seed", type=int, help=f"master seed (falls back to ${SEED_ENV}, then 0)")
    g.add_argument("--threads", type=int, default=1, help="maximum worker threads")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="pacbayes", description="PAC-Bayes risk certificates and coverage experiments.")
    parser.add_argument("--version", action="version", version=f"pacbayes schema {SCHEMA_VERSION}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("certify", help="evaluate one bound")
    p.add_argument("--bound", required=True, choices=registry.ALL_IDS, help="bound id")
    _add_context(p)
    _add_tail(p)
    _add_output(p)

    p = sub.add_parser("compare", help="evaluate all [0,1]-loss bounds and check their ordering")
    _add_context(p)
    _add_output(p)

    p = sub.add_parser("coverage", help="Monte-Carlo coverage of bounds on a discrete problem")
    p.add_argument("--bound", action="append", choices=registry.ALL_IDS,
                   help="bound id (repeatable; default: every applicable bound)")
    p.add_argument("--n", type=int, help="sample size (default: the preset's)")
    p.add_argument("--beta", type=float, default=0.05, help="confidence level")
    _add_lab(p)
    _add_output(p)

    p = sub.add_parser("anytime", help="certificates over n = 1..horizon under a confidence schedule")
    p.add_argument("--bound", required=True, choices=registry.ALL_IDS, help="bound id")
    p.add_argument("--schedule", choices=("basel", "log-squared", "substitution"), default="basel",
                   help="how beta is spread over sample sizes")
    p.add_argument("--horizon", type=int, required=True, help="largest sample size")
    _add_context(p, need_n=False)
    _add_tail(p)
    _add_lab(p)
    _add_output(p)

    p = sub.add_parser("sweep", help="vary one context field and tabulate bounds")
    p.add_argument("--bound", action="append", required=True, choices=registry.ALL_IDS,
                   help="bound id (repeatable)")
    p.add_argument("--field", required=True, choices=("n", "kl", "emp-risk", "beta"), help="field to vary")
    p.add_argument("--start", type=float, required=True, help="first value")
    p.add_argument("--stop", type=float, required=True, help="last value")
    p.add_argument("--num", type=int, default=11, help="number of points")
    p.add_argument("--log", action="store_true", help="log-spaced points")
    _add_context(p, need_n=False)
    _add_tail(p)
    _add_output(p)
    return parser


# -- conversions ---------------------------------------------------------------------

def _log_inv_beta(args) -> float:
    if getattr(args, "log_inv_beta", None) is not None:
        if not args.log_inv_beta > 0:
            raise InputError("--log-inv-beta must be positive")
        return args.log_inv_beta
    beta = 0.05 if args.beta is None else args.beta
    if not 0.0 < beta < 1.0:
        raise InputError("--beta must lie in (0, 1)")
    return -math.log(beta)


def _kl(args) -> float:
    if getattr(args, "kl_bits", None) is not None:
        return args.kl_bits * LN2
    return 0.0 if args.kl is None else args.kl


def make_context(args, n: int | None = None) -> BoundContext:
    n = args.n if n is None else n
    if n is None or n < 1:
        raise InputError("--n must be a positive integer")
    kl = _kl(args)
    if not (kl >= 0 and math.isfinite(kl)):
        raise InputError("--kl must be finite and non-negative")
    if args.beta is not None and not 0.0 < args.beta < 1.0:
        raise InputError("--beta must lie in (0, 1)")
    if args.log_inv_beta is not None and not args.log_inv_beta > 0:
        raise InputError("--log-inv-beta must be positive")
    if not math.isfinite(args.emp_risk):
        raise InputError("--emp-risk must be finite")
    if args.log_inv_beta is None:
        ctx = BoundContext(n=n, beta=0.05 if args.beta is None else args.beta,
                           kl=kl, emp_risk=args.emp_risk, xi_mode=args.xi_mode)
    else:
        ctx = BoundContext(n=n, log_inv_beta=_log_inv_beta(args), kl=kl, emp_risk=args.emp_risk,
                           xi_mode=args.xi_mode)
    if args.anytime_substitution:
        ctx = anytime.seeger_anytime_substitution(ctx)
    return ctx


def _read_table(path: str):
    rows = []
    with open(path, encoding="utf-8", newline="") as fh:
        for rec in csv.reader(fh):
            if not rec:
                continue
            try:
                rows.append((float(rec[0]), float(rec[1])))
            except (ValueError, IndexError):
                if rows:
                    raise InputError(f"--psi-table: malformed row {rec!r}") from None
    if len(rows) < 2:
        raise InputError("--psi-table needs at least two rows")
    lam, val = zip(*rows)
    return np.array(lam), np.array(val)


def _expression(expr: str):
    import sympy

    lam = sympy.Symbol("lam")
    try:
        parsed = sympy.sympify(expr, locals={"lam": lam})
    except (sympy.SympifyError, SyntaxError, TypeError) as exc:
        raise InputError(f"--psi-expr: cannot parse {expr!r}: {exc}") from None
    if parsed.free_symbols - {lam}:
        raise InputError("--psi-expr may only use the variable lam")
    return sympy.lambdify(lam, parsed, modules="numpy")


def make_family(args):
    fam = args.family
    if fam is None:
        return None
    if fam == "bounded":
        if args.range is None:
            raise InputError("--family bounded needs --range A B")
        return BoundedRange(*args.range)
    if fam == "custom":
        if args.psi_table:
            lam, val = _read_table(args.psi_table)
            return CustomCGF.from_table(lam, val, None if math.isinf(args.b_dom) else args.b_dom)
        if args.psi_expr:
            return CustomCGF(_expression(args.psi_expr), args.b_dom)
        raise InputError("--family custom needs --psi-expr or --psi-table")
    if args.sigma2 is None:
        raise InputError(f"--family {fam} needs --sigma2")
    if fam == "subgaussian":
        return SubGaussian(args.sigma2)
    if args.c is None:
        raise InputError(f"--family {fam} needs --c")
    return SubGamma(args.sigma2, args.c) if fam == "subgamma" else SubExponential(args.sigma2, args.c)


def _extras(args) -> dict[str, Any]:
    extras: dict[str, Any] = {}
    family = make_family(args)
    if family is not None:
        extras["family"] = family
    if args.esssup is not None:
        extras["esssup"] = EssSupInfo(args.esssup, known=True)
    if args.lam is not None:
        extras["lam"] = args.lam
    if args.sigma2_n is not None:
        extras["sigma2_n"] = args.sigma2_n
    if args.range is not None:
        extras["loss_range"] = tuple(args.range)
    if args.k_max is not None:
        extras["k_max"] = args.k_max
    return extras


def _certify(bound_id: str, ctx: BoundContext, extras: dict[str, Any]) -> Certificate:
    if bound_id in registry.BOUNDED_IDS and not 0.0 <= ctx.emp_risk <= 1.0:
        raise InputError(f"--emp-risk must lie in [0, 1] for --bound {bound_id}")
    needs = registry.REQUIRES.get(bound_id, ())
    flag = {"family": "--family", "lam": "--lambda", "sigma2_n": "--sigma2-n", "loss_range": "--range"}
    for name in needs:
        if name == "loss_range":
            continue
        if name not in extras:
            raise InputError(f"--bound {bound_id} needs {flag[name]}")
    return registry.evaluate(bound_id, ctx, **extras)


def _rule(args, scenario=None):
    from pacbayes.lab.problem import ErmSoftmax, FixedPosterior, Gibbs

    if args.rule is None:
        if scenario is not None:
            return scenario.rule
        return Gibbs(1.0 if args.gibbs_lambda is None else args.gibbs_lambda, args.scale)
    if args.rule == "prior":
        return FixedPosterior()
    if args.rule == "erm-softmax":
        return ErmSoftmax(args.temperature)
    if args.gibbs_lambda is None:
        raise InputError("--rule gibbs needs --gibbs-lambda")
    return Gibbs(args.gibbs_lambda, args.scale)


def _problem(args):
    from pacbayes.lab import presets
    from pacbayes.lab.problem import DiscreteProblem

    if args.preset:
        try:
            sc = presets.get(args.preset)
        except KeyError as exc:
            raise InputError(f"--preset: {exc.args[0]}") from None
        return sc.problem, sc
    if args.problem:
        if not os.path.exists(args.problem):
            raise InputError(f"--problem: no such file {args.problem!r}")
        try:
            return DiscreteProblem.from_json(args.problem), None
        except (ValueError, OSError) as exc:
            raise InputError(f"--problem: {exc}") from None
    raise InputError("give --problem FILE or --preset NAME")


def _seed(args) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get(SEED_ENV)
    if env is None:
        return 0
    try:
        return int(env)
    except ValueError:
        raise InputError(f"${SEED_ENV} must be an integer, got {env!r}") from None


# -- serialization -------------------------------------------------------------------

def _envelope(command: str, result: Any) -> str:
    return json.dumps({"schema_version": SCHEMA_VERSION, "command": command, "result": result},
                      sort_keys=True)


def _csv(rows: Sequence[dict[str, Any]], columns: Sequence[str]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(columns), lineterminator="\n", extrasaction="ignore")
    w.writeheader()
    for row in rows:
        w.writerow({k: (repr(v) if isinstance(v, float) else
                        json.dumps(v, sort_keys=True) if isinstance(v, dict) else v) for k, v in row.items()})
    return buf.getvalue()


CERT_COLUMNS = ("bound_id", "value", "informative", "n", "beta", "params")
REPORT_COLUMNS = ("bound_id", "trials", "violations", "violation_rate", "binomial_ci",
                  "mean_bound", "mean_pop_risk", "mean_emp_risk", "mean_dependency",
                  "uninformative", "beta", "n")


# -- commands -------------------------------------------------------------------------

def cmd_certify(args) -> str:
    cert = _certify(args.bound, make_context(args), _extras(args))
    if args.format == "csv":
        return _csv([cert.to_dict()], CERT_COLUMNS)
    return _envelope("certify", cert.to_dict())


def dominance_verdict(certs: dict[str, Certificate]) -> dict[str, bool]:
    """Ordering checks between the [0,1]-loss bounds on one context."""
    v = {k: c.params.get("unclamped", c.value) for k, c in certs.items()}
    sl = v["seeger-langford"]
    return {
        "catoni-uniform == seeger-langford": abs(v["catoni-uniform"] - sl) <= 1e-5,
        "fast-rate-strong == seeger-langford": abs(v["fast-rate-strong"] - sl) <= 1e-5,
        "seeger-langford <= fast-rate-simple": sl <= v["fast-rate-simple"] + 1e-12,
        "fast-rate-simple <= mixed-rate": v["fast-rate-simple"] <= v["mixed-rate"] + 1e-12,
        "fast-rate-simple <= thiemann": v["fast-rate-simple"] <= v["thiemann"] + 1e-12,
        "mixed-rate <= rivasplata": v["mixed-rate"] <= v["rivasplata"] + 1e-12,
        "seeger-langford <= mcallester": sl <= v["mcallester"] + 1e-12,
    }


def cmd_compare(args) -> str:
    ctx = make_context(args)
    certs = {b: _certify(b, ctx, {}) for b in COMPARE_IDS}
    rows = sorted(certs.values(), key=lambda c: (c.value, c.bound_id))
    checks = dominance_verdict(certs)
    if args.format == "csv":
        return _csv([c.to_dict() for c in rows], CERT_COLUMNS)
    return _envelope("compare", {"rows": [c.to_dict() for c in rows],
                                 "dominance": {"holds": all(checks.values()), "checks": checks}})


def cmd_coverage(args) -> str:
    from pacbayes.lab import experiments

    problem, scenario = _problem(args)
    n = args.n if args.n is not None else (scenario.n if scenario else None)
    if n is None or n < 1:
        raise InputError("--n must be a positive integer")
    if not 0.0 < args.beta < 1.0:
        raise InputError("--beta must lie in (0, 1)")
    if args.trials < 1:
        raise InputError("--trials must be positive")
    ids = args.bound or list(experiments.applicable_bounds(problem))
    bad = [b for b in ids if b not in experiments.applicable_bounds(problem)]
    if bad:
        raise InputError(f"--bound {bad[0]} does not apply to this problem's loss range")
    reports = experiments.coverage_experiment(problem, _rule(args, scenario), ids, n, args.beta,
                                              args.trials, _seed(args), max(1, args.threads))
    rows = [r.to_dict() for r in reports.values()]
    if args.format == "csv":
        return _csv(rows, REPORT_COLUMNS)
    return _envelope("coverage", rows)


def cmd_anytime(args) -> str:
    if args.horizon < 1:
        raise InputError("--horizon must be positive")
    if args.problem or args.preset:
        from pacbayes.lab import experiments

        problem, scenario = _problem(args)
        beta = math.exp(-_log_inv_beta(args))
        report = experiments.anytime_coverage_experiment(
            problem, _rule(args, scenario), args.bound, args.horizon, beta,
            args.trials, _seed(args), mode=args.schedule, threads=max(1, args.threads))
        if args.format == "csv":
            return _csv([report.to_dict()], REPORT_COLUMNS)
        return _envelope("anytime", report.to_dict())
    extras = _extras(args)
    total = math.exp(-_log_inv_beta(args))
    certs = []
    for n in range(1, args.horizon + 1):
        args.n = n
        ctx = make_context(args)
        if args.schedule == "substitution":
            ctx = anytime.seeger_anytime_substitution(ctx)
        else:
            sched = anytime.BetaSchedule(args.schedule, total)
            ctx = ctx.replace(log_inv_beta=anytime.log_inv_beta_at(sched, n))
        certs.append(_certify(args.bound, ctx, extras))
    if args.format == "csv":
        return _csv([c.to_dict() for c in certs], CERT_COLUMNS)
    return _envelope("anytime", [c.to_dict() for c in certs])


def cmd_sweep(args) -> str:
    if args.num < 1:
        raise InputError("--num must be positive")
    if args.log and min(args.start, args.stop) <= 0:
        raise InputError("--log needs positive --start and --stop")
    points = (np.geomspace if args.log else np.linspace)(args.start, args.stop, args.num)
    extras = _extras(args)
    rows = []
    for x in points:
        x = float(x)
        if args.field == "n":
            ctx = make_context(args, n=int(round(x)))
        else:
            if args.n is None:
                raise InputError("--n is required unless --field n")
            if args.field == "kl":
                args.kl, args.kl_bits = x, None
            elif args.field == "emp-risk":
                args.emp_risk = x
            else:
                args.beta, args.log_inv_beta = x, None
            ctx = make_context(args)
        for b in args.bound:
            cert = _certify(b, ctx, extras)
            rows.append({"field": args.field, "x": x, "bound_id": b, "value": cert.value,
                         "informative": cert.informative})
    if args.format == "json":
        return _envelope("sweep", rows)
    return _csv(rows, ("field", "x", "bound_id", "value", "informative"))


COMMANDS = {"certify": cmd_certify, "compare": cmd_compare, "coverage": cmd_coverage,
            "anytime": cmd_anytime, "sweep": cmd_sweep}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        out = COMMANDS[args.command](args)
    except InputError as exc:
        print(f"pacbayes: error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (DomainError, KeyError, ValueError) as exc:
        print(f"pacbayes: error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (NumericalError, ArithmeticError, RuntimeError) as exc:
        print(f"pacbayes: numerical error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    text = out if out.endswith("\n") else out + "\n"
    if getattr(args, "output", None):
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
