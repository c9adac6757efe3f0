"""Monte-Carlo coverage, tightness tables and alternating posterior optimization.

Each trial draws its dataset from ``default_rng([master_seed, trial])``, so
results do not depend on execution order or on how trials are split across
workers.  Means are accumulated with ``math.fsum`` for the same reason.
Trials whose outcome counts coincide share one bound evaluation.
"""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Any, Iterable, Sequence

import numpy as np
from scipy.stats import binomtest

from pacbayes import anytime, bounded, registry
from pacbayes.context import BoundContext
from pacbayes.lab.problem import (
    DiscreteProblem,
    Gibbs,
    empirical_risks,
    exact_quantities,
)
from pacbayes.specfun import DomainError, minimize_scalar
from pacbayes.tails import BoundedRange

__all__ = [
    "CoverageReport",
    "AlternatingResult",
    "wilson_interval",
    "applicable_bounds",
    "bound_extras",
    "coverage_experiment",
    "anytime_coverage_experiment",
    "tightness_table",
    "table_to_csv",
    "alternating_optimize",
    "mcallester_posterior",
]

CI_LEVEL = 0.99


def wilson_interval(violations: int, trials: int, level: float = CI_LEVEL) -> tuple[float, float]:
    ci = binomtest(violations, trials).proportion_ci(confidence_level=level, method="wilson")
    return float(ci.low), float(ci.high)


@dataclass(frozen=True)
class CoverageReport:
    bound_id: str
    trials: int
    violations: int
    violation_rate: float
    mean_bound: float
    mean_pop_risk: float
    binomial_ci: tuple[float, float]
    mean_emp_risk: float = math.nan
    mean_dependency: float = math.nan
    uninformative: int = 0
    beta: float = math.nan
    n: int = 0

    def to_dict(self) -> dict[str, Any]:
        d = asdict(self)
        d["binomial_ci"] = list(self.binomial_ci)
        return d

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "CoverageReport":
        d = dict(d)
        d["binomial_ci"] = tuple(float(x) for x in d["binomial_ci"])
        return cls(**d)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, s: str) -> "CoverageReport":
        return cls.from_dict(json.loads(s))


def applicable_bounds(problem: DiscreteProblem) -> tuple[str, ...]:
    """Bound ids whose assumptions the problem satisfies."""
    if problem.loss_range is None:
        return ("second-moment",)
    tail = ("chernoff", "chernoff-bounded", "chernoff-no-cutoff", "chernoff-linearized",
            "chernoff-loglog", "cgf-fixed-lambda", "randomized-subsample")
    if problem.unit_loss:
        return registry.BOUNDED_IDS + tail + ("second-moment",)
    return tail


def bound_extras(problem: DiscreteProblem, bound_id: str, n: int, beta: float) -> dict[str, Any]:
    """Data-independent extras for ``registry.evaluate``.

    The tail family is Hoeffding's for the declared range.  Fixed-lambda
    bounds get a lambda that depends only on (n, beta, range): n for
    Catoni, and the kl = 0 optimum sqrt(8 ln(1/beta) / n) / (b - a) for the
    CGF bound.
    """
    extras: dict[str, Any] = {"esssup": problem.esssup()}
    if problem.loss_range is not None:
        a, b = problem.loss_range
        extras["loss_range"] = (a, b)
        extras["family"] = BoundedRange(a, b)
        if bound_id == "cgf-fixed-lambda":
            extras["lam"] = math.sqrt(8.0 * math.log(1.0 / beta) / n) / max(b - a, 1e-300)
    if bound_id == "catoni-fixed":
        extras["lam"] = float(n)
    return extras


@dataclass
class _Acc:
    """Order-insensitive accumulator for one bound."""

    violations: int = 0
    uninformative: int = 0
    bounds: list = field(default_factory=list)
    pops: list = field(default_factory=list)
    emps: list = field(default_factory=list)
    deps: list = field(default_factory=list)

    def report(self, bound_id: str, trials: int, beta: float, n: int) -> CoverageReport:
        return CoverageReport(
            bound_id=bound_id,
            trials=trials,
            violations=self.violations,
            violation_rate=self.violations / trials,
            mean_bound=math.fsum(self.bounds) / trials,
            mean_pop_risk=math.fsum(self.pops) / trials,
            binomial_ci=wilson_interval(self.violations, trials),
            mean_emp_risk=math.fsum(self.emps) / trials,
            mean_dependency=math.fsum(self.deps) / trials,
            uninformative=self.uninformative,
            beta=beta,
            n=n,
        )


def _emp_for_bound(problem: DiscreteProblem, emp: float) -> float:
    # fsum over a posterior that sums to 1 within rounding can overshoot by an ulp
    if problem.loss_range is not None:
        emp = min(max(emp, problem.loss_range[0]), problem.loss_range[1])
    return emp


class _Evaluator:
    """Bound values for a (problem, rule, n, beta) cached on outcome counts."""

    def __init__(self, problem, rule, bound_ids, n, beta=None, log_inv_beta=None, log_xi=None):
        self.problem, self.rule, self.bound_ids, self.n = problem, rule, tuple(bound_ids), n
        self.beta = beta if beta is not None else math.exp(-log_inv_beta)
        self.log_inv_beta = -math.log(beta) if log_inv_beta is None else log_inv_beta
        self.log_xi = log_xi
        self.extras = {b: bound_extras(problem, b, n, self.beta) for b in self.bound_ids}
        self.cache: dict[bytes, tuple] = {}

    def __call__(self, counts: np.ndarray):
        key = counts.tobytes()
        hit = self.cache.get(key)
        if hit is not None:
            return hit
        emp_vec = empirical_risks(self.problem, counts)
        post = self.rule.posterior(self.problem, emp_vec, self.n)
        q = exact_quantities(self.problem, None, post, counts=counts)
        ctx = BoundContext(n=self.n, log_inv_beta=self.log_inv_beta, kl=q.kl,
                           emp_risk=_emp_for_bound(self.problem, q.emp_risk), log_xi=self.log_xi)
        results = {}
        for b in self.bound_ids:
            extras = dict(self.extras[b])
            if b == "second-moment":
                extras["sigma2_n"] = q.sigma2_n
            cert = registry.evaluate(b, ctx, **extras)
            results[b] = (cert.value, cert.informative)
        hit = (q, results)
        self.cache[key] = hit
        return hit


def _as_ids(bound_id) -> tuple[str, ...]:
    ids = (bound_id,) if isinstance(bound_id, str) else tuple(bound_id)
    for b in ids:
        if b not in registry.ALL_IDS:
            raise DomainError(f"unknown bound id {b!r}")
    return ids


def _trial_counts(problem: DiscreteProblem, n: int, master_seed: int, trial: int) -> np.ndarray:
    rng = np.random.default_rng([master_seed, trial])
    return rng.multinomial(n, problem.probs)


def coverage_experiment(problem: DiscreteProblem, rule, bound_id, n: int, beta: float,
                        trials: int = 10_000, master_seed: int = 0, threads: int = 1):
    """Fraction of datasets on which the certificate falls below the true risk.

    ``bound_id`` may be one id (returns a :class:`CoverageReport`) or a
    sequence of ids sharing the same datasets (returns a dict of reports).
    A violation is ``E^S R(W) > certificate``, with both sides computed
    exactly for the realized sample.
    """
    ids = _as_ids(bound_id)
    if trials < 1:
        raise DomainError("trials must be positive")
    ev = _Evaluator(problem, rule, ids, n, beta=beta)
    counts = _draw_all(trials, threads, lambda t: _trial_counts(problem, n, master_seed, t))
    accs = {b: _Acc() for b in ids}
    for c in counts:
        q, results = ev(c)
        for b in ids:
            value, informative = results[b]
            acc = accs[b]
            acc.violations += q.pop_risk > value
            acc.uninformative += not informative
            acc.bounds.append(value)
            acc.pops.append(q.pop_risk)
            acc.emps.append(q.emp_risk)
            acc.deps.append(q.kl / n)
    reports = {b: accs[b].report(b, trials, beta, n) for b in ids}
    return reports[ids[0]] if isinstance(bound_id, str) else reports


def _draw_all(trials: int, threads: int, draw) -> list:
    if threads <= 1:
        return [draw(t) for t in range(trials)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(draw, range(trials)))


ANYTIME_MODES = ("basel", "log-squared", "substitution", "none")


def anytime_coverage_experiment(problem: DiscreteProblem, rule, bound_id, horizon: int, beta: float,
                                trials: int = 2_000, master_seed: int = 0, mode: str = "basel",
                                threads: int = 1):
    """Frequency with which ANY prefix n = 1..horizon violates its certificate.

    ``mode`` picks how the confidence is spent across n: ``basel`` and
    ``log-squared`` schedules, ``substitution`` (xi(n) replaced by
    sqrt(pi (n+1)) at the full beta), or ``none`` (full beta at every n,
    which is not anytime-valid and serves as a negative control).
    Mean bound and risk columns refer to n = horizon.
    """
    ids = _as_ids(bound_id)
    if mode not in ANYTIME_MODES:
        raise DomainError(f"unknown anytime mode {mode!r}")
    if horizon < 1:
        raise DomainError("horizon must be positive")
    evaluators = []
    for n in range(1, horizon + 1):
        if mode in ("basel", "log-squared"):
            sched = anytime.BetaSchedule(mode, beta)
            evaluators.append(_Evaluator(problem, rule, ids, n, log_inv_beta=anytime.log_inv_beta_at(sched, n)))
        elif mode == "substitution":
            evaluators.append(_Evaluator(problem, rule, ids, n, beta=beta,
                                         log_xi=0.5 * math.log(math.pi * (n + 1))))
        else:
            evaluators.append(_Evaluator(problem, rule, ids, n, beta=beta))

    def draw(t):
        rng = np.random.default_rng([master_seed, t])
        seq = rng.choice(problem.probs.size, size=horizon, p=problem.probs)
        onehot = np.zeros((horizon, problem.probs.size), dtype=np.int64)
        onehot[np.arange(horizon), seq] = 1
        return np.cumsum(onehot, axis=0)

    accs = {b: _Acc() for b in ids}
    for prefix_counts in _draw_all(trials, threads, draw):
        violated = {b: False for b in ids}
        for n in range(1, horizon + 1):
            q, results = evaluators[n - 1](prefix_counts[n - 1])
            for b in ids:
                violated[b] = violated[b] or q.pop_risk > results[b][0]
            if n == horizon:
                for b in ids:
                    acc = accs[b]
                    acc.violations += violated[b]
                    acc.uninformative += not results[b][1]
                    acc.bounds.append(results[b][0])
                    acc.pops.append(q.pop_risk)
                    acc.emps.append(q.emp_risk)
                    acc.deps.append(q.kl / n)
    reports = {b: accs[b].report(b, trials, beta, horizon) for b in ids}
    return reports[ids[0]] if isinstance(bound_id, str) else reports


TABLE_COLUMNS = ("bound_id", "certificate", "emp_risk", "dependency", "slack")


def tightness_table(problem: DiscreteProblem, rule, bound_ids: Sequence[str], n: int, beta: float,
                    trials: int = 1_000, master_seed: int = 0, threads: int = 1) -> list[dict[str, Any]]:
    """Mean certificate, empirical risk, KL/n and slack (certificate - risk) per bound."""
    reports = coverage_experiment(problem, rule, list(bound_ids), n, beta, trials, master_seed, threads)
    return [
        {
            "bound_id": b,
            "certificate": r.mean_bound,
            "emp_risk": r.mean_emp_risk,
            "dependency": r.mean_dependency,
            "slack": r.mean_bound - r.mean_pop_risk,
        }
        for b, r in reports.items()
    ]


def table_to_csv(rows: Iterable[dict[str, Any]], columns: Sequence[str] | None = None) -> str:
    rows = list(rows)
    columns = list(columns or (rows[0].keys() if rows else TABLE_COLUMNS))
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=columns, lineterminator="\n", extrasaction="ignore")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: repr(v) if isinstance(v, float) else v for k, v in row.items()})
    return buf.getvalue()


# -- alternating optimization ----------------------------------------------------

@dataclass(frozen=True)
class AlternatingResult:
    posterior: np.ndarray
    parameter: float
    trace: tuple
    certificate: Any
    converged: bool


def _context(problem, counts, posterior, beta) -> BoundContext:
    q = exact_quantities(problem, None, posterior, counts=counts)
    return BoundContext(n=int(counts.sum()), beta=beta, kl=q.kl, emp_risk=_emp_for_bound(problem, q.emp_risk))


def alternating_optimize(problem: DiscreteProblem, sample, bound_id: str = "fast-rate-simple",
                         beta: float = 0.05, max_iters: int = 100, tol: float = 1e-10) -> AlternatingResult:
    """Alternate between the Gibbs posterior for the current parameter and the best parameter.

    For ``catoni-uniform`` the parameter is lambda and the Gibbs temperature
    is lambda.  For ``fast-rate-simple`` the parameter is gamma and the
    temperature is n ln(gamma / (gamma - 1)).  Both steps minimize the same
    objective, so the trace of bound values never increases.
    """
    if bound_id not in ("catoni-uniform", "fast-rate-simple"):
        raise DomainError("alternating optimization supports catoni-uniform and fast-rate-simple")
    if not problem.unit_loss:
        raise DomainError("alternating optimization needs losses in [0, 1]")
    counts = np.bincount(np.asarray(sample, dtype=np.int64), minlength=problem.probs.size)
    n = int(counts.sum())
    emp_vec = empirical_risks(problem, counts)
    catoni = bound_id == "catoni-uniform"

    def objective(ctx, param):
        if catoni:
            return float(bounded.catoni_objective(param, ctx.emp_risk, ctx.budget_xi, n))
        if param == bounded.GAMMA_FLOOR and ctx.emp_risk == 0:
            return param * ctx.budget_xi
        return float(bounded.fast_rate_objective(param, ctx.emp_risk, ctx.budget_xi))

    def best_param(ctx, current):
        if catoni:
            cert = bounded.catoni_uniform(ctx)
            lam, value = cert.params["lambda"], cert.params["unclamped"]
        else:
            lam = bounded.optimal_gamma(ctx.emp_risk, ctx.budget_xi)
            value = bounded.fast_rate_simple(ctx).params["unclamped"]
        if current is not None and objective(ctx, current) < value:
            return current, objective(ctx, current)
        return lam, value

    def temperature(param):
        if catoni:
            return param
        return n * math.log(param / (param - 1.0)) if math.isfinite(param) else 0.0

    posterior = problem.prior.copy()
    ctx = _context(problem, counts, posterior, beta)
    param, value = best_param(ctx, None)
    trace = [value]
    converged = False
    for _ in range(max_iters):
        posterior = Gibbs(temperature(param)).posterior(problem, emp_vec, n)
        ctx = _context(problem, counts, posterior, beta)
        param, value = best_param(ctx, param)
        trace.append(value)
        if trace[-2] - trace[-1] < tol:
            converged = True
            break
    cert = registry.evaluate(bound_id, ctx)
    return AlternatingResult(posterior=posterior, parameter=float(param), trace=tuple(trace),
                             certificate=cert, converged=converged)


def mcallester_posterior(problem: DiscreteProblem, sample, beta: float = 0.05) -> np.ndarray:
    """Gibbs posterior whose temperature minimizes the McAllester certificate."""
    counts = np.bincount(np.asarray(sample, dtype=np.int64), minlength=problem.probs.size)
    n = int(counts.sum())
    emp_vec = empirical_risks(problem, counts)

    def value(lam):
        post = Gibbs(lam).posterior(problem, emp_vec, n)
        return bounded.mcallester(_context(problem, counts, post, beta)).params["unclamped"]

    lam, best = minimize_scalar(value, 1e-3, 1e3 * n)
    if value(0.0) <= best:
        lam = 0.0
    return Gibbs(lam).posterior(problem, emp_vec, n)
