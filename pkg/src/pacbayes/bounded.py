"""Certificates for losses in [0, 1].

Every evaluator takes a :class:`~pacbayes.context.BoundContext` and returns a
:class:`~pacbayes.context.Certificate`.  Two budgets recur:

* ``ctx.budget_xi`` = (kl + ln(xi(n)/beta)) / n, used by all bounds that
  hold uniformly over their free parameter;
* ``ctx.budget`` = (kl + ln(1/beta)) / n, used by Catoni's fixed-lambda bound.

Values are clamped to [0, 1]; the unclamped number is kept in
``params["unclamped"]`` and ``informative`` is False when it reaches 1.
"""

from __future__ import annotations

import math

import numpy as np

from pacbayes.context import BoundContext, Certificate
from pacbayes.specfun import (
    DomainError,
    chatzigeorgiou_gap,
    kl_inverse_upper,
    lambert_w_m1_gap,
    minimize_scalar,
)

__all__ = [
    "GAMMA_FLOOR",
    "kappa",
    "optimal_gamma",
    "fast_rate_objective",
    "fast_rate_strong_objective",
    "mixed_rate_objective",
    "thiemann_objective",
    "catoni_objective",
    "mcallester",
    "seeger_langford",
    "catoni_fixed",
    "catoni_uniform",
    "fast_rate_strong",
    "fast_rate_simple",
    "mixed_rate",
    "thiemann",
    "rivasplata",
    "f_fr",
    "f_mr",
    "f_th",
    "dominance_check",
]

# gamma -> 1+ guard used in the realizable case
GAMMA_FLOOR = 1.0 + 1e-8
CATONI_LAMBDA_LO = 1e-3
CATONI_LAMBDA_HI_PER_N = 1e3
C_GRID_LO = 1e-15
C_GRID_POINTS = 512


def _check(ctx: BoundContext) -> None:
    if not 0.0 <= ctx.emp_risk <= 1.0:
        raise DomainError("bounded-loss certificates need emp_risk in [0, 1]")


def _certificate(ctx: BoundContext, bound_id: str, value: float, **params) -> Certificate:
    value = float(value)
    params = {k: float(v) for k, v in params.items()}
    params["unclamped"] = value
    informative = value < 1.0
    return Certificate(
        value=min(max(value, 0.0), 1.0),
        bound_id=bound_id,
        params=params,
        informative=informative,
        beta=ctx.beta,
        n=ctx.n,
    )


def kappa(c):
    """kappa(c) = 1 - c (1 - ln c), the offset left by the envelope of 1 - e^{-x}."""
    c = np.asarray(c, dtype=float)
    out = 1.0 - c * (1.0 - np.log(c))
    return float(out) if out.ndim == 0 else out


# -- objectives (exposed for tests and coefficient extraction) ---------------

def catoni_objective(lam, emp_risk: float, budget: float, n: int):
    """(1 - exp(-lam r/n - budget)) / (1 - exp(-lam/n))."""
    lam = np.asarray(lam, dtype=float)
    return -np.expm1(-lam * emp_risk / n - budget) / -np.expm1(-lam / n)


def fast_rate_strong_objective(gamma, c, emp_risk: float, budget: float):
    """c gamma ln(gamma/(gamma-1)) r + c gamma budget + kappa(c) gamma."""
    gamma = np.asarray(gamma, dtype=float)
    c = np.asarray(c, dtype=float)
    # gamma ln(gamma/(gamma-1)) = -gamma log1p(-1/gamma), accurate for large gamma
    risk_term = 0.0 if emp_risk == 0 else -c * gamma * np.log1p(-1.0 / gamma) * emp_risk
    return risk_term + c * gamma * budget + kappa(c) * gamma


def fast_rate_objective(gamma, emp_risk: float, budget: float):
    """gamma ln(gamma/(gamma-1)) r + gamma budget."""
    return fast_rate_strong_objective(gamma, 1.0, emp_risk, budget)


def mixed_rate_objective(gamma, emp_risk: float, budget: float):
    """(2 gamma - 1) / (2 (gamma - 1)) r + gamma budget."""
    gamma = np.asarray(gamma, dtype=float)
    return 0.5 * (2.0 * gamma - 1.0) / (gamma - 1.0) * emp_risk + gamma * budget


def thiemann_objective(lam, emp_risk: float, budget: float):
    """r / (1 - lam/2) + budget / (lam (1 - lam/2))."""
    lam = np.asarray(lam, dtype=float)
    h = 1.0 - 0.5 * lam
    with np.errstate(divide="ignore"):
        return emp_risk / h + budget / (lam * h)


# -- optimal gamma -------------------------------------------------------------

def _gamma_ratio(emp_risk, budget, c):
    """A = (c budget + kappa(c)) / (c r), the argument of the gamma equation."""
    return (c * budget + kappa(c)) / (c * emp_risk)


def optimal_gamma(emp_risk: float, budget: float, c: float = 1.0, approximate: bool = False) -> float:
    """Minimizer over gamma > 1 of the fast-rate objective at fixed c.

    gamma = 1 + 1/t where t = -1 - W_{-1}(-exp(-1 - A)).  With
    ``approximate=True`` t is replaced by the closed form sqrt(2A) + 5A/6.
    For ``emp_risk == 0`` the infimum is approached as gamma -> 1+ and
    :data:`GAMMA_FLOOR` is returned.
    """
    if not 0.0 < c <= 1.0:
        raise DomainError("c must lie in (0, 1]")
    if budget < 0 or emp_risk < 0:
        raise DomainError("emp_risk and budget must be non-negative")
    if emp_risk == 0:
        return GAMMA_FLOOR
    with np.errstate(over="ignore"):
        a = float(_gamma_ratio(emp_risk, budget, c))
    if a == 0:
        return math.inf
    t = chatzigeorgiou_gap(a) if approximate else lambert_w_m1_gap(a)
    return max(1.0 + 1.0 / t, GAMMA_FLOOR)


def _fast_rate_min_over_gamma(c, emp_risk: float, budget: float):
    """Closed-form infimum over gamma of the strong objective, vectorized in c.

    At the stationary point ln(gamma/(gamma-1)) = 1/(gamma-1) - A, which
    collapses the objective to c r (1 + t).  Using t = A + log1p(t) this is
    written as c r + (c budget + kappa) + c r log1p(t), which stays finite
    when A overflows for tiny r.
    """
    c = np.asarray(c, dtype=float)
    offset = c * budget + kappa(c)
    if emp_risk == 0:
        return GAMMA_FLOOR * offset
    cr = c * emp_risk
    with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
        a = offset / cr
        t = np.asarray(lambert_w_m1_gap(a))
        # log1p(t) ~ ln A once A is out of range
        log_term = np.where(np.isfinite(t), np.log1p(t), np.log(offset) - np.log(cr))
        risk_part = np.where(cr > 0, cr * log_term, 0.0)
    return cr + offset + risk_part


# -- certificates ----------------------------------------------------------------

def mcallester(ctx: BoundContext) -> Certificate:
    """emp_risk + sqrt((kl + ln(xi(n)/beta)) / (2n))."""
    _check(ctx)
    return _certificate(ctx, "mcallester", ctx.emp_risk + math.sqrt(0.5 * ctx.budget_xi))


def seeger_langford(ctx: BoundContext) -> Certificate:
    """Largest q with binary_kl(emp_risk, q) <= (kl + ln(xi(n)/beta)) / n."""
    _check(ctx)
    return _certificate(ctx, "seeger-langford", kl_inverse_upper(ctx.emp_risk, ctx.budget_xi))


def catoni_fixed(ctx: BoundContext, lam: float, use_xi: bool = False) -> Certificate:
    """Catoni's bound at a parameter fixed before seeing the data.

    The confidence term is ln(1/beta); ``use_xi=True`` switches to
    ln(xi(n)/beta) so the value can be compared with :func:`catoni_uniform`.
    """
    _check(ctx)
    if not lam > 0:
        raise DomainError("lambda must be positive")
    budget = ctx.budget_xi if use_xi else ctx.budget
    value = catoni_objective(lam, ctx.emp_risk, budget, ctx.n)
    return _certificate(ctx, "catoni-fixed", value, **{"lambda": lam})


def catoni_uniform(ctx: BoundContext) -> Certificate:
    """Catoni's bound optimized over lambda, valid for all lambda at once."""
    _check(ctx)
    r, b, n = ctx.emp_risk, ctx.budget_xi, ctx.n
    lam, value = minimize_scalar(
        lambda lam: catoni_objective(lam, r, b, n),
        CATONI_LAMBDA_LO, CATONI_LAMBDA_HI_PER_N * n, vectorized=True,
    )
    return _certificate(ctx, "catoni-uniform", value, **{"lambda": lam})


def fast_rate_strong(ctx: BoundContext) -> Certificate:
    """Fast-rate bound with the kappa(c) offset, optimized over gamma and c.

    gamma is eliminated in closed form; c is searched on a log grid followed
    by golden-section refinement.
    """
    _check(ctx)
    r, b = ctx.emp_risk, ctx.budget_xi
    c, value = minimize_scalar(
        lambda c: _fast_rate_min_over_gamma(c, r, b),
        C_GRID_LO, 1.0, n_grid=C_GRID_POINTS, vectorized=True,
    )
    gamma = optimal_gamma(r, b, c)
    return _certificate(ctx, "fast-rate-strong", value, gamma=gamma, c=c)


def fast_rate_simple(ctx: BoundContext) -> Certificate:
    """inf over gamma > 1 of gamma ln(gamma/(gamma-1)) r + gamma budget_xi."""
    _check(ctx)
    r, b = ctx.emp_risk, ctx.budget_xi
    gamma = optimal_gamma(r, b, 1.0)
    value = float(_fast_rate_min_over_gamma(1.0, r, b))
    return _certificate(ctx, "fast-rate-simple", value, gamma=gamma)


def mixed_rate(ctx: BoundContext) -> Certificate:
    """emp_risk + budget_xi + sqrt(2 emp_risk budget_xi)."""
    _check(ctx)
    r, b = ctx.emp_risk, ctx.budget_xi
    gamma = math.inf if b == 0 else 1.0 + math.sqrt(r / (2.0 * b))
    return _certificate(ctx, "mixed-rate", r + b + math.sqrt(2.0 * r * b), gamma=gamma)


def thiemann(ctx: BoundContext) -> Certificate:
    """Thiemann et al.'s fast-rate bound, optimized over lambda in (0, 2)."""
    _check(ctx)
    r, b = ctx.emp_risk, ctx.budget_xi
    lam, value = minimize_scalar(
        lambda lam: thiemann_objective(lam, r, b), 1e-12, 2.0 - 1e-12, vectorized=True,
    )
    return _certificate(ctx, "thiemann", value, **{"lambda": lam})


def rivasplata(ctx: BoundContext) -> Certificate:
    """emp_risk + budget_xi + sqrt(2 emp_risk budget_xi + budget_xi^2)."""
    _check(ctx)
    r, b = ctx.emp_risk, ctx.budget_xi
    return _certificate(ctx, "rivasplata", r + b + math.sqrt(2.0 * r * b + b * b))


# -- dominance functions ---------------------------------------------------------
# Two-argument forms f(r, c) with the optimization over gamma restricted to
# gamma >= 2, the image of lambda in (0, 2) under gamma = 1/(lambda(1-lambda/2)).

def f_fr(r: float, c: float) -> float:
    """inf over gamma >= 2 of gamma ln(gamma/(gamma-1)) r + gamma c."""
    if r == 0:
        return 2.0 * c
    if c == 0:
        return r
    gamma = max(2.0, 1.0 + 1.0 / lambert_w_m1_gap(c / r))
    return float(fast_rate_objective(gamma, r, c))


def f_mr(r: float, c: float) -> float:
    """inf over gamma >= 2 of (2 gamma - 1)/(2(gamma - 1)) r + gamma c."""
    if r == 0:
        return 2.0 * c
    if c == 0:
        return r
    if r >= 2.0 * c:
        # interior optimum gamma = 1 + sqrt(r / 2c), written without gamma
        return r + c + math.sqrt(2.0 * r * c)
    return float(mixed_rate_objective(2.0, r, c))


def f_th(r: float, c: float) -> float:
    """inf over lambda in (0, 2) of r/(1 - lambda/2) + c/(lambda(1 - lambda/2))."""
    if c == 0:
        return r
    # the objective is (r lam + c) / (lam - lam^2/2); its stationary point
    # solves r lam^2 + 2 c lam - 2 c = 0
    lam = 2.0 * math.sqrt(c) / (math.sqrt(c) + math.sqrt(c + 2.0 * r))
    return float(thiemann_objective(lam, r, c))


def dominance_check(grid) -> dict:
    """Evaluate f_fr, f_mr and f_th on (r, c) pairs and report violations.

    Returns a dict with the largest excess ``max(f_fr - f_th, f_mr - f_th)``
    and the list of pairs where it exceeds 1e-12.
    """
    grid = list(grid)
    worst = -math.inf
    violations = []
    for r, c in grid:
        th = f_th(r, c)
        excess = max(f_fr(r, c) - th, f_mr(r, c) - th)
        worst = max(worst, excess)
        if excess > 1e-12:
            violations.append((r, c, excess))
    return {"max_excess": worst, "violations": violations, "points": len(grid)}
