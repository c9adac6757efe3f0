"""Parameter-free certificates for losses with general tails.

Most bounds here have the shape

    emp_risk + psi_star_inverse(budget)      if the KL is below a cut-off,
    esssup of the posterior population risk  otherwise,

and differ only in how the union over the unknown KL level is paid for in
``budget``.  The esssup fallback is caller-supplied through
:class:`~pacbayes.context.EssSupInfo`; when it is unknown the certificate is
returned with ``value=inf`` and ``informative=False``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from pacbayes.context import BoundContext, Certificate, EssSupInfo
from pacbayes.specfun import DomainError, minimize_scalar
from pacbayes.tails import (
    BoundedRange,
    SubExponential,
    SubGamma,
    SubGaussian,
    psi,
    psi_star_inverse,
    subexponential_relaxed,
)

__all__ = [
    "SecondMomentContext",
    "MartingaleContext",
    "log_xi_prime",
    "chernoff_budget",
    "no_cutoff_budget",
    "linearized_budget",
    "loglog_budget",
    "cutoff_parametric",
    "cgf_fixed_lambda",
    "chernoff_analogue",
    "chernoff_parametric",
    "chernoff_tail_menu",
    "chernoff_no_cutoff",
    "chernoff_linearized",
    "chernoff_loglog",
    "second_moment_bound",
    "martingale_bound",
    "randomized_subsample_bound",
]

SECOND_MOMENT_COEF = 2.0 / math.sqrt(6.0)
UNKNOWN = EssSupInfo()


@dataclass(frozen=True)
class SecondMomentContext:
    """A bound context plus sigma_n^2 = mean of E[l(W,Z_i)^2 + 2 l(W,Z')^2 + 1]."""

    ctx: BoundContext
    sigma2_n: float

    def __post_init__(self):
        if not self.sigma2_n >= 1.0:
            raise DomainError("sigma2_n includes the +1 term and must be >= 1")


@dataclass(frozen=True)
class MartingaleContext:
    """Inputs of the martingale bound: posterior-averaged [M]_n and <M>_n."""

    n: int
    kl: float
    var_empirical: float
    var_predictable: float
    beta: float | None = None
    log_inv_beta: float | None = None

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise DomainError("n must be a positive integer")
        if self.log_inv_beta is None:
            if self.beta is None or not 0.0 < self.beta < 1.0:
                raise DomainError("beta must lie in (0, 1)")
            object.__setattr__(self, "log_inv_beta", -math.log(self.beta))
        elif self.beta is None:
            object.__setattr__(self, "beta", math.exp(-self.log_inv_beta))
        if min(self.kl, self.var_empirical, self.var_predictable) < 0:
            raise DomainError("kl and variance terms must be non-negative")

    @property
    def variance(self) -> float:
        return self.var_empirical + 2.0 * self.var_predictable + 1.0


def log_xi_prime(n: int) -> float:
    """ln(2 e n (n+1)^2 ln(e n)), evaluated term by term."""
    return math.log(2.0) + 1.0 + math.log(n) + 2.0 * math.log(n + 1.0) + math.log1p(math.log(n))


def cutoff_parametric(*dims: int, n: int) -> int:
    """KL cut-off ceil(ln(d1 d2 ... n)) suggested for parametric models."""
    return max(1, math.ceil(math.log(n) + sum(math.log(d) for d in dims)))


# -- budgets (nats per sample fed to psi_star_inverse) -----------------------

def chernoff_budget(ctx: BoundContext, k_max: int | None = None) -> float:
    """(kl + ln(e k_max / beta)) / n."""
    k = ctx.n if k_max is None else k_max
    return (ctx.kl + 1.0 + math.log(k) + ctx.log_inv_beta) / ctx.n


def no_cutoff_budget(ctx: BoundContext) -> float:
    """(kl + ln(e pi^2 (kl+1)^2 / (6 beta))) / n."""
    return (ctx.kl + 1.0 + math.log(math.pi**2 / 6.0) + 2.0 * math.log1p(ctx.kl) + ctx.log_inv_beta) / ctx.n


def linearized_budget(ctx: BoundContext) -> float:
    """(1.1 kl + ln(10 e pi^2 / beta)) / n."""
    return (1.1 * ctx.kl + math.log(10.0 * math.pi**2) + 1.0 + ctx.log_inv_beta) / ctx.n


def loglog_budget(ctx: BoundContext) -> float:
    """(e max(kl, 1) + ln((2 + ln n) / beta)) / n."""
    return (math.e * max(ctx.kl, 1.0) + math.log(2.0 + math.log(ctx.n)) + ctx.log_inv_beta) / ctx.n


def _cert(ctx, bound_id, value, informative=True, **params) -> Certificate:
    return Certificate(value=float(value), bound_id=bound_id,
                       params={k: float(v) for k, v in params.items()},
                       informative=bool(informative), beta=ctx.beta, n=ctx.n)


def _fallback(ctx, bound_id, esssup: EssSupInfo, **params) -> Certificate:
    return _cert(ctx, bound_id, esssup.value, informative=esssup.known, event=0.0, **params)


# -- bounds --------------------------------------------------------------------------

def cgf_fixed_lambda(ctx: BoundContext, family, lam: float) -> Certificate:
    """emp_risk + (budget + psi(lam)) / lam for a lambda chosen before the data."""
    if not 0.0 < lam < family.b_dom:
        raise DomainError(f"lambda must lie in (0, {family.b_dom})")
    value = ctx.emp_risk + (ctx.budget + psi(family, lam)) / lam
    return _cert(ctx, "cgf-fixed-lambda", value, **{"lambda": lam})


def chernoff_analogue(ctx: BoundContext, family, esssup: EssSupInfo = UNKNOWN,
                      k_max: int | None = None) -> Certificate:
    """emp_risk + psi*^{-1}((kl + ln(e k_max/beta))/n) when kl <= k_max, else esssup."""
    k = ctx.n if k_max is None else int(k_max)
    if k < 1:
        raise DomainError("k_max must be a positive integer")
    if ctx.kl > k:
        return _fallback(ctx, "chernoff", esssup, k_max=k)
    budget = chernoff_budget(ctx, k)
    value = ctx.emp_risk + psi_star_inverse(family, budget)
    return _cert(ctx, "chernoff", value, event=1.0, budget=budget, k_max=k)


def chernoff_parametric(ctx: BoundContext, family, k_max: int | None = None) -> float:
    """emp_risk + inf over lambda of [budget / lambda + psi(lambda) / lambda].

    The infimum is taken numerically; it must agree with the closed-form
    conjugate inverse used by :func:`chernoff_analogue`.
    """
    budget = chernoff_budget(ctx, k_max)
    hi = family.b_dom * (1 - 1e-9) if math.isfinite(family.b_dom) else 1e9
    _, gap = minimize_scalar(
        lambda lam: (budget + np.asarray(family.psi(lam), dtype=float)) / lam,
        min(1e-9, hi * 1e-9), hi, tol=1e-12, vectorized=True,
    )
    return ctx.emp_risk + gap


def chernoff_tail_menu(ctx: BoundContext, variant: str, esssup: EssSupInfo = UNKNOWN, *,
                       a: float = 0.0, b: float = 1.0, sigma2: float = 1.0, c: float = 1.0) -> Certificate:
    """Chernoff analogue specialised to the four standard tail families.

    ``bounded`` uses the lenient cut-off kl <= 2n, under which the bound
    is never worse than the range, so no esssup branch is needed.
    ``subexponential`` switches to the linear relaxation once the budget
    passes sigma2 / (2 c^2).
    """
    if variant == "bounded":
        BoundedRange(a, b)  # validates the range
        budget = chernoff_budget(ctx)
        value = ctx.emp_risk + math.sqrt((b - a) ** 2 * budget / 2.0)
        return _cert(ctx, "chernoff-bounded", value, budget=budget)
    if variant == "subgaussian":
        fam = SubGaussian(sigma2)
    elif variant == "subgamma":
        fam = SubGamma(sigma2, c)
    elif variant == "subexponential":
        fam = SubExponential(sigma2, c)
    else:
        raise DomainError(f"unknown tail variant {variant!r}")
    if ctx.kl > ctx.n:
        return _fallback(ctx, f"chernoff-{variant}", esssup)
    budget = chernoff_budget(ctx)
    if variant == "subexponential":
        inside = budget <= fam.threshold
        gap = float(subexponential_relaxed(fam, budget))
        return _cert(ctx, "chernoff-subexponential", ctx.emp_risk + gap, event=1.0,
                     budget=budget, inner_branch=float(inside))
    value = ctx.emp_risk + psi_star_inverse(fam, budget)
    return _cert(ctx, f"chernoff-{variant}", value, event=1.0, budget=budget)


def chernoff_no_cutoff(ctx: BoundContext, family) -> Certificate:
    """Chernoff analogue whose union over KL levels has no cut-off."""
    budget = no_cutoff_budget(ctx)
    return _cert(ctx, "chernoff-no-cutoff", ctx.emp_risk + psi_star_inverse(family, budget), budget=budget)


def chernoff_linearized(ctx: BoundContext, family) -> Certificate:
    """Linear-in-kl relaxation of :func:`chernoff_no_cutoff`."""
    budget = linearized_budget(ctx)
    return _cert(ctx, "chernoff-linearized", ctx.emp_risk + psi_star_inverse(family, budget), budget=budget)


def chernoff_loglog(ctx: BoundContext, family, esssup: EssSupInfo = UNKNOWN) -> Certificate:
    """Chernoff analogue with a geometric KL grid: ln ln n union cost."""
    if ctx.kl > ctx.n:
        return _fallback(ctx, "chernoff-loglog", esssup)
    budget = loglog_budget(ctx)
    return _cert(ctx, "chernoff-loglog", ctx.emp_risk + psi_star_inverse(family, budget),
                 event=1.0, budget=budget)


def second_moment_bound(smc: SecondMomentContext, esssup: EssSupInfo = UNKNOWN,
                        k_max: int | None = None) -> Certificate:
    """Bound needing only the second moment of the loss.

    emp_risk + (2/sqrt 6) sqrt(sigma2_n (kl + ln(xi'(n)/beta)) / n) on the
    event sigma2_n kl <= k_max (default n), esssup otherwise.
    """
    ctx = smc.ctx
    k = ctx.n if k_max is None else int(k_max)
    if smc.sigma2_n * ctx.kl > k:
        return _fallback(ctx, "second-moment", esssup, sigma2_n=smc.sigma2_n)
    log_term = ctx.kl + log_xi_prime(k) + ctx.log_inv_beta
    value = ctx.emp_risk + SECOND_MOMENT_COEF * math.sqrt(smc.sigma2_n * log_term / ctx.n)
    return _cert(ctx, "second-moment", value, event=1.0, sigma2_n=smc.sigma2_n)


def martingale_bound(mc: MartingaleContext, esssup: EssSupInfo = UNKNOWN) -> Certificate:
    """Bound on |E M_n(W)| for a martingale with known variance processes.

    With V = [M]_n + 2 <M>_n + 1 the value is (2/sqrt 6) sqrt(V (kl + ln(xi'(n)/beta)))
    on the event V kl <= n^2.  It is not normalized by n.
    """
    v = mc.variance
    if v * mc.kl > float(mc.n) ** 2:
        return Certificate(value=esssup.value, bound_id="martingale", params={"event": 0.0, "variance": v},
                           informative=esssup.known, beta=mc.beta, n=mc.n)
    value = SECOND_MOMENT_COEF * math.sqrt(v * (mc.kl + log_xi_prime(mc.n) + mc.log_inv_beta))
    return Certificate(value=value, bound_id="martingale", params={"event": 1.0, "variance": v},
                       informative=True, beta=mc.beta, n=mc.n)


def randomized_subsample_bound(ctx: BoundContext, a: float = 0.0, b: float = 1.0) -> Certificate:
    """Bound against a prior that sees the supersample, for losses in [a, b].

    emp_risk + sqrt(2 (b-a)^2 (kl + ln(e n/beta)) / n) + sqrt((b-a)^2 ln(4/beta) / (2n)).
    """
    if not a < b:
        raise DomainError("range needs a < b")
    w2 = (b - a) ** 2
    first = math.sqrt(2.0 * w2 * (ctx.kl + 1.0 + math.log(ctx.n) + ctx.log_inv_beta) / ctx.n)
    second = math.sqrt(w2 * (math.log(4.0) + ctx.log_inv_beta) / (2.0 * ctx.n))
    return _cert(ctx, "randomized-subsample", ctx.emp_risk + first + second)
