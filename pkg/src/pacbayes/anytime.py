"""Anytime-valid certificates via a union bound over sample sizes.

A fixed-n bound valid with probability 1 - beta_n at each n is valid for all
n simultaneously with probability 1 - sum beta_n.  Bounds built on Maurer's
concentration constant have a cheaper route: replacing xi(n) by
sqrt(pi (n + 1)) makes them time-uniform directly
(:func:`seeger_anytime_substitution`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from pacbayes.context import BoundContext, Certificate
from pacbayes.specfun import DomainError

__all__ = [
    "LOG_SQUARED_NORMALIZER",
    "BetaSchedule",
    "basel",
    "log_squared",
    "custom",
    "beta_at",
    "log_inv_beta_at",
    "log_squared_normalizer",
    "make_anytime",
    "seeger_anytime_substitution",
]

# Z = sum_{n>=1} 1 / (n ln^2(6n)), bounded above by the partial sum to 1e8
# plus the integral tail 1 / ln(6e8); see log_squared_normalizer.
LOG_SQUARED_NORMALIZER = 0.7602276227424225


def log_squared_normalizer(n_terms: int = 10**8, chunk: int = 10**7) -> float:
    """Upper bound on sum_{n>=1} 1/(n ln^2(6n)).

    Partial sum over n <= n_terms plus the tail integral
    int_{n_terms}^inf dx / (x ln^2(6x)) = 1 / ln(6 n_terms), which dominates
    the remaining terms because the summand is decreasing.
    """
    parts = []
    for start in range(1, n_terms + 1, chunk):
        k = np.arange(start, min(start + chunk, n_terms + 1), dtype=float)
        parts.append(float(np.sum(1.0 / (k * np.log(6.0 * k) ** 2))))
    return math.fsum(parts) + 1.0 / math.log(6.0 * n_terms)


@dataclass(frozen=True)
class BetaSchedule:
    """Split of the total confidence ``total_beta`` across sample sizes.

    ``rule`` is ``"basel"`` (6 beta / (pi^2 n^2)), ``"log-squared"``
    (beta / (Z n ln^2(6n))) or ``"custom"`` (``weights[n-1] * beta``, weights
    summing to at most 1).
    """

    rule: str
    total_beta: float
    weights: tuple = field(default=(), repr=False)

    def __post_init__(self):
        if not 0.0 < self.total_beta < 1.0:
            raise DomainError("total_beta must lie in (0, 1)")
        if self.rule not in ("basel", "log-squared", "custom"):
            raise DomainError(f"unknown schedule {self.rule!r}")
        if self.rule == "custom":
            w = np.asarray(self.weights, dtype=float)
            if w.size == 0 or np.any(w < 0) or math.fsum(w) > 1.0 + 1e-12:
                raise DomainError("custom weights must be non-negative and sum to at most 1")


def basel(total_beta: float) -> BetaSchedule:
    return BetaSchedule("basel", total_beta)


def log_squared(total_beta: float) -> BetaSchedule:
    return BetaSchedule("log-squared", total_beta)


def custom(weights: Sequence[float], total_beta: float) -> BetaSchedule:
    return BetaSchedule("custom", total_beta, tuple(float(w) for w in weights))


def log_inv_beta_at(schedule: BetaSchedule, n: int) -> float:
    """ln(1 / beta_n), computed without forming beta_n."""
    if n < 1 or int(n) != n:
        raise DomainError("n must be a positive integer")
    base = -math.log(schedule.total_beta)
    if schedule.rule == "basel":
        return base + math.log(math.pi**2 / 6.0) + 2.0 * math.log(n)
    if schedule.rule == "log-squared":
        return base + math.log(LOG_SQUARED_NORMALIZER) + math.log(n) + 2.0 * math.log(math.log(6.0 * n))
    if n > len(schedule.weights):
        raise DomainError(f"custom schedule has no weight for n={n}")
    w = schedule.weights[n - 1]
    return math.inf if w == 0 else base - math.log(w)


def beta_at(schedule: BetaSchedule, n: int) -> float:
    """Confidence assigned to sample size n."""
    return math.exp(-log_inv_beta_at(schedule, n))


def make_anytime(bound: Callable[[int, float], Certificate], schedule: BetaSchedule,
                 horizon: int) -> list[Certificate]:
    """Evaluate ``bound(n, beta_n)`` for n = 1..horizon.

    The returned certificates hold simultaneously with probability at least
    1 - total_beta.
    """
    if horizon < 1:
        raise DomainError("horizon must be at least 1")
    out = []
    for n in range(1, horizon + 1):
        try:
            out.append(bound(n, beta_at(schedule, n)))
        except Exception as exc:
            raise type(exc)(f"bound failed at n={n}: {exc}") from exc
    return out


def seeger_anytime_substitution(ctx: BoundContext) -> BoundContext:
    """Replace ln xi(n) by ln sqrt(pi (n + 1)) so the bounds hold for all n at once."""
    return ctx.replace(log_xi=0.5 * math.log(math.pi * (ctx.n + 1)))
