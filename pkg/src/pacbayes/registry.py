"""Bound identifiers used by the CLI and the lab, mapped to evaluators.

Every entry is called as ``evaluate(bound_id, ctx, **extras)``; the extras a
bound needs (tail family, esssup, lambda, sigma2_n, loss range) are listed
in :data:`REQUIRES`.
"""

from __future__ import annotations

from pacbayes import bounded, general
from pacbayes.context import BoundContext, Certificate, EssSupInfo
from pacbayes.general import SecondMomentContext

__all__ = ["BOUNDED_IDS", "TAIL_IDS", "ALL_IDS", "REQUIRES", "evaluate"]

BOUNDED_IDS = (
    "mcallester",
    "seeger-langford",
    "catoni-fixed",
    "catoni-uniform",
    "fast-rate-strong",
    "fast-rate-simple",
    "mixed-rate",
    "thiemann",
    "rivasplata",
)

TAIL_IDS = (
    "chernoff",
    "chernoff-bounded",
    "chernoff-no-cutoff",
    "chernoff-linearized",
    "chernoff-loglog",
    "cgf-fixed-lambda",
    "second-moment",
    "randomized-subsample",
)

ALL_IDS = BOUNDED_IDS + TAIL_IDS

REQUIRES = {
    "catoni-fixed": ("lam",),
    "chernoff": ("family",),
    "chernoff-bounded": ("loss_range",),
    "chernoff-no-cutoff": ("family",),
    "chernoff-linearized": ("family",),
    "chernoff-loglog": ("family",),
    "cgf-fixed-lambda": ("family", "lam"),
    "second-moment": ("sigma2_n",),
    "randomized-subsample": ("loss_range",),
}

_BOUNDED = {
    "mcallester": bounded.mcallester,
    "seeger-langford": bounded.seeger_langford,
    "catoni-uniform": bounded.catoni_uniform,
    "fast-rate-strong": bounded.fast_rate_strong,
    "fast-rate-simple": bounded.fast_rate_simple,
    "mixed-rate": bounded.mixed_rate,
    "thiemann": bounded.thiemann,
    "rivasplata": bounded.rivasplata,
}


def evaluate(bound_id: str, ctx: BoundContext, *, family=None, esssup: EssSupInfo = general.UNKNOWN,
             lam: float | None = None, sigma2_n: float | None = None,
             loss_range: tuple[float, float] = (0.0, 1.0), k_max: int | None = None) -> Certificate:
    """Evaluate the bound named ``bound_id`` on ``ctx``."""
    if bound_id not in ALL_IDS:
        raise KeyError(f"unknown bound id {bound_id!r}")
    missing = [name for name in REQUIRES.get(bound_id, ())
               if {"family": family, "lam": lam, "sigma2_n": sigma2_n, "loss_range": loss_range}[name] is None]
    if missing:
        raise ValueError(f"bound {bound_id!r} needs {', '.join(missing)}")
    if bound_id in _BOUNDED:
        return _BOUNDED[bound_id](ctx)
    if bound_id == "catoni-fixed":
        return bounded.catoni_fixed(ctx, lam)
    if bound_id == "chernoff":
        return general.chernoff_analogue(ctx, family, esssup, k_max=k_max)
    if bound_id == "chernoff-bounded":
        a, b = loss_range
        return general.chernoff_tail_menu(ctx, "bounded", a=a, b=b)
    if bound_id == "chernoff-no-cutoff":
        return general.chernoff_no_cutoff(ctx, family)
    if bound_id == "chernoff-linearized":
        return general.chernoff_linearized(ctx, family)
    if bound_id == "chernoff-loglog":
        return general.chernoff_loglog(ctx, family, esssup)
    if bound_id == "cgf-fixed-lambda":
        return general.cgf_fixed_lambda(ctx, family, lam)
    if bound_id == "second-moment":
        return general.second_moment_bound(SecondMomentContext(ctx, sigma2_n), esssup, k_max=k_max)
    a, b = loss_range
    return general.randomized_subsample_bound(ctx, a, b)
