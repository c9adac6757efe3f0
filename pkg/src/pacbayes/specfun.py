"""Scalar special functions and the 1-D optimizer used by every bound.

All logarithms are natural; divergences are in nats.  ``binary_kl`` and
``kl_inverse_upper`` broadcast over numpy arrays and return plain floats for
scalar input, which keeps the Monte-Carlo harness vectorizable without a
second code path.
"""

from __future__ import annotations

import math
import warnings
from typing import Callable

import numpy as np
from scipy.special import gammaln, xlogy

__all__ = [
    "DomainError",
    "NumericalError",
    "binary_kl",
    "kl_inverse_upper",
    "lambert_w_m1",
    "lambert_w_m1_gap",
    "chatzigeorgiou_gap",
    "xi_maurer",
    "exp_envelope",
    "minimize_scalar",
]

INV_E = math.exp(-1.0)
GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
XI_EXACT_MAX_N = 10**7


class DomainError(ValueError):
    """Argument outside the mathematical domain of a function."""


class NumericalError(ArithmeticError):
    """A numerical routine could not produce a trustworthy result."""


def _scalar_or_array(x):
    return float(x) if np.ndim(x) == 0 else x


def binary_kl(p, q):
    """Relative entropy between Bernoulli(p) and Bernoulli(q), in nats.

    Uses 0 log 0 = 0 and returns ``inf`` when q sits on {0, 1} with p != q.
    """
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = xlogy(p, p) - xlogy(p, q) + xlogy(1.0 - p, 1.0 - p) - xlogy(1.0 - p, 1.0 - q)
    out = np.where(p == q, 0.0, out)
    # xlogy(p, 0) = -inf whenever p > 0, so the formula already yields +inf
    # at the boundary; nan can only appear from inf - inf, which is +inf here.
    out = np.where(np.isnan(out), np.inf, out)
    return _scalar_or_array(np.maximum(out, 0.0))


def _kl_scalar(p: float, q: float) -> float:
    if p == q:
        return 0.0
    if q <= 0.0 or q >= 1.0:
        return math.inf
    out = 0.0
    if p > 0:
        out += p * math.log(p / q)
    if p < 1:
        out += (1.0 - p) * math.log((1.0 - p) / (1.0 - q))
    return max(out, 0.0)


def _kl_inverse_scalar(p: float, c: float, tol: float, max_iter: int) -> float:
    """Scalar twin of :func:`kl_inverse_upper`."""
    if not c >= 0:
        raise DomainError("kl budget must be non-negative")
    if not 0.0 <= p <= 1.0:
        raise DomainError("p_hat must lie in [0, 1]")
    if c == 0:
        return p
    if p >= 1.0 or _kl_scalar(p, math.nextafter(1.0, 0.0)) <= c:
        return 1.0
    lo, hi = p, 1.0
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if not lo < mid < hi or hi - lo <= tol:
            break
        if _kl_scalar(p, mid) > c:
            hi = mid
        else:
            lo = mid
    return hi


def kl_inverse_upper(p_hat, c, tol: float = 0.0, max_iter: int = 200):
    """Largest q in [p_hat, 1] with ``binary_kl(p_hat, q) <= c``.

    Bisection on q, which is valid because d(p||.) is strictly increasing on
    [p, 1).  With the default ``tol=0`` the bracket is shrunk to adjacent
    floats (at most ``max_iter`` halvings); the upper end of the bracket is
    returned so the certificate errs on the safe side.
    """
    if np.ndim(p_hat) == 0 and np.ndim(c) == 0:
        return _kl_inverse_scalar(float(p_hat), float(c), tol, max_iter)
    p = np.asarray(p_hat, dtype=float)
    c = np.asarray(c, dtype=float)
    if np.any(c < 0) or np.any(np.isnan(c)):
        raise DomainError("kl budget must be non-negative")
    if np.any((p < 0) | (p > 1)):
        raise DomainError("p_hat must lie in [0, 1]")
    p, c = np.broadcast_arrays(p, c)
    lo = p.copy()
    hi = np.ones_like(p)
    top = np.nextafter(1.0, 0.0)
    saturated = (p >= 1.0) | (binary_kl(p, np.full_like(p, top)) <= c)
    hi = np.where(c == 0, p, hi)
    active = ~saturated & (c > 0)
    for _ in range(max_iter):
        if not active.any():
            break
        mid = 0.5 * (lo + hi)
        over = binary_kl(p, mid) > c
        hi = np.where(active & over, mid, hi)
        lo = np.where(active & ~over, mid, lo)
        mid_next = 0.5 * (lo + hi)
        active &= (hi - lo > tol) & (mid_next > lo) & (mid_next < hi)
    out = np.where(saturated, 1.0, hi)
    return _scalar_or_array(out)


def _t_minus_log1p(t):
    """t - log(1 + t) without cancellation for small t."""
    t = np.asarray(t, dtype=float)
    small = np.abs(t) < 1e-3
    ts = np.where(small, t, 0.0)
    series = ts**2 * (0.5 - ts * (1.0 / 3.0 - ts * (0.25 - ts * (0.2 - ts / 6.0))))
    with np.errstate(invalid="ignore"):
        direct = t - np.log1p(np.where(small, 0.0, t))
    return np.where(small, series, direct)


def chatzigeorgiou_gap(a):
    """Closed-form approximation of -1 - W_{-1}(-exp(-1 - a)).

    sqrt(2a) + 5a/6 sits midway between Chatzigeorgiou's two bounds on the
    lower branch and is the approximation quoted for the optimal fast-rate
    parameter.
    """
    a = np.asarray(a, dtype=float)
    return _scalar_or_array(np.sqrt(2.0 * a) + 5.0 * a / 6.0)


def _gap_scalar(a: float, max_iter: int) -> float:
    """Scalar twin of :func:`lambert_w_m1_gap`; same iteration, no numpy overhead."""
    if not a >= 0:
        raise DomainError("gap argument must be non-negative")
    if a == 0 or math.isinf(a):
        return a
    t = math.sqrt(2.0 * a) + 5.0 * a / 6.0
    for _ in range(max_iter):
        if abs(t) < 1e-3:
            g = t * t * (0.5 - t * (1.0 / 3.0 - t * (0.25 - t * (0.2 - t / 6.0)))) - a
        else:
            g = t - math.log1p(t) - a
        if abs(g) <= 1e-12 * a + 1e-300:
            break
        g1 = t / (1.0 + t)
        g2 = (1.0 / (1.0 + t)) ** 2
        t = max(t - 2.0 * g * g1 / (2.0 * g1 * g1 - g * g2), 0.5 * t)
    return t


def lambert_w_m1_gap(a, max_iter: int = 50):
    """Return t = -1 - W_{-1}(-exp(-1 - a)) for a >= 0.

    Solves t - log(1 + t) = a by Halley's method, starting from the
    Chatzigeorgiou approximation.  Working with ``a`` instead of
    ``-exp(-1 - a)`` keeps full precision both near the branch point
    (a -> 0) and far into the tail where the exponential underflows.
    """
    if np.ndim(a) == 0:
        return _gap_scalar(float(a), max_iter)
    a = np.asarray(a, dtype=float)
    if np.any(a < 0) or np.any(np.isnan(a)):
        raise DomainError("gap argument must be non-negative")
    t = np.asarray(chatzigeorgiou_gap(a), dtype=float)
    finite = np.isfinite(a) & (a > 0)
    for _ in range(max_iter):
        with np.errstate(divide="ignore", invalid="ignore"):
            g = _t_minus_log1p(t) - a
            g1 = t / (1.0 + t)
            g2 = (1.0 / (1.0 + t)) ** 2
            step = 2.0 * g * g1 / (2.0 * g1 * g1 - g * g2)
        step = np.where(finite, step, 0.0)
        t_new = np.maximum(t - step, 0.5 * t)
        done = np.abs(g) <= 1e-12 * np.maximum(a, 1e-300) + 1e-300
        t = np.where(done | ~finite, t, t_new)
        if np.all(done | ~finite):
            break
    t = np.where(a == 0, 0.0, t)
    return _scalar_or_array(t)


def lambert_w_m1(x):
    """Lower real branch W_{-1} of the Lambert function on [-1/e, 0).

    The equation w e^w = x is rewritten as t - log(1 + t) = -1 - log(-x)
    with w = -1 - t; see :func:`lambert_w_m1_gap`.
    """
    xa = np.asarray(x, dtype=float)
    if np.any(xa >= 0) or np.any(xa < -INV_E * (1 + 4 * np.finfo(float).eps)) or np.any(np.isnan(xa)):
        raise DomainError("W_{-1} is real only on [-1/e, 0)")
    a = np.maximum(-1.0 - np.log(-xa), 0.0)
    return _scalar_or_array(-1.0 - np.asarray(lambert_w_m1_gap(a)))


def xi_maurer(n: int, mode: str = "bound") -> float:
    """Maurer's constant xi(n) or its upper bound.

    ``mode="exact"`` evaluates sum_k C(n,k) (k/n)^k ((n-k)/n)^(n-k) in log
    space; ``mode="bound"`` returns 2 sqrt(n) for n = 1 and
    min(2 sqrt(n), 2 + sqrt(2n)) otherwise.
    """
    if n < 1 or int(n) != n:
        raise DomainError("n must be a positive integer")
    n = int(n)
    if mode == "bound":
        if n == 1:
            return 2.0
        return min(2.0 * math.sqrt(n), 2.0 + math.sqrt(2.0 * n))
    if mode != "exact":
        raise DomainError(f"unknown xi mode {mode!r}")
    if n > XI_EXACT_MAX_N:
        warnings.warn(f"exact xi({n}) is too expensive; using the upper bound", RuntimeWarning)
        return xi_maurer(n, "bound")
    k = np.arange(n + 1, dtype=float)
    logs = (
        gammaln(n + 1.0) - gammaln(k + 1.0) - gammaln(n - k + 1.0)
        + xlogy(k, k / n) + xlogy(n - k, (n - k) / n)
    )
    top = logs.max()
    return float(math.exp(top) * math.fsum(np.exp(logs - top)))


def exp_envelope(x, a):
    """Tangent line of 1 - exp(-x) at x = a; dominates it for every a > 0."""
    x = np.asarray(x, dtype=float)
    a = np.asarray(a, dtype=float)
    return _scalar_or_array(np.exp(-a) * x + 1.0 - np.exp(-a) * (1.0 + a))


def minimize_scalar(
    f: Callable,
    lo: float,
    hi: float,
    tol: float = 1e-10,
    n_grid: int = 256,
    log_grid: bool | None = None,
    vectorized: bool = False,
) -> tuple[float, float]:
    """Grid scan followed by golden-section refinement of the best bracket.

    The scan (log-spaced when ``lo > 0`` unless ``log_grid`` says otherwise)
    protects against non-convex objectives; golden section then refines the
    two cells around the best grid point until the bracket is narrower than
    ``tol`` (relative for log grids, absolute otherwise).  Ties go to the
    smallest argument.

    Returns ``(argmin, min)``.
    """
    if not lo < hi:
        raise DomainError("minimize_scalar needs lo < hi")
    if n_grid < 3:
        raise ValueError("n_grid must be at least 3")
    if log_grid is None:
        log_grid = lo > 0
    if log_grid and lo <= 0:
        raise DomainError("log grid requires lo > 0")

    if log_grid:
        to_x, u_lo, u_hi = np.exp, math.log(lo), math.log(hi)
    else:
        to_x, u_lo, u_hi = (lambda u: u), lo, hi
    grid_u = np.linspace(u_lo, u_hi, n_grid)
    grid_x = np.asarray(to_x(grid_u), dtype=float)
    grid_x[0], grid_x[-1] = lo, hi
    if vectorized:
        vals = np.asarray(f(grid_x), dtype=float)
    else:
        vals = np.array([f(float(x)) for x in grid_x], dtype=float)
    finite = np.isfinite(vals)
    if finite.sum() * 2 < n_grid:
        raise NumericalError("objective is non-finite on more than half of the grid")
    vals = np.where(finite, vals, np.inf)
    i = int(np.argmin(vals))
    best_x, best_f = float(grid_x[i]), float(vals[i])

    def fu(u: float) -> float:
        x = float(to_x(u))
        x = min(max(x, lo), hi)
        v = float(np.asarray(f(x), dtype=float).reshape(-1)[0]) if vectorized else float(f(x))
        return v if math.isfinite(v) else math.inf

    a = grid_u[max(i - 1, 0)]
    b = grid_u[min(i + 1, n_grid - 1)]
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc, fd = fu(c), fu(d)
    for _ in range(200):
        if b - a <= tol:
            break
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = fu(c)
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = fu(d)
    for u, v in ((c, fc), (d, fd)):
        x = min(max(float(to_x(u)), lo), hi)
        if v < best_f or (v == best_f and x < best_x):
            best_x, best_f = x, v
    return best_x, best_f
