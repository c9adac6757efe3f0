"""Tail families: a convex bound psi on the CGF of -loss and the inverse of its conjugate.

``psi_star_inverse(family, y)`` turns a confidence budget ``y`` (nats per
sample) into an additive risk gap.  Closed forms are used where they exist;
:func:`psi_star_inverse_numeric` computes inf over lambda of (y + psi)/lambda
for any family and serves as the cross-check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from pacbayes.specfun import DomainError, NumericalError, minimize_scalar

__all__ = [
    "BoundedRange",
    "SubGaussian",
    "SubGamma",
    "SubExponential",
    "CustomCGF",
    "TailFamily",
    "psi",
    "psi_star_inverse",
    "psi_star_inverse_numeric",
    "subexponential_relaxed",
]

EDGE_SHRINK = 1e-9


@dataclass(frozen=True)
class BoundedRange:
    """Loss in [a, b]; Hoeffding gives psi(lam) = lam^2 (b-a)^2 / 8."""

    a: float
    b: float

    def __post_init__(self):
        if not self.a <= self.b:
            raise DomainError("BoundedRange needs a <= b")

    @property
    def b_dom(self) -> float:
        return math.inf

    def psi(self, lam):
        return lam * lam * (self.b - self.a) ** 2 / 8.0

    def psi_star_inverse(self, y):
        return (self.b - self.a) * np.sqrt(np.asarray(y, dtype=float) / 2.0)


@dataclass(frozen=True)
class SubGaussian:
    sigma2: float

    def __post_init__(self):
        if not self.sigma2 > 0:
            raise DomainError("sigma2 must be positive")

    @property
    def b_dom(self) -> float:
        return math.inf

    def psi(self, lam):
        return lam * lam * self.sigma2 / 2.0

    def psi_star_inverse(self, y):
        return np.sqrt(2.0 * self.sigma2 * np.asarray(y, dtype=float))


@dataclass(frozen=True)
class SubGamma:
    """psi(lam) = lam^2 sigma2 / (2 (1 - c lam)) on (0, 1/c)."""

    sigma2: float
    c: float

    def __post_init__(self):
        if not (self.sigma2 > 0 and self.c > 0):
            raise DomainError("sigma2 and c must be positive")

    @property
    def b_dom(self) -> float:
        return 1.0 / self.c

    def psi(self, lam):
        return lam * lam * self.sigma2 / (2.0 * (1.0 - self.c * lam))

    def psi_star_inverse(self, y):
        y = np.asarray(y, dtype=float)
        return np.sqrt(2.0 * self.sigma2 * y) + self.c * y


@dataclass(frozen=True)
class SubExponential:
    """psi(lam) = lam^2 sigma2 / 2, but only on (0, 1/c).

    Past y = sigma2 / (2 c^2) the unconstrained optimizer leaves the domain
    and the infimum sits at lam = 1/c, giving c y + sigma2 / (2c).
    """

    sigma2: float
    c: float

    def __post_init__(self):
        if not (self.sigma2 > 0 and self.c > 0):
            raise DomainError("sigma2 and c must be positive")

    @property
    def b_dom(self) -> float:
        return 1.0 / self.c

    @property
    def threshold(self) -> float:
        return self.sigma2 / (2.0 * self.c * self.c)

    def psi(self, lam):
        return lam * lam * self.sigma2 / 2.0

    def psi_star_inverse(self, y):
        y = np.asarray(y, dtype=float)
        inner = np.sqrt(2.0 * self.sigma2 * y)
        outer = self.c * y + self.sigma2 / (2.0 * self.c)
        return np.where(y <= self.threshold, inner, outer)


def subexponential_relaxed(family: SubExponential, y):
    """Linear relaxation (c+1) y used beyond the threshold.

    (c+1) y dominates c y + sigma2/(2c) only when c <= 1, so the exact value
    is taken when it is larger.
    """
    y = np.asarray(y, dtype=float)
    exact = family.psi_star_inverse(y)
    return np.where(y <= family.threshold, exact, np.maximum((family.c + 1.0) * y, exact))


@dataclass(frozen=True)
class CustomCGF:
    """User-supplied psi on [0, b_dom).

    The constructor spot-checks psi(0) = 0, psi'(0) = 0 (skipped for tables,
    see :meth:`from_table`) and that psi is non-decreasing and convex on a
    grid.
    """

    fn: Callable
    b_dom: float = math.inf
    check_slope: bool = True
    label: str = field(default="custom", compare=False)

    def __post_init__(self):
        if not self.b_dom > 0:
            raise DomainError("b_dom must be positive")
        if abs(float(self.fn(0.0))) > 1e-12:
            raise DomainError("custom psi must satisfy psi(0) = 0")
        top = self.b_dom * (1 - 1e-6) if math.isfinite(self.b_dom) else 10.0
        grid = np.linspace(0.0, top, 201)
        vals = np.array([float(self.fn(x)) for x in grid])
        if not np.all(np.isfinite(vals)):
            raise DomainError("custom psi is not finite on its domain")
        scale = max(1.0, float(np.abs(vals).max()))
        if np.any(np.diff(vals) < -1e-12 * scale):
            raise DomainError("custom psi must be non-decreasing")
        if np.any(np.diff(vals, 2) < -1e-9 * scale):
            raise DomainError("custom psi must be convex")
        if self.check_slope:
            h = 1e-6 * min(1.0, top)
            if float(self.fn(h)) / h > 1e-4:
                raise DomainError("custom psi must satisfy psi'(0) = 0")

    @classmethod
    def from_table(cls, lam, values, b_dom: float | None = None) -> "CustomCGF":
        """Piecewise-linear psi through sampled points.

        Chords of a convex function lie above it, so the interpolant still
        dominates the CGF; its slope at 0 is the first chord's, which makes
        the certificate slightly conservative rather than invalid.
        """
        lam = np.asarray(lam, dtype=float)
        values = np.asarray(values, dtype=float)
        if lam.ndim != 1 or lam.shape != values.shape or lam.size < 2:
            raise DomainError("table needs two equal-length columns with at least two rows")
        if lam[0] != 0.0 or values[0] != 0.0:
            raise DomainError("table must start at (0, 0)")
        if np.any(np.diff(lam) <= 0):
            raise DomainError("lambda column must be strictly increasing")
        dom = float(lam[-1]) if b_dom is None else float(b_dom)

        def fn(x):
            return np.interp(x, lam, values)

        return cls(fn=fn, b_dom=dom, check_slope=False, label="table")

    def psi(self, lam):
        return self.fn(lam)

    def psi_star_inverse(self, y):
        y = np.asarray(y, dtype=float)
        if y.ndim == 0:
            return psi_star_inverse_numeric(self.fn, self.b_dom, float(y))
        return np.array([psi_star_inverse_numeric(self.fn, self.b_dom, float(v)) for v in y.ravel()]).reshape(y.shape)


TailFamily = BoundedRange | SubGaussian | SubGamma | SubExponential | CustomCGF


def psi(family, lam: float) -> float:
    """Evaluate the CGF bound of ``family`` at ``lam``; raises outside [0, b_dom)."""
    if not 0.0 <= lam < family.b_dom:
        raise DomainError(f"lambda={lam} is outside [0, {family.b_dom})")
    return float(family.psi(lam))


def psi_star_inverse(family, y):
    """Closed-form (or numeric, for custom families) inverse conjugate at ``y``."""
    if np.any(np.asarray(y) < 0):
        raise DomainError("y must be non-negative")
    out = family.psi_star_inverse(y)
    return float(out) if np.ndim(out) == 0 else out


def psi_star_inverse_numeric(psi_fn: Callable, b_dom: float, y: float, tol: float = 1e-12) -> float:
    """inf over lam in (0, b_dom) of (y + psi(lam)) / lam.

    A finite ``b_dom`` is approached by evaluating at b_dom (1 - 1e-9).  For
    an unbounded domain the search runs over [1e-9, 1e9], wide enough for
    budgets between 1e-12 and 1e6 with unit-scale psi.
    """
    if y < 0:
        raise DomainError("y must be non-negative")
    if y == 0:
        return 0.0
    hi = b_dom * (1.0 - EDGE_SHRINK) if math.isfinite(b_dom) else 1e9
    lo = min(1e-9, hi * 1e-9)

    def objective(lam):
        lam = np.asarray(lam, dtype=float)
        with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
            try:
                vals = np.broadcast_to(np.asarray(psi_fn(lam), dtype=float), lam.shape)
            except TypeError:
                # scalar-only callables
                vals = np.array([float(psi_fn(float(x))) for x in lam])
            return (y + vals) / lam

    try:
        _, value = minimize_scalar(objective, lo, hi, tol=tol, vectorized=True)
    except NumericalError as exc:
        raise NumericalError(f"conjugate inverse objective is non-finite: {exc}") from None
    return value
