"""Inputs and outputs shared by every bound evaluator."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any

from pacbayes.specfun import DomainError, xi_maurer

__all__ = ["BoundContext", "Certificate", "EssSupInfo"]


@dataclass(frozen=True)
class BoundContext:
    """Sample size, confidence, KL (nats) and empirical risk of a posterior.

    Confidence may be given as ``beta`` or as ``log_inv_beta = ln(1/beta)``;
    the log form is what the evaluators use, so extreme confidence levels
    never underflow.  ``log_xi`` overrides ``ln xi(n)``; it is how the
    anytime substitution swaps the concentration constant.
    """

    n: int
    kl: float = 0.0
    emp_risk: float = 0.0
    beta: float | None = None
    log_inv_beta: float | None = None
    xi_mode: str = "bound"
    log_xi: float | None = None

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise DomainError("n must be a positive integer")
        object.__setattr__(self, "n", int(self.n))
        if self.beta is None and self.log_inv_beta is None:
            raise DomainError("give beta or log_inv_beta")
        if self.log_inv_beta is None:
            if not 0.0 < self.beta < 1.0:
                raise DomainError("beta must lie in (0, 1)")
            object.__setattr__(self, "log_inv_beta", -math.log(self.beta))
        elif self.beta is None:
            if not self.log_inv_beta >= 0.0 or math.isinf(self.log_inv_beta):
                raise DomainError("log_inv_beta must be finite and non-negative")
            object.__setattr__(self, "beta", math.exp(-self.log_inv_beta))
        if not (self.kl >= 0.0 and math.isfinite(self.kl)):
            raise DomainError("kl must be finite and non-negative")
        if not math.isfinite(self.emp_risk):
            raise DomainError("emp_risk must be finite")
        if self.xi_mode not in ("bound", "exact"):
            raise DomainError(f"unknown xi mode {self.xi_mode!r}")
        if self.log_xi is None:
            object.__setattr__(self, "log_xi", math.log(xi_maurer(self.n, self.xi_mode)))

    @property
    def budget(self) -> float:
        """(kl + ln(1/beta)) / n."""
        return (self.kl + self.log_inv_beta) / self.n

    @property
    def budget_xi(self) -> float:
        """(kl + ln(xi(n)/beta)) / n."""
        return (self.kl + self.log_xi + self.log_inv_beta) / self.n

    def replace(self, **changes) -> "BoundContext":
        fields = dict(n=self.n, kl=self.kl, emp_risk=self.emp_risk,
                      log_inv_beta=self.log_inv_beta, xi_mode=self.xi_mode, log_xi=self.log_xi)
        if "beta" in changes:
            fields.pop("log_inv_beta")
        if "n" in changes or "xi_mode" in changes:
            fields.pop("log_xi")
        fields.update(changes)
        return BoundContext(**fields)


@dataclass(frozen=True)
class EssSupInfo:
    """Essential supremum of the posterior-averaged population risk.

    Unknown by default, in which case it is +inf and any certificate that
    falls back on it is marked uninformative.
    """

    value: float = math.inf
    known: bool = False

    def __post_init__(self):
        if not self.value >= 0.0:
            raise DomainError("esssup must be non-negative")


@dataclass(frozen=True)
class Certificate:
    """A bound evaluation together with the parameters that produced it."""

    value: float
    bound_id: str
    params: dict[str, Any] = field(default_factory=dict)
    informative: bool = True
    beta: float = math.nan
    n: int = 0

    def to_dict(self) -> dict[str, Any]:
        return {
            "value": self.value,
            "bound_id": self.bound_id,
            "params": dict(self.params),
            "informative": self.informative,
            "beta": self.beta,
            "n": self.n,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "Certificate":
        return cls(value=float(d["value"]), bound_id=d["bound_id"], params=dict(d["params"]),
                   informative=bool(d["informative"]), beta=float(d["beta"]), n=int(d["n"]))

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, s: str) -> "Certificate":
        return cls.from_dict(json.loads(s))
