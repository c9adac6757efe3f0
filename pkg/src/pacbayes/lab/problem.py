"""Finite learning problems whose risks, KL terms and moments are exact."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Any

import numpy as np
from scipy.special import logsumexp, xlogy

from pacbayes.context import EssSupInfo
from pacbayes.specfun import DomainError

__all__ = [
    "DiscreteProblem",
    "Gibbs",
    "FixedPosterior",
    "ErmSoftmax",
    "ExactQuantities",
    "draw_dataset",
    "counts_of",
    "empirical_risks",
    "gibbs_posterior",
    "exact_quantities",
]

PMF_TOL = 1e-12


def _check_pmf(p: np.ndarray, what: str) -> None:
    if p.ndim != 1 or p.size == 0:
        raise DomainError(f"{what} must be a non-empty vector")
    if np.any(p < 0) or abs(math.fsum(p) - 1.0) > PMF_TOL * max(1, p.size):
        raise DomainError(f"{what} must be non-negative and sum to 1")


@dataclass(frozen=True, eq=False)
class DiscreteProblem:
    """Outcomes with a pmf, hypotheses with a prior, and a loss table.

    ``loss[w, z]`` is the loss of hypothesis ``w`` on outcome ``z``.
    ``loss_range`` is ``(a, b)`` when every loss is known to lie in [a, b],
    or ``None`` for losses treated as unbounded.
    """

    values: tuple
    probs: np.ndarray
    hypotheses: tuple
    loss: np.ndarray
    prior: np.ndarray
    loss_range: tuple[float, float] | None = (0.0, 1.0)

    def __post_init__(self):
        probs = np.asarray(self.probs, dtype=float)
        prior = np.asarray(self.prior, dtype=float)
        loss = np.asarray(self.loss, dtype=float)
        _check_pmf(probs, "outcome pmf")
        _check_pmf(prior, "prior")
        if loss.shape != (prior.size, probs.size):
            raise DomainError(f"loss table must have shape {(prior.size, probs.size)}, got {loss.shape}")
        if len(self.values) != probs.size or len(self.hypotheses) != prior.size:
            raise DomainError("labels do not match the pmf lengths")
        if not np.all(np.isfinite(loss)):
            raise DomainError("losses must be finite")
        if self.loss_range is not None:
            a, b = map(float, self.loss_range)
            if not a <= b or loss.min() < a or loss.max() > b:
                raise DomainError("loss table leaves the declared loss_range")
            object.__setattr__(self, "loss_range", (a, b))
        for name, arr in (("probs", probs), ("prior", prior), ("loss", loss)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "values", tuple(self.values))
        object.__setattr__(self, "hypotheses", tuple(self.hypotheses))

    @property
    def pop_risks(self) -> np.ndarray:
        """R(w) for every hypothesis."""
        return self.loss @ self.probs

    @property
    def pop_second_moments(self) -> np.ndarray:
        """E l(w, Z)^2 for every hypothesis."""
        return (self.loss**2) @ self.probs

    @property
    def unit_loss(self) -> bool:
        return self.loss_range is not None and self.loss_range[0] >= 0.0 and self.loss_range[1] <= 1.0

    def esssup(self) -> EssSupInfo:
        """max_w R(w): no posterior can have a larger population risk."""
        return EssSupInfo(value=float(self.pop_risks.max()), known=True)

    def to_dict(self) -> dict[str, Any]:
        return {
            "outcomes": [{"value": v, "prob": float(p)} for v, p in zip(self.values, self.probs)],
            "hypotheses": list(self.hypotheses),
            "loss": self.loss.tolist(),
            "prior": self.prior.tolist(),
            "loss_range": None if self.loss_range is None else list(self.loss_range),
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "DiscreteProblem":
        try:
            outcomes = d["outcomes"]
            rng = d.get("loss_range", [0.0, 1.0])
            return cls(
                values=tuple(o["value"] for o in outcomes),
                probs=np.array([o["prob"] for o in outcomes], dtype=float),
                hypotheses=tuple(d["hypotheses"]),
                loss=np.array(d["loss"], dtype=float),
                prior=np.array(d["prior"], dtype=float),
                loss_range=None if rng is None else (float(rng[0]), float(rng[1])),
            )
        except (KeyError, TypeError, IndexError) as exc:
            raise DomainError(f"malformed problem definition: {exc!r}") from None

    @classmethod
    def from_json(cls, path) -> "DiscreteProblem":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


# -- posterior rules -------------------------------------------------------------

@dataclass(frozen=True)
class Gibbs:
    """P(w) proportional to Q(w) exp(-t r_hat(w)).

    ``scale="unscaled"`` uses t = lam; ``scale="n"`` uses t = lam * n.
    """

    lam: float
    scale: str = "unscaled"

    def posterior(self, problem: DiscreteProblem, emp: np.ndarray, n: int) -> np.ndarray:
        return _gibbs(problem.prior, emp, self.lam * (n if self.scale == "n" else 1.0))


@dataclass(frozen=True)
class FixedPosterior:
    """Data-independent posterior (``pmf=None`` means the prior)."""

    pmf: tuple | None = None

    def posterior(self, problem: DiscreteProblem, emp: np.ndarray, n: int) -> np.ndarray:
        return problem.prior.copy() if self.pmf is None else np.asarray(self.pmf, dtype=float)


@dataclass(frozen=True)
class ErmSoftmax:
    """Softmax of -r_hat / temperature over the prior's support, ignoring prior weights."""

    temperature: float

    def posterior(self, problem: DiscreteProblem, emp: np.ndarray, n: int) -> np.ndarray:
        support = (problem.prior > 0).astype(float)
        return _gibbs(support / support.sum(), emp, 1.0 / self.temperature)


def _gibbs(prior: np.ndarray, emp: np.ndarray, temp: float) -> np.ndarray:
    if temp < 0:
        raise DomainError("Gibbs temperature must be non-negative")
    with np.errstate(divide="ignore"):
        logw = np.log(prior) - temp * emp
    return np.exp(logw - logsumexp(logw))


# -- sampling and exact quantities --------------------------------------------

def draw_dataset(problem: DiscreteProblem, n: int, seed) -> np.ndarray:
    """n i.i.d. outcome indices; ``seed`` is anything ``default_rng`` accepts."""
    if n < 1:
        raise DomainError("n must be positive")
    rng = np.random.default_rng(seed)
    return rng.choice(problem.probs.size, size=n, p=problem.probs)


def counts_of(problem: DiscreteProblem, sample) -> np.ndarray:
    return np.bincount(np.asarray(sample, dtype=np.int64), minlength=problem.probs.size)


def empirical_risks(problem: DiscreteProblem, counts: np.ndarray) -> np.ndarray:
    """r_hat(w, S) for every hypothesis, from outcome counts."""
    return problem.loss @ counts / counts.sum()


def gibbs_posterior(problem: DiscreteProblem, sample, lam: float, scale: str = "unscaled") -> np.ndarray:
    """P(w) proportional to Q(w) exp(-lam r_hat(w, S)), normalized in log space."""
    counts = counts_of(problem, sample)
    if counts.sum() == 0:
        raise DomainError("sample must be non-empty")
    return Gibbs(lam, scale).posterior(problem, empirical_risks(problem, counts), int(counts.sum()))


@dataclass(frozen=True)
class ExactQuantities:
    pop_risk: float
    emp_risk: float
    kl: float
    second_moment_empirical: float
    second_moment_population: float

    @property
    def sigma2_n(self) -> float:
        """Posterior average of mean_i l(W,Z_i)^2 + 2 E l(W,Z')^2 + 1."""
        return self.second_moment_empirical + 2.0 * self.second_moment_population + 1.0


def _kl(posterior: np.ndarray, prior: np.ndarray) -> float:
    if np.any((posterior > 0) & (prior == 0)):
        raise DomainError("posterior is not absolutely continuous with respect to the prior")
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = xlogy(posterior, posterior) - xlogy(posterior, np.where(prior > 0, prior, 1.0))
    return max(0.0, math.fsum(terms))


def exact_quantities(problem: DiscreteProblem, sample, posterior, counts: np.ndarray | None = None) -> ExactQuantities:
    """Posterior-averaged population risk, empirical risk, KL and second moments."""
    posterior = np.asarray(posterior, dtype=float)
    if counts is None:
        counts = counts_of(problem, sample)
    n = counts.sum()
    emp = problem.loss @ counts / n
    emp2 = (problem.loss**2) @ counts / n
    return ExactQuantities(
        pop_risk=math.fsum(posterior * problem.pop_risks),
        emp_risk=math.fsum(posterior * emp),
        kl=_kl(posterior, problem.prior),
        second_moment_empirical=math.fsum(posterior * emp2),
        second_moment_population=math.fsum(posterior * problem.pop_second_moments),
    )
