"""Ready-made discrete problems used by the coverage suite and the CLI."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from pacbayes.lab.problem import DiscreteProblem, FixedPosterior, Gibbs

__all__ = ["Scenario", "PRESETS", "get", "threshold_problem"]


@dataclass(frozen=True)
class Scenario:
    name: str
    problem: DiscreteProblem
    rule: object
    n: int
    description: str


def _uniform(k: int) -> np.ndarray:
    return np.full(k, 1.0 / k)


def bernoulli_single(p: float = 0.5) -> DiscreteProblem:
    return DiscreteProblem(values=(0, 1), probs=np.array([1 - p, p]), hypotheses=("w",),
                           loss=np.array([[0.0, 1.0]]), prior=np.array([1.0]))


def bernoulli_pair(p: float = 0.3) -> DiscreteProblem:
    # w0 predicts label 0, w1 predicts label 1; the label is 1 with probability p
    return DiscreteProblem(values=(0, 1), probs=np.array([1 - p, p]), hypotheses=("predict-0", "predict-1"),
                           loss=np.array([[0.0, 1.0], [1.0, 0.0]]), prior=_uniform(2))


def threshold_problem(k: int, noise: float = 0.1, cut: int | None = None,
                      prior: np.ndarray | None = None) -> DiscreteProblem:
    """Threshold classifiers on x in {0..k-1} with labels flipped at rate ``noise``.

    Outcomes are (x, y) pairs with x uniform and y = [x >= cut] flipped with
    probability ``noise``; hypothesis t predicts [x >= t].
    """
    cut = k // 2 if cut is None else cut
    xs = np.repeat(np.arange(k), 2)
    ys = np.tile([0, 1], k)
    clean = (xs >= cut).astype(int)
    probs = np.where(ys == clean, 1.0 - noise, noise) / k
    loss = np.array([[float((x >= t) != y) for x, y in zip(xs, ys)] for t in range(k)])
    return DiscreteProblem(values=tuple(f"{x},{y}" for x, y in zip(xs, ys)), probs=probs,
                           hypotheses=tuple(f"t={t}" for t in range(k)), loss=loss,
                           prior=_uniform(k) if prior is None else prior)


def ternary() -> DiscreteProblem:
    values = ("a", "b", "c", "d")
    probs = np.array([0.4, 0.3, 0.2, 0.1])
    loss = np.array([
        [0.0, 0.5, 1.0, 0.5],
        [0.5, 0.0, 0.5, 1.0],
        [1.0, 0.5, 0.0, 0.0],
    ])
    return DiscreteProblem(values=values, probs=probs, hypotheses=("h0", "h1", "h2"),
                           loss=loss, prior=np.array([0.5, 0.25, 0.25]))


def near_realizable(k: int = 20) -> DiscreteProblem:
    """One hypothesis errs on a rare outcome only; the others err often."""
    m = 10
    probs = np.array([0.01] + [0.99 / (m - 1)] * (m - 1))
    rng = np.random.default_rng(20240601)
    loss = (rng.random((k, m)) < 0.3).astype(float)
    loss[0] = 0.0
    loss[0, 0] = 1.0
    return DiscreteProblem(values=tuple(range(m)), probs=probs, hypotheses=tuple(f"h{i}" for i in range(k)),
                           loss=loss, prior=_uniform(k))


def heavy_tailed() -> DiscreteProblem:
    """Non-negative loss with a rare large value, declared unbounded."""
    values = (0, 1, 2, 3)
    probs = np.array([0.55, 0.35, 0.09, 0.01])
    base = np.array([0.0, 1.0, 4.0, 40.0])
    loss = np.vstack([base, 0.5 * base, np.array([1.0, 0.5, 2.0, 20.0])])
    return DiscreteProblem(values=values, probs=probs, hypotheses=("h0", "h1", "h2"),
                           loss=loss, prior=_uniform(3), loss_range=None)


def shifted_range() -> DiscreteProblem:
    """Losses in [-1, 2], outside the unit interval."""
    values = (0, 1, 2)
    probs = np.array([0.5, 0.3, 0.2])
    loss = np.array([[-1.0, 0.5, 2.0], [0.0, 1.0, -0.5], [2.0, -1.0, 0.0]])
    return DiscreteProblem(values=values, probs=probs, hypotheses=("h0", "h1", "h2"),
                           loss=loss, prior=_uniform(3), loss_range=(-1.0, 2.0))


def fifty_hypotheses() -> DiscreteProblem:
    return threshold_problem(50, noise=0.1, cut=20)


_FACTORIES: dict[str, Callable[[], Scenario]] = {
    "bernoulli": lambda: Scenario("bernoulli", bernoulli_single(0.5), FixedPosterior(), 100,
                                  "single hypothesis, Bernoulli(0.5) loss, posterior = prior"),
    "two-hypothesis": lambda: Scenario("two-hypothesis", bernoulli_pair(0.3), Gibbs(10.0), 100,
                                       "two predictors of a Bernoulli(0.3) label, Gibbs posterior"),
    "gibbs-10": lambda: Scenario("gibbs-10", threshold_problem(10), Gibbs(30.0), 100,
                                 "10 threshold classifiers with 10% label noise, Gibbs posterior"),
    "ternary": lambda: Scenario("ternary", ternary(), Gibbs(20.0), 100,
                                "losses in {0, 0.5, 1}, non-uniform prior, Gibbs posterior"),
    "near-realizable": lambda: Scenario("near-realizable", near_realizable(), Gibbs(1.0, scale="n"), 100,
                                        "20 hypotheses, best risk 0.01, Gibbs posterior at temperature n"),
    "heavy-tailed": lambda: Scenario("heavy-tailed", heavy_tailed(), Gibbs(5.0), 100,
                                     "unbounded non-negative loss with a rare large value"),
    "shifted-range": lambda: Scenario("shifted-range", shifted_range(), Gibbs(10.0), 100,
                                      "losses in [-1, 2], Gibbs posterior"),
    "fifty-hypotheses": lambda: Scenario("fifty-hypotheses", fifty_hypotheses(), Gibbs(50.0), 200,
                                         "50 threshold classifiers for posterior optimization"),
}

PRESETS = tuple(_FACTORIES)


def get(name: str) -> Scenario:
    try:
        return _FACTORIES[name]()
    except KeyError:
        raise KeyError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}") from None
