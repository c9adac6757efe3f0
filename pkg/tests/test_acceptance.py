"""Acceptance criteria 1-10.

Run with ``pytest tests/test_acceptance.py``; the terminal summary prints one
PASS/FAIL line per criterion.  Criterion 5 draws 10^4 datasets per preset and
confidence level and dominates the runtime (a few minutes on one core).
"""

import math
import time

import numpy as np
import pytest
import sympy

from pacbayes import anytime, bounded, general
from pacbayes.context import BoundContext
from pacbayes.lab import experiments, presets
from pacbayes.lab.problem import draw_dataset, exact_quantities
from pacbayes.specfun import binary_kl, kl_inverse_upper, lambert_w_m1, xi_maurer
from pacbayes.tails import SubExponential, SubGamma, SubGaussian, psi_star_inverse, psi_star_inverse_numeric


def _grid(points=1000, seed=20240601):
    """Random contexts: r in [0,1], kl in [0,3n], n in {10..10^4}, beta in {0.5,0.05,0.001}."""
    rng = np.random.default_rng(seed)
    ns = rng.choice([10, 100, 1000, 10_000], size=points)
    betas = rng.choice([0.5, 0.05, 0.001], size=points)
    rs = rng.uniform(0.0, 1.0, size=points)
    kls = rng.uniform(0.0, 3.0, size=points) * ns
    return [BoundContext(n=int(n), beta=float(b), kl=float(k), emp_risk=float(r))
            for n, b, k, r in zip(ns, betas, kls, rs)]


GRID = _grid()


# -- 1 ----------------------------------------------------------------------------

def test_c1_three_way_equivalence(criterion):
    criterion("1 three-way equivalence")
    t0 = time.perf_counter()
    worst_cat = worst_fr = 0.0
    for ctx in GRID:
        sl = bounded.seeger_langford(ctx).value
        worst_cat = max(worst_cat, abs(sl - bounded.catoni_uniform(ctx).value))
        worst_fr = max(worst_fr, abs(sl - bounded.fast_rate_strong(ctx).value))
    elapsed = time.perf_counter() - t0
    print(f"max |SL - catoni| = {worst_cat:.3e}, max |SL - fast-strong| = {worst_fr:.3e}, {elapsed:.1f} s")
    assert worst_cat <= 1e-5
    assert worst_fr <= 1e-5
    assert elapsed < 60.0


# -- 2 ----------------------------------------------------------------------------

def test_c2_dominance(criterion):
    criterion("2 dominance")
    rs = np.linspace(0.0, 1.0, 100)
    cs = np.linspace(0.0, 2.0, 100)
    res = bounded.dominance_check((float(r), float(c)) for r in rs for c in cs)
    assert res["violations"] == []
    assert res["max_excess"] <= 1e-12
    for ctx in GRID:
        assert bounded.mixed_rate(ctx).value <= bounded.rivasplata(ctx).value + 1e-12
        assert bounded.seeger_langford(ctx).value <= bounded.mcallester(ctx).value + 1e-12


# -- 3 ----------------------------------------------------------------------------

def test_c3_realizable_fast_rate(criterion):
    """At zero empirical risk the fast-rate bound pays C_xi once, Rivasplata's pays it twice."""
    criterion("3 realizable fast rate")
    for ctx in GRID:
        ctx0 = ctx.replace(emp_risk=0.0)
        c_xi = ctx0.budget_xi
        assert abs(bounded.fast_rate_simple(ctx0).params["unclamped"] - c_xi) <= 1e-6
        assert abs(bounded.rivasplata(ctx0).params["unclamped"] - 2.0 * c_xi) <= 1e-12


# -- 4 ----------------------------------------------------------------------------

def test_c4_gamma_two_constants(criterion):
    """Linear coefficients of the gamma = 2 fast-rate objective vs Thiemann at lambda = 1."""
    criterion("4 gamma=2 constants")

    def coefficients(objective):
        conf = float(objective(0.0, 1.0))             # r = 0 isolates the budget coefficient
        risk = float(objective(1.0, 0.0))             # budget = 0 isolates the risk coefficient
        return risk, conf

    fr_risk, fr_conf = coefficients(lambda r, b: bounded.fast_rate_objective(2.0, r, b))
    th_risk, th_conf = coefficients(lambda r, b: bounded.thiemann_objective(1.0, r, b))
    assert fr_conf == th_conf == float(sympy.Integer(2))
    assert fr_risk == pytest.approx(float(2 * sympy.log(2)), abs=1e-15)
    assert th_risk == 2.0
    # linearity: the r = 1, budget = 1 value is the sum of both coefficients
    assert float(bounded.fast_rate_objective(2.0, 1.0, 1.0)) == pytest.approx(fr_risk + fr_conf, abs=1e-15)


# -- 5 ----------------------------------------------------------------------------

COVERAGE_PRESETS = ("bernoulli", "two-hypothesis", "gibbs-10", "ternary", "near-realizable",
                    "heavy-tailed", "shifted-range")


@pytest.mark.parametrize("beta", [0.05, 0.2])
@pytest.mark.parametrize("preset", COVERAGE_PRESETS)
def test_c5_coverage(criterion, preset, beta):
    criterion("5 coverage")
    sc = presets.get(preset)
    ids = experiments.applicable_bounds(sc.problem)
    t0 = time.perf_counter()
    reports = experiments.coverage_experiment(sc.problem, sc.rule, list(ids), sc.n, beta,
                                              trials=10_000, master_seed=1)
    elapsed = time.perf_counter() - t0
    for b, rep in reports.items():
        print(f"{preset} beta={beta} {b}: {rep.violations}/{rep.trials}, upper {rep.binomial_ci[1]:.4f}")
    bad = {b: rep.binomial_ci[1] for b, rep in reports.items() if rep.binomial_ci[1] > beta}
    assert not bad
    # all bounds share the datasets, so this is a cap on every (problem, bound) pair
    assert elapsed <= 120.0


# -- 6 ----------------------------------------------------------------------------

def test_c6_conjugate_round_trip(criterion):
    criterion("6 conjugate inverse round trip")
    families = [SubGaussian(1.0), SubGaussian(0.25), SubGamma(1.0, 0.5), SubGamma(0.3, 2.0)]
    for fam in families:
        for y in np.geomspace(1e-3, 1e2, 60):
            exact = psi_star_inverse(fam, float(y))
            numeric = psi_star_inverse_numeric(fam.psi, fam.b_dom, float(y))
            assert abs(numeric - exact) <= 1e-6 * exact
    for fam in families + [SubExponential(1.0, 0.5)]:
        for n, kl, r in [(100, 5.0, 0.1), (1000, 0.0, 0.5), (50, 20.0, 0.0), (10_000, 300.0, 0.3)]:
            ctx = BoundContext(n=n, beta=0.05, kl=kl, emp_risk=r)
            analogue = general.chernoff_analogue(ctx, fam).value
            assert abs(general.chernoff_parametric(ctx, fam) - analogue) <= 1e-6 * abs(analogue)


# -- 7 ----------------------------------------------------------------------------

ANYTIME_PRESETS = ("bernoulli", "two-hypothesis", "ternary")
ANYTIME_BOUNDS = ("mcallester", "seeger-langford", "catoni-uniform", "fast-rate-simple", "mixed-rate")


@pytest.mark.parametrize("mode", ["basel", "substitution"])
@pytest.mark.parametrize("preset", ANYTIME_PRESETS)
def test_c7_anytime_validity(criterion, preset, mode):
    criterion("7 anytime validity")
    sc = presets.get(preset)
    reports = experiments.anytime_coverage_experiment(sc.problem, sc.rule, list(ANYTIME_BOUNDS), 200, 0.05,
                                                      trials=1000, master_seed=3, mode=mode)
    for b, rep in reports.items():
        print(f"{preset} {mode} {b}: {rep.violations}/{rep.trials}, upper {rep.binomial_ci[1]:.4f}")
        assert rep.binomial_ci[1] <= 0.05


def test_c7_basel_partial_sums(criterion):
    """Basel partial sums plus a lower bound on the remaining tail stay <= beta.

    The remainder sum_{n>N} 6 beta/(pi^2 n^2) lies between the integrals of
    6 beta/(pi^2 x^2) from N+1 and from N to infinity.
    """
    criterion("7 anytime validity")
    beta = 0.05
    sched = anytime.basel(beta)
    partial = np.cumsum([anytime.beta_at(sched, n) for n in range(1, 100_001)])
    assert np.all(partial <= beta)
    for N in (1, 10, 200, 10_000, 100_000):
        tail_lo = 6.0 * beta / (math.pi**2 * (N + 1))
        tail_hi = 6.0 * beta / (math.pi**2 * N)
        assert partial[N - 1] + tail_lo <= beta * (1 + 1e-12)
        assert beta - partial[N - 1] <= tail_hi * (1 + 1e-12)


# -- 8 ----------------------------------------------------------------------------

def test_c8_posterior_optimization(criterion):
    criterion("8 posterior optimization")
    sc = presets.get("fifty-hypotheses")
    sample = draw_dataset(sc.problem, sc.n, seed=7)
    res = experiments.alternating_optimize(sc.problem, sample, "fast-rate-simple", beta=0.05)
    trace = np.array(res.trace)
    assert np.all(np.diff(trace) <= 0.0)
    final = res.certificate.value

    def cert_of(post):
        q = exact_quantities(sc.problem, sample, post)
        return bounded.fast_rate_simple(BoundContext(n=sc.n, beta=0.05, kl=q.kl, emp_risk=q.emp_risk)).value

    prior_cert = cert_of(sc.problem.prior)
    mc_cert = cert_of(experiments.mcallester_posterior(sc.problem, sample, beta=0.05))
    print(f"alternating {final:.6f}, prior {prior_cert:.6f}, mcallester-optimized {mc_cert:.6f}")
    assert final <= prior_cert
    assert final <= mc_cert


# -- 9 ----------------------------------------------------------------------------

def test_c9_special_functions(criterion):
    criterion("9 special functions")
    xs = np.linspace(-10.0, -1.0, 2001)
    assert np.max(np.abs(lambert_w_m1(xs * np.exp(xs)) - xs)) <= 1e-9
    rng = np.random.default_rng(9)
    for p, c in zip(rng.uniform(0, 1, 2000), rng.uniform(0, 2, 2000)):
        p, c = float(p), float(c)
        q = kl_inverse_upper(p, c)
        if q == 1.0:
            assert binary_kl(p, float(np.nextafter(1.0, 0.0))) <= c
            continue
        slope = (1 - p) / (1 - q) - p / q
        if slope * np.spacing(q) <= 1e-11:
            assert abs(binary_kl(p, q) - c) <= 1e-10
        else:
            # next to q = 1 one ulp moves d(p||q) by more than 1e-10; require
            # q to be the first double at which d(p||q) reaches c
            assert binary_kl(p, q) >= c > binary_kl(p, float(np.nextafter(q, 0.0)))
    for n in range(1, 201):
        xi = xi_maurer(n, mode="exact")
        assert math.sqrt(n) - 1e-12 <= xi <= min(2 * math.sqrt(n), 2 + math.sqrt(2 * n)) + 1e-12


# -- 10 ---------------------------------------------------------------------------

def test_c10_budget_identities(criterion):
    """Budget differences against the cut-off Chernoff analogue (k_max = n)."""
    criterion("10 cut-off variants")
    fam = SubGaussian(1.0)
    for n in (10, 100, 1000, 10**5):
        for kl in (0.0, 0.5, 1.0, 3.0, 7.5, float(n) / 2):
            ctx = BoundContext(n=n, beta=0.05, kl=kl, emp_risk=0.2)
            base = general.chernoff_analogue(ctx, fam).params["budget"]
            no_cut = general.chernoff_no_cutoff(ctx, fam).params["budget"]
            loglog = general.chernoff_loglog(ctx, fam).params["budget"]
            expect_nc = (math.log(math.pi**2 / 6) + 2 * math.log1p(kl) - math.log(n)) / n
            expect_ll = (math.e * max(kl, 1.0) - kl + math.log(2 + math.log(n)) - 1 - math.log(n)) / n
            assert abs((no_cut - base) - expect_nc) <= 1e-12
            assert abs((loglog - base) - expect_ll) <= 1e-12


def test_c10_loglog_crossover(criterion):
    """The geometric-grid variant beats the cut-off one only while kl is below ~ln(n)/(e-1)."""
    criterion("10 cut-off variants")
    fam = SubGaussian(1.0)
    ns = np.unique(np.geomspace(10, 10**8, 29).astype(int))

    def loglog_wins(n, kl):
        ctx = BoundContext(n=int(n), beta=0.05, kl=float(kl), emp_risk=0.1)
        return general.chernoff_loglog(ctx, fam).value < general.chernoff_analogue(ctx, fam).value

    for n in ns:
        for kl in np.linspace(0.0, min(20.0, n), 81):
            predicted = (math.e * max(kl, 1.0) + math.log(2 + math.log(n))) < (kl + 1 + math.log(n))
            assert loglog_wins(n, kl) == predicted
    # kl growing at least logarithmically: never wins
    assert not any(loglog_wins(n, math.log(n)) for n in ns)
    assert not any(loglog_wins(n, n**0.25) for n in ns)
    # kl bounded or growing like ln ln n: wins once n is large enough
    assert loglog_wins(ns[-1], 1.0) and not loglog_wins(ns[-1], 12.0)
    assert loglog_wins(ns[-1], math.log(math.log(ns[-1])))
