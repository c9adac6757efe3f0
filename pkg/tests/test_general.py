import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pacbayes import general
from pacbayes.context import BoundContext, EssSupInfo
from pacbayes.general import MartingaleContext, SecondMomentContext
from pacbayes.specfun import DomainError
from pacbayes.tails import BoundedRange, SubExponential, SubGamma, SubGaussian

CTX = BoundContext(n=100, beta=0.05, kl=5.0, emp_risk=0.1)
# mpmath: (5 + ln(e 100 / 0.05)) / 100 and 0.1 + sqrt(2 * budget)
CHERNOFF_BUDGET_REF = 0.13600902459542082
CHERNOFF_VALUE_REF = 0.62155349600097749
TEN_E_PI2 = 268.28366297560622


def test_chernoff_reference():
    cert = general.chernoff_analogue(CTX, SubGaussian(1.0))
    assert cert.params["budget"] == pytest.approx(CHERNOFF_BUDGET_REF, rel=1e-15)
    assert cert.value == pytest.approx(CHERNOFF_VALUE_REF, rel=1e-15)
    assert cert.params["event"] == 1.0
    assert cert.informative


def test_chernoff_fallback_to_esssup():
    ctx = CTX.replace(kl=150.0)
    unknown = general.chernoff_analogue(ctx, SubGaussian(1.0))
    assert unknown.value == math.inf
    assert not unknown.informative
    known = general.chernoff_analogue(ctx, SubGaussian(1.0), EssSupInfo(0.8, known=True))
    assert known.value == 0.8
    assert known.informative
    assert known.params["event"] == 0.0


def test_chernoff_k_max():
    small = general.chernoff_analogue(CTX, SubGaussian(1.0), k_max=10)
    assert small.value < general.chernoff_analogue(CTX, SubGaussian(1.0)).value
    assert general.chernoff_analogue(CTX, SubGaussian(1.0), k_max=4).params["event"] == 0.0
    with pytest.raises(DomainError):
        general.chernoff_analogue(CTX, SubGaussian(1.0), k_max=0)


def test_linearized_constant():
    expected = (1.1 * 5.0 + math.log(TEN_E_PI2) + math.log(20.0)) / 100
    assert general.linearized_budget(CTX) == pytest.approx(expected, rel=1e-15)


def test_linearized_dominates_no_cutoff():
    for kl in (0.0, 0.5, 3.0, 30.0, 300.0):
        ctx = CTX.replace(kl=kl, n=1000)
        assert general.no_cutoff_budget(ctx) <= general.linearized_budget(ctx)


def test_bounded_menu_matches_hoeffding_family():
    menu = general.chernoff_tail_menu(CTX, "bounded", a=0.0, b=1.0)
    direct = general.chernoff_analogue(CTX, BoundedRange(0.0, 1.0))
    assert menu.value == pytest.approx(direct.value, rel=1e-14)


def test_menu_variants_match_families():
    for variant, fam, kw in [("subgaussian", SubGaussian(2.0), dict(sigma2=2.0)),
                             ("subgamma", SubGamma(2.0, 0.3), dict(sigma2=2.0, c=0.3))]:
        menu = general.chernoff_tail_menu(CTX, variant, **kw)
        assert menu.value == pytest.approx(general.chernoff_analogue(CTX, fam).value, rel=1e-14)


def test_subexponential_menu_relaxation():
    inside = general.chernoff_tail_menu(CTX, "subexponential", sigma2=1.0, c=0.5)
    assert inside.params["inner_branch"] == 1.0
    exact = general.chernoff_analogue(CTX, SubExponential(1.0, 0.5)).value
    assert inside.value == pytest.approx(exact)
    outside = general.chernoff_tail_menu(CTX, "subexponential", sigma2=0.01, c=0.5)
    assert outside.params["inner_branch"] == 0.0
    assert outside.value >= general.chernoff_analogue(CTX, SubExponential(0.01, 0.5)).value


def test_menu_unknown_variant():
    with pytest.raises(DomainError):
        general.chernoff_tail_menu(CTX, "cauchy")


def test_cgf_fixed_lambda():
    lam = 2.0
    expected = 0.1 + (CTX.budget + lam**2 / 2) / lam
    assert general.cgf_fixed_lambda(CTX, SubGaussian(1.0), lam).value == pytest.approx(expected)
    with pytest.raises(DomainError):
        general.cgf_fixed_lambda(CTX, SubGamma(1.0, 1.0), 1.5)


def test_loglog_fallback():
    assert general.chernoff_loglog(CTX.replace(kl=101.0), SubGaussian(1.0)).value == math.inf


def test_second_moment_bound():
    smc = SecondMomentContext(CTX, 2.0)
    cert = general.second_moment_bound(smc)
    log_term = 5.0 + general.log_xi_prime(100) + math.log(20.0)
    assert cert.value == pytest.approx(0.1 + 2 / math.sqrt(6) * math.sqrt(2.0 * log_term / 100), rel=1e-14)
    assert general.second_moment_bound(SecondMomentContext(CTX, 30.0)).params["event"] == 0.0
    with pytest.raises(DomainError):
        SecondMomentContext(CTX, 0.5)


def test_log_xi_prime():
    n = 50
    expected = math.log(2 * math.e * n * (n + 1) ** 2 * (1 + math.log(n)))
    assert general.log_xi_prime(n) == pytest.approx(expected, rel=1e-15)


def test_martingale_bound():
    mc = MartingaleContext(n=100, kl=2.0, var_empirical=3.0, var_predictable=1.0, beta=0.05)
    assert mc.variance == 6.0
    cert = general.martingale_bound(mc)
    expected = 2 / math.sqrt(6) * math.sqrt(6.0 * (2.0 + general.log_xi_prime(100) + math.log(20)))
    assert cert.value == pytest.approx(expected, rel=1e-14)
    big = MartingaleContext(n=10, kl=50.0, var_empirical=3.0, var_predictable=1.0, beta=0.05)
    assert general.martingale_bound(big).params["event"] == 0.0


def test_randomized_subsample():
    cert = general.randomized_subsample_bound(CTX)
    first = math.sqrt(2 * (5 + 1 + math.log(100) + math.log(20)) / 100)
    second = math.sqrt((math.log(4) + math.log(20)) / 200)
    assert cert.value == pytest.approx(0.1 + first + second, rel=1e-14)
    with pytest.raises(DomainError):
        general.randomized_subsample_bound(CTX, 1.0, 1.0)


def test_cutoff_parametric():
    assert general.cutoff_parametric(10, n=100) == math.ceil(math.log(1000))


@settings(max_examples=100, deadline=None)
@given(st.integers(2, 10**6), st.floats(0.0, 1.0), st.floats(1e-3, 0.5), st.floats(0.0, 1.0))
def test_bounds_exceed_emp_risk_and_grow_with_kl(n, kl_frac, beta, r):
    ctx = BoundContext(n=n, beta=beta, kl=kl_frac * n, emp_risk=r)
    more = ctx.replace(kl=min(ctx.kl + 1.0, float(n)))
    fam = SubGamma(0.5, 0.2)
    for fn in (general.chernoff_analogue, general.chernoff_no_cutoff, general.chernoff_linearized,
               general.chernoff_loglog):
        v = fn(ctx, fam).value
        assert v >= r
        assert v <= fn(more, fam).value + 1e-12
