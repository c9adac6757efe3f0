import math

import numpy as np
import pytest

from pacbayes import anytime, bounded
from pacbayes.context import BoundContext
from pacbayes.specfun import DomainError, xi_maurer

BASEL_N1 = 0.030396355092701331          # 6 * 0.05 / pi^2
SQRT_PI_1001 = 56.077930117323188
LOG_RATIO_1000 = 0.18254089452863255     # ln(sqrt(pi 1001) / xi_bound(1000))


def test_basel_first_term():
    assert anytime.beta_at(anytime.basel(0.05), 1) == pytest.approx(BASEL_N1, rel=1e-15)


def test_basel_log_form():
    sched = anytime.basel(0.05)
    n = 37
    expected = math.log(20) + math.log(math.pi**2 / 6) + 2 * math.log(n)
    assert anytime.log_inv_beta_at(sched, n) == pytest.approx(expected, rel=1e-15)


def test_log_squared_partial_sums_below_beta():
    sched = anytime.log_squared(0.05)
    total = math.fsum(anytime.beta_at(sched, n) for n in range(1, 200_001))
    assert total < 0.05


def test_log_squared_normalizer_constant():
    # a short partial sum plus its integral tail is a looser upper bound on the same series
    assert anytime.log_squared_normalizer(10**6, 10**5) == pytest.approx(0.7602276247828379, rel=1e-12)
    assert anytime.LOG_SQUARED_NORMALIZER <= anytime.log_squared_normalizer(10**6, 10**5)


def test_log_squared_cheaper_than_basel_for_large_n():
    b, l = anytime.basel(0.05), anytime.log_squared(0.05)
    assert anytime.log_inv_beta_at(l, 10**6) < anytime.log_inv_beta_at(b, 10**6)


def test_custom_schedule():
    sched = anytime.custom([0.5, 0.25, 0.25], 0.1)
    assert anytime.beta_at(sched, 2) == pytest.approx(0.025)
    with pytest.raises(DomainError):
        anytime.beta_at(sched, 4)
    with pytest.raises(DomainError):
        anytime.custom([0.8, 0.8], 0.1)


def test_schedule_validation():
    with pytest.raises(DomainError):
        anytime.basel(1.5)
    with pytest.raises(DomainError):
        anytime.BetaSchedule("geometric", 0.05)
    with pytest.raises(DomainError):
        anytime.log_inv_beta_at(anytime.basel(0.05), 0)


def test_make_anytime_passes_beta_n():
    seen = []

    def bound(n, beta_n):
        seen.append((n, beta_n))
        return bounded.seeger_langford(BoundContext(n=n, beta=beta_n, kl=1.0, emp_risk=0.1))

    certs = anytime.make_anytime(bound, anytime.basel(0.05), 5)
    assert [c.n for c in certs] == [1, 2, 3, 4, 5]
    assert seen[0][1] == pytest.approx(BASEL_N1)
    assert math.fsum(b for _, b in seen) < 0.05


def test_make_anytime_reports_failing_n():
    def bound(n, beta_n):
        if n == 3:
            raise DomainError("boom")
        return bounded.mcallester(BoundContext(n=n, beta=beta_n))

    with pytest.raises(DomainError, match="n=3"):
        anytime.make_anytime(bound, anytime.basel(0.05), 5)


def test_substitution():
    ctx = BoundContext(n=1000, beta=0.05, kl=5.0, emp_risk=0.1)
    sub = anytime.seeger_anytime_substitution(ctx)
    assert math.exp(sub.log_xi) == pytest.approx(SQRT_PI_1001, rel=1e-14)
    assert sub.log_xi - ctx.log_xi == pytest.approx(LOG_RATIO_1000, rel=1e-13)
    assert ctx.log_xi == pytest.approx(math.log(xi_maurer(1000)))
    assert bounded.seeger_langford(sub).value > bounded.seeger_langford(ctx).value


def test_substitution_costs_less_than_basel_at_large_n():
    ctx = BoundContext(n=10_000, beta=0.05, kl=5.0, emp_risk=0.1)
    sub = anytime.seeger_anytime_substitution(ctx)
    basel = ctx.replace(log_inv_beta=anytime.log_inv_beta_at(anytime.basel(0.05), 10_000))
    assert bounded.seeger_langford(sub).value < bounded.seeger_langford(basel).value


def test_beta_at_vectorizes_over_loop():
    sched = anytime.basel(0.2)
    vals = np.array([anytime.beta_at(sched, n) for n in range(1, 11)])
    assert np.allclose(vals, 6 * 0.2 / (math.pi**2 * np.arange(1, 11) ** 2))
