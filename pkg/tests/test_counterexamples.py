import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nsbesov.counterexamples import (
    CaseConfig,
    field_blocks,
    fit_exponent,
    gen_case_i,
    gen_case_ii,
    gen_case_iii,
    lacunary_schedule,
    limit_value,
    lower_bound_curve,
    lower_bound_spectrum,
)
from nsbesov.errors import BudgetError, HypothesisError
from nsbesov.spectral import make_grid

# scaling-limit values a_inf computed once with K_b = 512 and frozen
A_INF = {2.0: 0.016843780907914024, 4.0: 0.006002140953035581}


class TestGenerators:
    @pytest.mark.parametrize("N, q", [(1, 2.0), (4, 2.0), (64, 2.0), (16, 1.0)])
    def test_case_i_weight(self, N, q):
        u = gen_case_i(N, 2.0, q, 16.0)
        assert u.weight == pytest.approx(N ** (-1 / (2 * q)), rel=1e-15)
        assert u.M == 16.0

    @pytest.mark.parametrize("kw", [dict(q=math.inf), dict(M=8.0), dict(N=0)])
    def test_case_i_hypotheses(self, kw):
        args = dict(N=4, p=2.0, q=2.0, M=16.0) | kw
        with pytest.raises(HypothesisError):
            gen_case_i(**args)

    def test_case_ii(self):
        u = gen_case_ii(32)
        assert (u.M, u.weight) == (32.0, 1 / 32)
        with pytest.raises(HypothesisError):
            gen_case_ii(4)

    def test_case_iii_weights(self):
        u, v = gen_case_iii(4, 1.0)
        sched = lacunary_schedule(4, 2.0)
        norm = 1 / math.sqrt(math.log(4))
        for t, j, M in zip(u.terms, sched.indices, sched.frequencies):
            assert t.M == M
            assert t.weight == pytest.approx(norm / (math.sqrt(j) * M**2), rel=1e-14)
        for t, j in zip(v.terms, sched.indices):
            assert t.weight == pytest.approx(norm / math.sqrt(j), rel=1e-14)

    def test_case_iii_range(self):
        with pytest.raises(HypothesisError):
            gen_case_iii(4, 2.0)


class TestSchedule:
    def test_no_shift_when_small(self):
        s = lacunary_schedule(4, 2.0)
        assert s.shift == 0 and s.frequencies[0] == 2.0**20 and s.frequencies[-1] == 2.0**28

    def test_shift_caps_top(self):
        s = lacunary_schedule(16, 2.0)
        assert s.frequencies[-1] == 2.0**40
        assert s.frequencies[0] == 2.0**8

    @settings(max_examples=30)
    @given(N=st.integers(1, 18), sigma=st.sampled_from([2.0, 3.0]))
    def test_feasible_within_budget(self, N, sigma):
        try:
            s = lacunary_schedule(N, sigma)
        except BudgetError:
            assert N > (40 - 4) / sigma
            return
        assert max(s.frequencies) <= 2.0**40
        assert min(s.frequencies) >= 16
        assert np.all(np.diff(s.frequencies) > 0)

    def test_budget_message(self):
        with pytest.raises(BudgetError, match="N <= 18"):
            lacunary_schedule(19, 2.0)

    def test_sigma(self):
        with pytest.raises(HypothesisError):
            lacunary_schedule(4, 1.5)


class TestFit:
    def test_exact_power_law(self):
        N = np.array([16, 32, 64, 128])
        fit = fit_exponent(N, 3 * N**-0.5)
        assert fit["slope"] == pytest.approx(-0.5, abs=1e-12)
        assert fit["points"] == 4

    def test_skips_nonpositive(self):
        fit = fit_exponent([1, 2, 4], [0.0, 1.0, 2.0])
        assert fit["points"] == 2 and math.isnan(fit["stderr"])

    def test_too_few(self):
        assert math.isnan(fit_exponent([1], [1])["slope"])


class TestConfig:
    @pytest.mark.parametrize(
        "args",
        [
            ("iv", 2.0, 2.0, (4,)),
            ("i", 2.0, math.inf, (4,)),
            ("ii", 1.0, math.inf, (16,)),
            ("ii", 4.0, 2.0, (16,)),
            ("iii", 2.0, math.inf, (4,)),
            ("ii", 4.0, math.inf, ()),
            ("ii", 4.0, math.inf, (4,)),
        ],
    )
    def test_invalid(self, args):
        with pytest.raises(HypothesisError):
            CaseConfig(*args)

    def test_low_blocks_only(self):
        with pytest.raises(HypothesisError):
            CaseConfig("ii", 4.0, math.inf, (16,), jmax=0)

    def test_block_kw(self):
        cfg = CaseConfig("i", 2.0, 2.0, (4,), K_b=1024, tol=1e-5)
        assert cfg.block_kw == {"K_b": 1024, "tol": 1e-5}


class TestLowerBound:
    @pytest.mark.parametrize("p", [2.0, 4.0])
    def test_limit_value(self, p):
        assert limit_value(p)[0] == pytest.approx(A_INF[p], rel=1e-12)

    def test_curve_small(self):
        c = lower_bound_curve(2.0, [-8, -3])
        assert c.a_inf == pytest.approx(A_INF[2.0], rel=1e-12)
        assert c.deviation_at(-8) < 1e-4
        assert c.min_ratio > 0.9
        # second component carries the lower bound on its own
        assert all(s.value > 0.5 * r.value for s, r in zip(c.second_component, c.reports))

    def test_first_component_nonzero(self):
        G, _ = lower_bound_spectrum()
        g = G.on_grid(make_grid(1 / 64, 256))
        first, second = (float(np.max(np.abs(g.component(k).values))) for k in (0, 1))
        assert second > 0
        assert first > 0.1 * second

    def test_curve_rejects_high_blocks(self):
        with pytest.raises(ValueError):
            lower_bound_curve(2.0, [-1, 0])


def test_field_blocks():
    assert field_blocks(gen_case_i(1, 2.0, 2.0, 16.0)) == [3, 4, 5]
