"""Scoring math checked against independently computed values."""

from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from fedplane.ranker import ProviderRanker


def exact_score(outcomes: list[tuple[bool, int]], tau_ms: int = 60_000) -> Fraction:
    """Rational-arithmetic reference for the score of one provider window."""
    successes = [t for ok, t in outcomes if ok]
    p = Fraction(len(successes) + 1, len(outcomes) + 2)
    if successes:
        ordered = sorted(successes)
        mid = len(ordered) // 2
        if len(ordered) % 2:
            t_est = Fraction(ordered[mid])
        else:
            t_est = Fraction(ordered[mid - 1] + ordered[mid], 2)
    else:
        t_est = Fraction(tau_ms)
    return p / (1 + t_est / tau_ms)


class TestScore:
    def test_unknown_provider_gets_prior(self):
        r = ProviderRanker()
        assert r.p_success("pr-x") == 0.5
        assert r.time_estimate_ms("pr-x") == 60_000.0
        assert r.score("pr-x") == pytest.approx(0.25)

    def test_two_provider_worked_example(self):
        # A: 4/4 successes at 30s ish: p=(4+1)/(4+2)=5/6, median 30s,
        #    score=(5/6)/(1+0.5)=5/9
        # B: 2/4 successes at 10s: p=3/6=1/2, median 10s, score=0.5/(7/6)=3/7
        r = ProviderRanker()
        for t in (28_000, 30_000, 30_000, 32_000):
            r.observe("pr-a", True, t)
        for ok, t in ((True, 10_000), (True, 10_000), (False, 40_000), (False, 50_000)):
            r.observe("pr-b", ok, t)
        assert r.score("pr-a") == pytest.approx(5 / 9)
        assert r.score("pr-b") == pytest.approx(3 / 7)
        assert [pid for pid, _ in r.rank(["pr-b", "pr-a"])] == ["pr-a", "pr-b"]

    def test_failures_do_not_move_time_estimate(self):
        r = ProviderRanker()
        r.observe("pr-a", True, 10_000)
        r.observe("pr-a", False, 500_000)
        assert r.time_estimate_ms("pr-a") == 10_000.0

    def test_ties_broken_by_provider_id(self):
        r = ProviderRanker()
        ranked = r.rank(["pr-b", "pr-a", "pr-c"])
        assert [pid for pid, _ in ranked] == ["pr-a", "pr-b", "pr-c"]

    def test_window_evicts_oldest(self):
        r = ProviderRanker(window=3)
        r.observe("pr-a", False, 1_000)
        for _ in range(3):
            r.observe("pr-a", True, 1_000)
        # the failure fell out of the window
        assert r.p_success("pr-a") == pytest.approx(4 / 5)
        assert r.sample_count("pr-a") == 3

    @given(
        st.lists(
            st.tuples(st.booleans(), st.integers(0, 600_000)),
            min_size=0,
            max_size=50,
        )
    )
    def test_matches_rational_oracle(self, outcomes):
        r = ProviderRanker()
        for ok, t in outcomes:
            r.observe("pr-a", ok, t)
        assert r.score("pr-a") == pytest.approx(float(exact_score(outcomes)), rel=1e-12)

    @given(
        st.lists(st.tuples(st.booleans(), st.integers(0, 600_000)), max_size=49),
    )
    def test_extra_success_at_t_est_never_hurts(self, outcomes):
        """Adding a success at the current time estimate keeps the median
        fixed and bumps p_success, so the score must not drop. Holds only
        while the window is not evicting."""
        r = ProviderRanker()
        for ok, t in outcomes:
            r.observe("pr-a", ok, t)
        before = r.score("pr-a")
        r.observe("pr-a", True, int(r.time_estimate_ms("pr-a")))
        assert r.score("pr-a") >= before - 1e-12

    @given(st.integers(0, 49), st.integers(0, 50))
    def test_formula_monotone_in_success_count(self, a, b):
        """With t_est held fixed, more successes out of the same n never
        lowers the score."""
        tau = 60_000
        n = 50
        lo, hi = sorted((a, b))
        s_lo = ((lo + 1) / (n + 2)) / (1 + 10_000 / tau)
        s_hi = ((hi + 1) / (n + 2)) / (1 + 10_000 / tau)
        assert s_hi >= s_lo

    def test_state_round_trip(self):
        r = ProviderRanker(window=5)
        for i in range(7):
            r.observe("pr-a", i % 2 == 0, i * 1_000)
        r.observe("pr-b", True, 3_000)
        state = r.to_state()
        other = ProviderRanker()
        other.from_state(state)
        assert other.score("pr-a") == r.score("pr-a")
        assert other.sample_count("pr-a") == 5
        other.observe("pr-a", True, 0)
        assert other.sample_count("pr-a") == 5
