import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mlaucb.errors import ConfigurationError, InsufficientDataError, ProtocolError
from mlaucb.estimator import ArmStatistics
from mlaucb.policies import (
    PolicyKind,
    chk_index,
    classical_index,
    indices,
    new_policy,
    record,
    select_arm,
)
from mlaucb.stats_core import RandomStream


def _feed(state, transcript):
    for arm, r, h in transcript:
        record(state, arm, r, h)
    return state


def _transcript(K, steps, seed=0):
    rng = RandomStream(seed, 0)
    out = []
    for t in range(steps):
        arm = t % K
        out.append((arm, float(rng.normal()) + arm, float(rng.normal())))
    return out


class TestInitialization:
    def test_mla_round_robin(self):
        state = new_policy("mla_ucb", 5, offline_pools=[[0.0]] * 5)
        picks = []
        for t in range(1, 21):
            assert state.t == t
            arm = select_arm(state)
            picks.append(arm)
            record(state, arm, 0.0, float(t % 3))
        assert picks == [(t - 1) % 5 for t in range(1, 21)]
        assert all(s.n == 4 for s in state.per_arm)

    @pytest.mark.parametrize("kind,c", [("classical_ucb", 1), ("chk_ucb", 3), ("mla_ucb", 4)])
    def test_counts_after_init(self, kind, c):
        K = 4
        state = new_policy(kind, K, known_sigmas=[1.0] * K)
        rng = RandomStream(1, 1)
        for _ in range(c * K):
            record(state, select_arm(state), float(rng.normal()), float(rng.normal()))
        assert [s.n for s in state.per_arm] == [c] * K
        assert state.t == 1 + c * K


class TestSelection:
    def test_classical_prefers_higher_mean(self):
        state = new_policy("classical_ucb", 2, known_sigmas=[1.0, 1.0])
        _feed(state, [(0, 2.0, None), (1, 1.0, None), (0, 2.0, None), (1, 1.0, None)])
        assert select_arm(state) == 0

    def test_baseline_tie_goes_to_lowest_index(self):
        state = new_policy("chk_ucb", 4)
        low = [0.0, 1.0, 2.0]
        high = [5.0, 6.0, 7.0]
        for arm, values in [(0, low), (1, low), (2, high), (3, high)]:
            for v in values:
                record(state, arm, v)
        a, b, c, d = indices(state)
        assert c == d and c > a
        assert select_arm(state) == 2

    def test_huge_reward_wins(self):
        state = _feed(new_policy("chk_ucb", 3), _transcript(3, 9))
        record(state, 1, 1e6, None)
        assert max(range(3), key=lambda k: state.per_arm[k].mean_r) == 1
        assert select_arm(state) == 1

    def test_replay_is_deterministic(self):
        tr = _transcript(3, 30, seed=5)
        a = _feed(new_policy("mla_ucb", 3, offline_pools=[[1.0, 2.0]] * 3), tr)
        b = _feed(new_policy("mla_ucb", 3, offline_pools=[[1.0, 2.0]] * 3), tr)
        assert a.per_arm == b.per_arm and a.history == b.history
        assert select_arm(a) == select_arm(b)

    @given(c=st.floats(-1e3, 1e3), kind=st.sampled_from(["classical_ucb", "chk_ucb", "mla_ucb"]),
           seed=st.integers(0, 50))
    @settings(max_examples=60, deadline=None)
    def test_translation_invariance(self, c, kind, seed):
        tr = _transcript(3, 24, seed)
        pools = [[0.5, -0.5, 1.5]] * 3
        base = _feed(new_policy(kind, 3, pools, [1.0] * 3), tr)
        moved = _feed(new_policy(kind, 3, pools, [1.0] * 3), [(a, r + c, h) for a, r, h in tr])
        for x, y in zip(indices(base), indices(moved)):
            assert y - x == pytest.approx(c, abs=1e-8 * (1 + abs(c)))
        assert select_arm(base) == select_arm(moved)


class TestProtocol:
    def test_mla_requires_surrogate(self):
        state = new_policy("mla_ucb", 2)
        with pytest.raises(ProtocolError):
            record(state, 0, 1.0)

    def test_arm_out_of_range(self):
        with pytest.raises(ProtocolError):
            record(new_policy("chk_ucb", 2), 2, 1.0)

    def test_classical_requires_sigmas(self):
        with pytest.raises(ConfigurationError):
            new_policy("classical_ucb", 2)

    def test_mla_degenerate_surrogates_fall_back(self):
        state = new_policy("mla_ucb", 2, offline_pools=[[1.0]] * 2)
        for t in range(8):
            arm = select_arm(state)
            record(state, arm, float(arm + t % 2), 1.0)  # constant surrogate stream
        assert select_arm(state) in (0, 1)

    def test_kind_strings(self):
        assert str(PolicyKind("mla_ucb")) == "mla_ucb"
        with pytest.raises(ValueError):
            PolicyKind("thompson")


class TestIndices:
    def test_baseline_zero_spread(self):
        s = ArmStatistics.from_samples([2.0, 2.0, 2.0], [0, 0, 0])
        assert chk_index(s, 100) == 2.0

    def test_baseline_at_e_squared(self):
        s = ArmStatistics.from_samples([0.0, 1.0, 2.0, 3.0], [0] * 4)
        sd = math.sqrt(1.25)  # biased variance of 0..3
        assert chk_index(s, math.e ** 2) == pytest.approx(1.5 + math.sqrt(math.e ** 2 - 1) * sd)
        assert math.sqrt(math.e ** 2 - 1) == pytest.approx(2.528, abs=1e-3)

    def test_baseline_monotone_in_time(self):
        s = ArmStatistics.from_samples([0.3, 1.0, -2.0, 0.5, 0.1], [0] * 5)
        vals = [chk_index(s, t) for t in range(1, 500, 7)]
        assert all(b >= a for a, b in zip(vals, vals[1:]))

    def test_baseline_needs_three(self):
        with pytest.raises(InsufficientDataError):
            chk_index(ArmStatistics.from_samples([1.0, 2.0], [0, 0]), 10)

    def test_classical_value(self):
        s = ArmStatistics.from_samples([-1.0, 1.0], [0, 0])
        assert classical_index(s, 1.0, math.e ** 2) == pytest.approx(math.sqrt(2))

    def test_classical_bonus_linear_in_sigma(self):
        s = ArmStatistics.from_samples([0.2, 0.4, 0.9], [0, 0, 0])
        b1 = classical_index(s, 1.0, 50) - s.mean_r
        b2 = classical_index(s, 2.0, 50) - s.mean_r
        assert b2 == pytest.approx(2 * b1)

    def test_classical_shrinks_with_pulls(self):
        s = ArmStatistics.from_samples([1.0] * 100_000, [0.0] * 100_000)
        assert classical_index(s, 1.0, 10) == pytest.approx(1.0, abs=0.01)
