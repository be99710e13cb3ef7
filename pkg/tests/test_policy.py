"""Measurement-setting policy: posterior-marginal frequency draw, r*T1_hat time draw."""
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tlsmc.config import TWO_PI, PriorRanges
from tlsmc.physics import MeasurementSetting, ParticleVector
from tlsmc.policy import PolicyConfig, choose_frequency, choose_setting, choose_time
from tlsmc.smc import ParticleCloud, expected_t1, init_cloud


def _cloud(*pairs):
    pos = np.array([p.to_array() for p, _ in pairs])
    w = np.array([w for _, w in pairs])
    return ParticleCloud(pos, w)


WINDOW = PolicyConfig(freq_window=(-TWO_PI * 60.0, TWO_PI * 60.0))

_K0 = ParticleVector(t1q=40.0)
_K1 = ParticleVector(g1=2.5, wd1=100.0, t2d1=0.07, t1q=37.0)
_K2 = ParticleVector(2.6, 2.4, -50.0, 200.0, 0.06, 0.08, 35.0)


class TestChooseFrequency:
    def test_no_defect_posterior_falls_back_to_uniform(self):
        cloud = _cloud((_K0, 0.6), (ParticleVector(t1q=31.0), 0.4))
        rng = np.random.default_rng(0)
        draws = np.array([choose_frequency(cloud, WINDOW, rng) for _ in range(4000)])
        lo, hi = WINDOW.freq_window
        assert draws.min() >= lo and draws.max() <= hi
        # roughly uniform: quartile counts within 5 sigma of 1000
        counts, _ = np.histogram(draws, bins=4, range=(lo, hi))
        assert np.all(np.abs(counts - 1000) < 5 * math.sqrt(1000 * 0.75))

    def test_point_mass_returns_exact_coordinate(self):
        x = ParticleVector(g1=2.5, wd1=TWO_PI * 10.0, t2d1=0.07, t1q=37.0)
        cloud = _cloud((x, 1.0))
        rng = np.random.default_rng(1)
        for _ in range(20):
            assert choose_frequency(cloud, WINDOW, rng) == TWO_PI * 10.0

    def test_branch_mixture_rate(self):
        """W1 = W2 = 0.5: the first-defect branch fires with probability
        P_1p/(P_1p + P_2p) = 1/1.5; identified by disjoint coordinates."""
        k1 = ParticleVector(g1=2.5, wd1=111.0, t2d1=0.07, t1q=37.0)
        k2 = ParticleVector(2.6, 2.4, 222.0, 333.0, 0.06, 0.08, 35.0)
        cloud = _cloud((k1, 0.5), (k2, 0.5))
        rng = np.random.default_rng(2)
        n = 100_000
        draws = np.array([choose_frequency(cloud, WINDOW, rng) for _ in range(n)])
        # wd2 branch draws 333 only; wd1 branch draws 111 or 222
        p2 = np.mean(draws == 333.0)
        sigma = math.sqrt((1 / 3) * (2 / 3) / n)
        assert abs(p2 - 1 / 3) < 3 * sigma
        assert set(np.unique(draws)) == {111.0, 222.0, 333.0}

    def test_wd1_branch_weighs_both_strata(self):
        # within the wd1 branch, a k=2 particle competes by weight with k=1
        k1 = ParticleVector(g1=2.5, wd1=111.0, t2d1=0.07, t1q=37.0)
        k2 = ParticleVector(2.6, 2.4, 222.0, 333.0, 0.06, 0.08, 35.0)
        cloud = _cloud((k1, 0.25), (k2, 0.75))
        rng = np.random.default_rng(3)
        n = 100_000
        draws = np.array([choose_frequency(cloud, WINDOW, rng) for _ in range(n)])
        # P(222 | wd1 branch) = 0.75; branch prob = 1/(1+0.75)
        want = (1 / 1.75) * 0.75
        got = np.mean(draws == 222.0)
        assert abs(got - want) < 3 * math.sqrt(want * (1 - want) / n)

    @given(st.integers(0, 2**31))
    @settings(max_examples=30)
    def test_output_in_support_or_window(self, seed):
        rng = np.random.default_rng(seed)
        cloud = init_cloud(PriorRanges(), 60, rng)
        f = choose_frequency(cloud, WINDOW, rng)
        coords = set(cloud.positions[:, 2]) | set(cloud.positions[:, 3])
        lo, hi = WINDOW.freq_window
        assert (f in coords) or (lo <= f <= hi)

    def test_concentrated_posterior_concentrates_settings(self):
        # all defect hypotheses within a tight ball -> every draw lands there
        rng = np.random.default_rng(4)
        base = 100.0
        pairs = [
            (ParticleVector(g1=2.5, wd1=base + eps, t2d1=0.07, t1q=37.0), 0.1)
            for eps in np.linspace(-0.5, 0.5, 10)
        ]
        cloud = _cloud(*pairs)
        draws = [choose_frequency(cloud, WINDOW, rng) for _ in range(200)]
        assert all(abs(f - base) <= 0.5 for f in draws)


class TestChooseTime:
    def test_uniform_over_bare_lifetime(self):
        cloud = _cloud((_K0, 1.0))
        rng = np.random.default_rng(5)
        n = 100_000
        ts = np.array([choose_time(cloud, 0.0, rng) for _ in range(n)])
        assert ts.min() > 0.0  # r in (0, 1], never 0
        assert ts.max() <= 40.0
        # mean of U(0, 40] is 20, sd of the sample mean = 40/sqrt(12 n)
        assert abs(ts.mean() - 20.0) < 3 * 40.0 / math.sqrt(12 * n)

    def test_bounded_by_posterior_t1(self):
        cloud = _cloud((_K1, 0.5), (_K2, 0.5))
        rng = np.random.default_rng(6)
        for wq in (-50.0, 100.0, 200.0):
            cap = expected_t1(cloud, wq)
            ts = [choose_time(cloud, wq, rng) for _ in range(500)]
            assert all(0.0 < t <= cap for t in ts)

    def test_tracks_probe_frequency(self):
        # probing on a defect shortens the posterior-expected lifetime and the
        # drawn times with it
        cloud = _cloud((_K1, 1.0))
        rng = np.random.default_rng(7)
        on = np.array([choose_time(cloud, 100.0, rng) for _ in range(2000)])
        off = np.array([choose_time(cloud, -300.0, rng) for _ in range(2000)])
        assert on.max() < off.mean()


class TestChooseSetting:
    def test_returns_valid_setting(self):
        rng = np.random.default_rng(8)
        cloud = init_cloud(PriorRanges(), 200, rng)
        s = choose_setting(cloud, WINDOW, rng)
        assert isinstance(s, MeasurementSetting)
        assert s.t > 0

    def test_reproducible_stream(self):
        cloud = init_cloud(PriorRanges(), 200, np.random.default_rng(9))
        a = [choose_setting(cloud, WINDOW, np.random.default_rng(99)) for _ in range(1)]
        b = [choose_setting(cloud, WINDOW, np.random.default_rng(99)) for _ in range(1)]
        assert a == b

    def test_time_conditioned_on_drawn_frequency(self):
        # the wait-time cap must follow the frequency drawn in the same call:
        # a posterior peaked at wd=100 yields short waits when the frequency
        # branch picks 100
        cloud = _cloud((_K1, 0.95), (_K0, 0.05))
        rng = np.random.default_rng(10)
        settings_drawn = [choose_setting(cloud, WINDOW, rng) for _ in range(300)]
        on_defect = [s.t for s in settings_drawn if s.wq == 100.0]
        cap = expected_t1(cloud, 100.0)
        assert len(on_defect) > 200
        assert all(t <= cap for t in on_defect)
