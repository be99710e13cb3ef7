"""Configuration types: unit conversion, validation, serialization."""
import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from tlsmc.config import TWO_PI, PriorRanges, RunConfig
from tlsmc.errors import ConfigError


class TestPriorRanges:
    def test_default_windows_converted_to_angular(self, prior):
        assert prior.g == (TWO_PI * 0.34, TWO_PI * 0.46)
        assert prior.wd == (-TWO_PI * 60.0, TWO_PI * 60.0)
        assert prior.t2d == (0.05, 0.1)  # times stay in us
        assert prior.t1q == (30.0, 44.0)

    def test_model_probs_normalized(self, prior):
        assert prior.model_probs == pytest.approx((1 / 3, 1 / 3, 1 / 3))
        skewed = PriorRanges(model_weights=(1.0, 1.0, 2.0))
        assert skewed.model_probs == pytest.approx((0.25, 0.25, 0.5))

    def test_variance_frozen(self, prior):
        # uniform variance (b-a)^2/12 in internal units:
        #   wd:  (2*pi*120)^2/12, g: (2*pi*0.12)^2/12, t2d: 0.05^2/12, t1q: 14^2/12
        assert prior.variance("wd") == pytest.approx(47374.10112522891, rel=1e-13)
        assert prior.variance("g") == pytest.approx(0.04737410112522891, rel=1e-13)
        assert prior.variance("t2d") == pytest.approx(0.00020833333333333337, rel=1e-13)
        assert prior.variance("t1q") == pytest.approx(16.333333333333332, rel=1e-13)

    @given(st.floats(0.01, 10), st.floats(0.01, 10))
    def test_variance_matches_width(self, lo, width):
        p = PriorRanges(t1q_us=(lo, lo + width))
        assert p.variance("t1q") == pytest.approx(width**2 / 12, rel=1e-12)

    @pytest.mark.parametrize(
        "kwargs",
        [
            dict(g_mhz=(0.5, 0.4)),  # inverted
            dict(t2d_us=(-0.01, 0.1)),  # negative time
            dict(t1q_us=(0.0, 44.0)),
            dict(model_weights=(1.0, -1.0, 1.0)),
            dict(model_weights=(0.0, 0.0, 0.0)),
        ],
    )
    def test_bad_ranges_rejected(self, kwargs):
        with pytest.raises(ConfigError):
            PriorRanges(**kwargs)

    def test_degenerate_range_allowed(self):
        # pinning a parameter (zero-width range) is legal and has zero variance
        p = PriorRanges(t2d_us=(0.075, 0.075))
        assert p.variance("t2d") == 0.0


class TestRunConfig:
    def test_defaults_match_reference_operating_point(self):
        cfg = RunConfig()
        assert cfg.particles == 40_000
        assert cfg.shrinkage == 0.995
        assert cfg.shots_per_setting == 200
        assert cfg.gamma == 0.0
        assert cfg.resample_threshold == 0.5

    @given(st.integers(1, 500), st.integers(1, 10_000))
    def test_total_shot_accounting(self, m_r, n_est):
        cfg = RunConfig(shots_per_setting=m_r, estimates=n_est)
        assert cfg.total_shots == m_r * (n_est - 1)

    @pytest.mark.parametrize(
        "kwargs",
        [
            dict(particles=0),
            dict(estimates=0),
            dict(shots_per_setting=0),
            dict(shrinkage=1.5),
            dict(shrinkage=-0.1),
            dict(gamma=0.5),
            dict(gamma=-0.01),
            dict(resample_threshold=-0.5),
            dict(true_defects=3),
            dict(error_normalization="zscore"),
        ],
    )
    def test_invalid_values_rejected(self, kwargs):
        with pytest.raises(ConfigError):
            RunConfig(**kwargs)

    def test_dict_roundtrip(self):
        cfg = RunConfig(
            particles=1234,
            estimates=7,
            seed=99,
            true_defects=1,
            prior=PriorRanges(g_mhz=(0.3, 0.5), model_weights=(2.0, 1.0, 1.0)),
        )
        assert RunConfig.from_dict(cfg.to_dict()) == cfg

    def test_from_dict_rejects_unknown_keys(self):
        with pytest.raises(ConfigError, match="particle_count"):
            RunConfig.from_dict({"particle_count": 100})
        with pytest.raises(ConfigError, match="g_ghz"):
            RunConfig.from_dict({"prior": {"g_ghz": [0.3, 0.5]}})

    def test_from_dict_accepts_lists(self):
        cfg = RunConfig.from_dict({"prior": {"t1q_us": [20.0, 50.0]}})
        assert cfg.prior.t1q == (20.0, 50.0)
