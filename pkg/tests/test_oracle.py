"""Dense-grid exact Bayes reference and its agreement with the particle engine."""
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tlsmc.config import PriorRanges
from tlsmc.errors import DegenerateUpdateError
from tlsmc.oracle import (
    GridPosterior,
    oracle_moments,
    oracle_sequential_update,
    oracle_update,
    reduced_scenario_grid,
)
from tlsmc.physics import MeasurementSetting, ParticleVector
from tlsmc.smc import MeasurementRecord, ParticleCloud, sequential_update


def _t1q_for_pe(pe, t):
    return -t / math.log(pe)


def _two_point_grid(pe_a, pe_b, t, prior_a=0.5):
    pos = np.array(
        [
            ParticleVector(t1q=_t1q_for_pe(pe_a, t)).to_array(),
            ParticleVector(t1q=_t1q_for_pe(pe_b, t)).to_array(),
        ]
    )
    return GridPosterior(pos, np.array([prior_a, 1 - prior_a]), np.array([0, 0]))


class TestGridPosterior:
    def test_probability_validation(self):
        pos = np.array([ParticleVector(t1q=40.0).to_array()])
        with pytest.raises(ValueError):
            GridPosterior(pos, np.array([0.9]), np.array([0]))
        with pytest.raises(ValueError):
            GridPosterior(pos, np.array([-1.0, 2.0]), np.array([0, 0]))

    def test_reduced_scenario_layout(self, prior):
        grid = reduced_scenario_grid(prior, points=101)
        assert grid.positions.shape == (1 + 101 * 101, 7)
        assert grid.probs[0] == 0.5
        assert grid.strata[0] == 0 and np.all(grid.strata[1:] == 1)
        # remaining mass spread evenly over the defect hypotheses
        np.testing.assert_allclose(grid.probs[1:], 0.5 / 101**2, rtol=1e-15)
        # (g, wd) rectangle spans the prior box; nuisance params pinned
        g, wd = grid.positions[1:, 0], grid.positions[1:, 2]
        assert (g.min(), g.max()) == prior.g
        assert (wd.min(), wd.max()) == prior.wd
        assert np.all(grid.positions[1:, 4] == 0.075)
        assert np.all(grid.positions[:, 6] == 37.0)
        assert grid.stratum_weights() == pytest.approx([0.5, 0.5, 0.0], abs=1e-12)

    def test_immutable_points_across_updates(self, prior):
        grid = reduced_scenario_grid(prior, points=11)
        rec = MeasurementRecord(MeasurementSetting(wq=0.0, t=1.0), 5, 2)
        out = oracle_update(grid, rec)
        assert out.positions is grid.positions  # shared, never copied or moved


class TestOracleUpdate:
    def test_constant_likelihood_fixed_point(self):
        grid = _two_point_grid(0.7, 0.7, t=1.0, prior_a=0.3)
        rec = MeasurementRecord(MeasurementSetting(wq=0.0, t=1.0), 9, 4)
        out = oracle_update(grid, rec)
        assert out.probs == pytest.approx([0.3, 0.7], rel=1e-14)

    def test_two_point_direct(self):
        grid = _two_point_grid(0.9, 0.1, t=1.0)
        rec = MeasurementRecord(MeasurementSetting(wq=0.0, t=1.0), 1, 1)
        out = oracle_update(grid, rec)
        assert out.probs == pytest.approx([0.9, 0.1], rel=1e-12)

    def test_batching_commutes(self):
        grid = _two_point_grid(0.85, 0.35, t=1.0, prior_a=0.4)
        s = MeasurementSetting(wq=0.0, t=1.0)
        batch = oracle_update(grid, MeasurementRecord(s, 30, 11))
        singles = [MeasurementRecord(s, 1, 1)] * 11 + [MeasurementRecord(s, 1, 0)] * 19
        seq = oracle_sequential_update(grid, singles)
        np.testing.assert_allclose(seq.probs, batch.probs, rtol=1e-12)

    def test_zero_likelihood_raises(self):
        grid = _two_point_grid(0.9, 0.1, t=1.0)
        # certain-excited record after ~0 survival: all likelihoods vanish
        rec = MeasurementRecord(MeasurementSetting(wq=0.0, t=50_000.0), 1, 1)
        with pytest.raises(DegenerateUpdateError):
            oracle_update(grid, rec)


class TestOracleMoments:
    def test_point_mass(self):
        pos = np.array(
            [
                ParticleVector(t1q=40.0).to_array(),
                ParticleVector(g1=2.5, wd1=3.0, t2d1=0.07, t1q=35.0).to_array(),
            ]
        )
        gp = GridPosterior(pos, np.array([0.0, 1.0]), np.array([0, 1]))
        m = oracle_moments(gp)
        np.testing.assert_allclose(m.mean, pos[1], rtol=1e-15)
        np.testing.assert_allclose(m.cov, 0.0, atol=1e-18)
        assert m.stratum_weights == pytest.approx([0.0, 1.0, 0.0])

    def test_symmetric_pair_mean_at_midpoint(self):
        a = ParticleVector(g1=2.0, wd1=-5.0, t2d1=0.06, t1q=30.0).to_array()
        b = ParticleVector(g1=3.0, wd1=5.0, t2d1=0.08, t1q=40.0).to_array()
        gp = GridPosterior(np.array([a, b]), np.array([0.5, 0.5]), np.array([1, 1]))
        m = oracle_moments(gp)
        np.testing.assert_allclose(m.mean, (a + b) / 2, rtol=1e-15)
        # var of each coordinate is ((b-a)/2)^2
        np.testing.assert_allclose(np.diag(m.cov), ((b - a) / 2) ** 2, atol=1e-18)

    def test_covariance_symmetric(self, prior):
        grid = reduced_scenario_grid(prior, points=21)
        rec = MeasurementRecord(MeasurementSetting(wq=0.0, t=2.0), 10, 3)
        m = oracle_moments(oracle_update(grid, rec))
        np.testing.assert_array_equal(m.cov, m.cov.T)


class TestEngineAgreement:
    """The particle engine run on the oracle's own hypothesis set, without
    resampling, must reproduce the oracle weights (dual-route check: the
    engine uses a hand-rolled log-space binomial, the oracle linear-space
    scipy pmf)."""

    @given(st.integers(0, 2**31))
    @settings(max_examples=10)
    def test_weights_match_oracle(self, seed):
        rng = np.random.default_rng(seed)
        prior = PriorRanges()
        grid = reduced_scenario_grid(prior, points=21)
        cloud = ParticleCloud(grid.positions, grid.probs, grid.strata)
        records = []
        for _ in range(6):
            s = MeasurementSetting(
                wq=float(rng.uniform(*prior.wd)), t=float(rng.uniform(0.05, 20.0))
            )
            shots = int(rng.integers(1, 40))
            records.append(MeasurementRecord(s, shots, int(rng.integers(0, shots + 1))))
        gp = oracle_sequential_update(grid, records)
        smc = sequential_update(cloud, records)
        np.testing.assert_allclose(smc.weights, gp.probs, rtol=1e-10, atol=1e-300)

    def test_agreement_with_readout_error(self):
        prior = PriorRanges()
        grid = reduced_scenario_grid(prior, points=11)
        cloud = ParticleCloud(grid.positions, grid.probs, grid.strata)
        s = MeasurementSetting(wq=100.0, t=5.0)
        rec = MeasurementRecord(s, 25, 9)
        gp = oracle_update(grid, rec, gamma=0.12)
        smc = __import__("tlsmc.smc", fromlist=["bayes_update"]).bayes_update(
            cloud, rec, gamma=0.12
        )
        np.testing.assert_allclose(smc.weights, gp.probs, rtol=1e-10)
