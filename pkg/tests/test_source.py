import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

from fwmhom.source import (
    PairSource,
    Statistics,
    herald,
    herald_ratio,
    sample_pair_count,
    two_mode_state,
)


class TestTwoModeState:
    def test_thermal_amplitudes(self):
        state = two_mode_state(PairSource(0.04))
        norm = math.sqrt(1 + 0.04 + 0.04**2)
        assert state.amplitude((0, 0)) == pytest.approx(1 / norm)
        assert state.amplitude((1, 1)) == pytest.approx(0.2 / norm)
        assert state.amplitude((2, 2)) == pytest.approx(0.04 / norm)

    def test_poisson_two_pair_coefficient(self):
        state = two_mode_state(PairSource(0.04, Statistics.POISSON))
        ratio = state.amplitude((2, 2)) / state.amplitude((0, 0))
        assert ratio == pytest.approx(0.04 / math.sqrt(2))

    def test_gaussian_alias(self):
        assert PairSource(0.1, "gaussian").statistics is Statistics.THERMAL

    def test_normalized_and_diagonal(self):
        state = two_mode_state(PairSource(0.3, truncation=4))
        assert state.is_normalized()
        assert all(a == b for a, b in state.terms)

    def test_rejects_large_n_bar(self):
        with pytest.raises(ValueError):
            two_mode_state(PairSource(1.2))

    def test_truncated_pmf_matches_state(self):
        src = PairSource(0.2, truncation=3)
        state = two_mode_state(src)
        probs = [abs(state.amplitude((n, n))) ** 2 for n in range(4)]
        assert np.allclose(probs, src.truncated_pmf())


class TestHerald:
    def test_published_operating_point(self):
        assert herald_ratio(0.025, 0.05) == pytest.approx(0.2156, abs=1e-4)

    def test_unit_idler_efficiency(self):
        # gamma = 1/2, so the ratio reduces to sqrt(n / (1 + n))
        assert herald_ratio(0.1, 1.0) == pytest.approx(math.sqrt(0.1 / 1.1))

    def test_state_normalized(self):
        h = herald(PairSource(0.025), 0.05)
        assert h.amp_one**2 + h.amp_two**2 == pytest.approx(1.0, abs=1e-15)
        assert h.gamma == pytest.approx(0.975)
        assert sum(h.weights.values()) == pytest.approx(1.0)

    @given(st.floats(1e-4, 0.5), st.floats(0.01, 0.5), st.floats(0.01, 0.5))
    def test_two_photon_weight_monotone(self, n_bar, eta_a, eta_b):
        lo, hi = sorted((eta_a, eta_b))
        # a less efficient idler detector is more likely to miss the second pair
        assert herald_ratio(n_bar, lo) >= herald_ratio(n_bar, hi)

    def test_rejects_zero_efficiency(self):
        with pytest.raises(ValueError):
            herald(PairSource(0.1), 0.0)


class TestSampling:
    def test_thermal_mean_and_distribution(self):
        src = PairSource(0.3)
        rng = np.random.default_rng(7)
        draws = sample_pair_count(src, rng, 200_000)
        assert draws.mean() == pytest.approx(0.3, abs=4 * math.sqrt(0.3 * 1.3 / 200_000))
        observed = np.bincount(draws, minlength=5)[:4]
        expected = src.pmf(np.arange(4)) * len(draws)
        tail_obs = len(draws) - observed.sum()
        tail_exp = len(draws) - expected.sum()
        chi2 = stats.chisquare(np.append(observed, tail_obs), np.append(expected, tail_exp))
        assert chi2.pvalue > 1e-3

    def test_thermal_bunching(self):
        # g2 = 2 for a single-mode thermal source, 1 for Poisson
        rng = np.random.default_rng(3)
        for statistics, g2 in ((Statistics.THERMAL, 2.0), (Statistics.POISSON, 1.0)):
            n = sample_pair_count(PairSource(0.5, statistics), rng, 400_000).astype(float)
            assert (n * (n - 1)).mean() / n.mean() ** 2 == pytest.approx(g2, rel=0.03)

    def test_poisson_pmf(self):
        src = PairSource(0.2, Statistics.POISSON)
        assert src.pmf(2) == pytest.approx(math.exp(-0.2) * 0.02)
