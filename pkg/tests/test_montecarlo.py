import math
from dataclasses import replace

import numpy as np
import pytest
from scipy import stats

from fwmhom import _routing
from fwmhom.experiment import ExperimentConfig, detection_probabilities
from fwmhom.fock import BeamSplitter, TruncationError
from fwmhom.montecarlo import (
    CountRecord,
    TrialPlan,
    available_backends,
    estimate_visibility,
    get_router,
    matched_cdf_table,
    simulate,
)


def high_rate_config(**kw):
    defaults = dict(n_bar=0.05, eta_s=0.6, eta_i=0.6, truncation=6)
    defaults.update(kw)
    return ExperimentConfig.published_setup(**defaults)


def test_uniform_budget():
    assert list(_routing.uniforms_needed(np.array([0, 1, 2]), np.array([1, 0, 3]))) == [5, 4, 19]


def test_cdf_table_properties():
    bs = BeamSplitter.from_coefficients(0.54, 0.46)
    table = matched_cdf_table(bs.t, bs.r, 6)
    assert not table.flags.writeable
    assert np.all(np.diff(table, axis=2) >= -1e-15)
    assert table[1, 1, 2] == 1.0
    # |1,1> through a balanced coupler never leaves one photon per port
    half = BeamSplitter.balanced()
    bal = matched_cdf_table(half.t, half.r, 4)
    assert bal[1, 1, 1] - bal[1, 1, 0] == pytest.approx(0.0, abs=1e-15)


def test_seed_reproducible():
    plan = TrialPlan(high_rate_config(), pulses=200_000, seed=42, batches=3)
    assert simulate(plan) == simulate(plan)
    other = simulate(replace(plan, seed=43))
    assert other != simulate(plan)


def test_workers_do_not_change_counts():
    plan = TrialPlan(high_rate_config(), pulses=200_000, seed=9, batches=4)
    assert simulate(plan, workers=1) == simulate(plan, workers=4)


@pytest.mark.skipif("compiled" not in available_backends(), reason="extension not built")
def test_backends_agree_exactly():
    plan = TrialPlan(high_rate_config(delay=2e-13, n_bar=0.3, truncation=8), pulses=100_000, seed=5)
    assert simulate(plan, backend="compiled") == simulate(plan, backend="python")


def test_unknown_backend():
    with pytest.raises(ValueError):
        get_router("fortran")


def test_truncation_guard():
    plan = TrialPlan(high_rate_config(n_bar=0.9), pulses=100_000, seed=1, max_photons=4)
    with pytest.raises(TruncationError):
        simulate(plan)


def test_batches_are_consistent():
    # independent batches of one run are draws from the same distribution
    cfg = high_rate_config()
    counts = [simulate(TrialPlan(cfg, pulses=100_000, seed=s)).singles["s3"] for s in range(8)]
    mean = np.mean(counts)
    chi2 = sum((c - mean) ** 2 / mean for c in counts)
    assert stats.chi2.sf(chi2, len(counts) - 1) > 1e-3


@pytest.mark.parametrize("delay", [0.0, 3e-13, math.inf])
def test_matches_exact_engine(delay):
    cfg = high_rate_config(delay=delay)
    pulses = 1_000_000
    rec = simulate(TrialPlan(cfg, pulses=pulses, seed=2024))
    exact = detection_probabilities(cfg, weights="pmf")
    checks = [(rec.fourfold, exact.fourfold), (rec.blocked_a, exact.blocked_a)]
    checks += [(rec.singles[d], exact.singles[d]) for d in rec.singles]
    checks += [(rec.twofold[p], exact.twofold[p]) for p in rec.twofold]
    for observed, p in checks:
        expected = p * pulses
        assert abs(observed - expected) <= 4 * math.sqrt(expected) + 1


def test_dark_counts_add_background():
    from fwmhom.detector import ThresholdDetector

    cfg = high_rate_config(n_bar=0.0)
    dark = ThresholdDetector(0.6, dark_rate_per_pulse=0.01)
    cfg = replace(cfg, det_s3=dark)
    rec = simulate(TrialPlan(cfg, pulses=100_000, seed=3))
    assert rec.singles["s3"] == pytest.approx(1000, abs=4 * math.sqrt(1000))
    assert rec.singles["s4"] == 0


class TestVisibilityEstimate:
    def test_synthetic_records(self):
        zero = CountRecord(pulses=1000, fourfold=100, blocked_a=5, blocked_b=5)
        far = CountRecord(pulses=2000, fourfold=1000, blocked_a=10, blocked_b=10)
        est = estimate_visibility(zero, far)
        assert est.raw == pytest.approx(0.8)
        assert est.net == pytest.approx(1 - 90 / 490)
        assert est.raw_err > 0

    def test_twofold_has_no_net(self):
        rec = CountRecord(pulses=10)
        rec.twofold["s3_s4"] = 4
        est = estimate_visibility(rec, rec, "s3_s4")
        assert est.raw == 0.0
        assert math.isnan(est.net)

    def test_empty_far_record(self):
        with pytest.raises(ZeroDivisionError):
            estimate_visibility(CountRecord(pulses=10), CountRecord(pulses=10))

    def test_net_exceeds_raw_at_high_power(self):
        cfg = high_rate_config(n_bar=0.2, truncation=10)
        zero = simulate(TrialPlan(cfg, pulses=500_000, seed=1))
        far = simulate(TrialPlan(replace(cfg, delay=math.inf), pulses=500_000, seed=2))
        est = estimate_visibility(zero, far)
        assert est.net > est.raw

    def test_record_csv(self):
        rec = CountRecord(pulses=3)
        assert len(rec.csv_row()) == len(CountRecord.csv_header())
        assert (rec + rec).pulses == 6


def test_environment_forces_fallback(monkeypatch):
    from fwmhom.montecarlo import default_backend

    monkeypatch.setenv("FWMHOM_BACKEND", "python")
    assert default_backend() == "python"
    monkeypatch.delenv("FWMHOM_BACKEND")
    assert default_backend() == available_backends()[0]
