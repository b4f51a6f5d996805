"""Dual-source heralded HOM experiment: closed forms and exact Fock evaluation.

Detector labels follow the setup: ``i1``/``i2`` herald the idlers of sources
A and B, ``s3``/``s4`` watch the two coupler outputs. Source A's signal enters
coupler input 1, source B's enters input 2.

Partial distinguishability uses a two-temporal-mode picture: source A's
signal defines the matched mode and each of source B's signal photons lies in
it with probability ``w(delay) = V_max * exp(-k delay^2)``. Matched photons
interfere through the exact Fock transformation; the rest split independently.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import NamedTuple

import numpy as np

from .detector import ThresholdDetector, click_probability
from .fock import BeamSplitter, apply_beamsplitter, fock_state
from .source import PairSource, Statistics, two_mode_state
from .spectral import GaussianFilter, PumpPulse, dip_envelope, fwm_visibility

DETECTORS = ("i1", "i2", "s3", "s4")
PAIRS = tuple(f"{a}_{b}" for idx, a in enumerate(DETECTORS) for b in DETECTORS[idx + 1 :])


def _check_efficiency(name: str, value: float) -> None:
    if not 0.0 < value <= 1.0:
        raise ValueError(f"{name} must lie in (0, 1], got {value}")


def _check_n_bar(n_bar: float) -> None:
    if not 0.0 <= n_bar < 1.0:
        raise ValueError(f"n_bar must lie in [0, 1), got {n_bar}")


def p_interfering(n_bar: float, eta_i: float, eta_s: float) -> float:
    """Heralded coincidence probability with fully overlapping photons at 50:50."""
    _check_n_bar(n_bar)
    _check_efficiency("eta_i", eta_i)
    _check_efficiency("eta_s", eta_s)
    gamma, gamma_p = 1.0 - eta_i / 2.0, 1.0 - eta_s / 2.0
    return eta_s**2 * (2.0 * n_bar * gamma * gamma_p / (1.0 + 2.0 * n_bar * gamma))


def p_noninterfering(n_bar: float, eta_i: float, eta_s: float) -> float:
    """Heralded coincidence probability with fully distinguishable photons at 50:50."""
    _check_n_bar(n_bar)
    _check_efficiency("eta_i", eta_i)
    _check_efficiency("eta_s", eta_s)
    gamma, gamma_p = 1.0 - eta_i / 2.0, 1.0 - eta_s / 2.0
    return eta_s**2 * (0.5 + 6.0 * n_bar * gamma * gamma_p / (1.0 + 2.0 * n_bar * gamma))


class MultipairVisibility(NamedTuple):
    first_order: float
    exact_ratio: float


def visibility_multipair(n_bar: float, gamma: float, gamma_prime: float) -> MultipairVisibility:
    """Dip visibility limited by two-pair emission.

    ``first_order`` is (1 + 8 n g g') / (1 + 12 n g g'); ``exact_ratio`` is
    (P_noint - P_int) / P_noint evaluated from the two closed-form probabilities.
    """
    if n_bar < 0:
        raise ValueError("n_bar must be non-negative")
    for name, g in (("gamma", gamma), ("gamma_prime", gamma_prime)):
        if not 0.0 < g <= 1.0:
            raise ValueError(f"{name} must lie in (0, 1], got {g}")
    y = n_bar * gamma * gamma_prime
    first = (1.0 + 8.0 * y) / (1.0 + 12.0 * y)
    u = 2.0 * y / (1.0 + 2.0 * n_bar * gamma)
    p_int, p_noint = u, 0.5 + 3.0 * u
    return MultipairVisibility(first, (p_noint - p_int) / p_noint)


def fourfold_rate(rep_rate: float, n_bar: float, eta_s: float, eta_i: float) -> float:
    """Non-interfering fourfold rate R n^2 eta_s^2 eta_i^2 / 2 (counts/s)."""
    if rep_rate <= 0 or n_bar < 0 or eta_s < 0 or eta_i < 0:
        raise ValueError("rate parameters must be non-negative (rep_rate positive)")
    return rep_rate * n_bar**2 * eta_s**2 * eta_i**2 / 2.0


def multifold_rate(rep_rate: float, n_bar: float, eta_s: float, eta_i: float, k_pairs: int) -> float:
    """Raw 2k-fold rate from k pairs before any beamsplitter: R (n eta_s eta_i)^k.

    Unlike :func:`fourfold_rate` there is no splitting factor, so for k = 2
    the two differ by exactly 1/2.
    """
    if k_pairs < 2:
        raise ValueError("k_pairs must be at least 2")
    if rep_rate <= 0 or n_bar < 0 or eta_s < 0 or eta_i < 0:
        raise ValueError("rate parameters must be non-negative (rep_rate positive)")
    return rep_rate * (n_bar * eta_s * eta_i) ** k_pairs


@dataclass(frozen=True)
class ExperimentConfig:
    source_a: PairSource
    source_b: PairSource
    det_i1: ThresholdDetector
    det_i2: ThresholdDetector
    det_s3: ThresholdDetector
    det_s4: ThresholdDetector
    coupler: BeamSplitter
    pump: PumpPulse
    signal_filter: GaussianFilter
    idler_filter: GaussianFilter
    delay: float = 0.0

    def __post_init__(self) -> None:
        if self.source_a.statistics is not self.source_b.statistics:
            raise ValueError("both sources must share the same pair statistics")
        if math.isnan(self.delay):
            raise ValueError("delay must not be NaN")

    @classmethod
    def published_setup(
        cls,
        n_bar: float = 0.025,
        eta_s: float = 0.034,
        eta_i: float = 0.05,
        sigma_ratio: float = 0.80,
        coupler: BeamSplitter | None = None,
        statistics: Statistics | str = Statistics.THERMAL,
        truncation: int = 2,
        delay: float = 0.0,
    ) -> "ExperimentConfig":
        """708 nm, 1.5 ps, 82 MHz pump; 583/900 nm filters; effective sigma/sigma_p = 0.80."""
        pump = PumpPulse.from_duration(708e-9, 1.5e-12, 8.2e7)
        signal = GaussianFilter.from_wavelength(583e-9, 0.2e-9)
        signal = replace(signal, sigma=sigma_ratio * pump.sigma_p)
        idler = GaussianFilter.from_wavelength(900e-9, 2e-9)
        src = PairSource(n_bar, statistics, truncation)
        return cls(
            source_a=src,
            source_b=src,
            det_i1=ThresholdDetector(eta_i),
            det_i2=ThresholdDetector(eta_i),
            det_s3=ThresholdDetector(eta_s),
            det_s4=ThresholdDetector(eta_s),
            coupler=coupler or BeamSplitter.balanced(),
            pump=pump,
            signal_filter=signal,
            idler_filter=idler,
            delay=delay,
        )

    @property
    def sigma(self) -> float:
        return self.signal_filter.sigma

    @property
    def sigma_p(self) -> float:
        return self.pump.sigma_p

    @property
    def v_max(self) -> float:
        return fwm_visibility(self.sigma, self.sigma_p)

    def overlap(self, delay: float | None = None) -> float:
        delay = self.delay if delay is None else delay
        if math.isinf(delay):
            return 0.0
        return self.v_max * float(dip_envelope(delay, self.sigma, self.sigma_p))

    @property
    def detectors(self) -> dict[str, ThresholdDetector]:
        return {"i1": self.det_i1, "i2": self.det_i2, "s3": self.det_s3, "s4": self.det_s4}


@lru_cache(maxsize=4096)
def _fock_port3_distribution(n_in1: int, n_in2: int, t: float, r: float) -> tuple[float, ...]:
    """P(n3) for |n_in1, n_in2> via the Fock engine state transformation."""
    total = n_in1 + n_in2
    state = fock_state((n_in1, n_in2), n_max=max(total, 1))
    out = apply_beamsplitter(state, 0, 1, BeamSplitter(t, r))
    probs = [0.0] * (total + 1)
    for (n3, _), amp in out.terms.items():
        probs[n3] += abs(amp) ** 2
    return tuple(probs)


def _binomial_pmf(n: int, p: float) -> np.ndarray:
    k = np.arange(n + 1)
    comb = np.array([math.comb(n, int(i)) for i in k], dtype=float)
    return comb * p**k * (1.0 - p) ** (n - k)


def signal_port_distribution(n_a: int, n_b: int, overlap: float, bs: BeamSplitter) -> np.ndarray:
    """Distribution of photons reaching port 3 when both signals enter the coupler."""
    out = np.zeros(n_a + n_b + 1)
    matched_pmf = _binomial_pmf(n_b, overlap)
    for k, pk in enumerate(matched_pmf):
        if pk == 0.0:
            continue
        matched = np.array(_fock_port3_distribution(n_a, k, bs.t, bs.r))
        unmatched = np.array(_fock_port3_distribution(0, n_b - k, bs.t, bs.r))
        out += pk * np.convolve(matched, unmatched)
    return out


@dataclass(frozen=True)
class DetectionProbabilities:
    """Per-pulse click probabilities from the exact truncated model."""

    singles: dict[str, float]
    twofold: dict[str, float]
    fourfold: float
    blocked_a: float
    blocked_b: float


def _pipeline(
    weights_a: np.ndarray,
    weights_b: np.ndarray,
    config: ExperimentConfig,
    overlap: float,
    include_idlers: bool = True,
) -> DetectionProbabilities:
    dets = config.detectors
    bs = config.coupler
    singles = dict.fromkeys(DETECTORS, 0.0)
    twofold = dict.fromkeys(PAIRS, 0.0)
    fourfold = blocked_a = blocked_b = 0.0
    for n_a, wa in enumerate(weights_a):
        if wa == 0.0:
            continue
        c_i1 = click_probability(n_a, dets["i1"]) if include_idlers else 1.0
        for n_b, wb in enumerate(weights_b):
            if wb == 0.0:
                continue
            c_i2 = click_probability(n_b, dets["i2"]) if include_idlers else 1.0
            weight = wa * wb
            total = n_a + n_b
            m3 = np.arange(total + 1)
            c3 = click_probability(m3, dets["s3"])
            c4 = click_probability(total - m3, dets["s4"])
            dist = signal_port_distribution(n_a, n_b, overlap, bs)
            p3, p4, p34 = dist @ c3, dist @ c4, dist @ (c3 * c4)
            clicks = {"i1": c_i1, "i2": c_i2, "s3": p3, "s4": p4}
            for name in DETECTORS:
                singles[name] += weight * clicks[name]
            for pair in PAIRS:
                x, y = pair.split("_")
                joint = p34 if (x, y) == ("s3", "s4") else clicks[x] * clicks[y]
                twofold[pair] += weight * joint
            fourfold += weight * c_i1 * c_i2 * p34
            # one coupler input blocked: only the other source's signal is split
            only_b = np.array(_fock_port3_distribution(0, n_b, bs.t, bs.r))
            mb = np.arange(n_b + 1)
            blocked_a += weight * c_i1 * c_i2 * float(
                only_b @ (click_probability(mb, dets["s3"]) * click_probability(n_b - mb, dets["s4"]))
            )
            only_a = np.array(_fock_port3_distribution(n_a, 0, bs.t, bs.r))
            ma = np.arange(n_a + 1)
            blocked_b += weight * c_i1 * c_i2 * float(
                only_a @ (click_probability(ma, dets["s3"]) * click_probability(n_a - ma, dets["s4"]))
            )
    return DetectionProbabilities(singles, twofold, float(fourfold), float(blocked_a), float(blocked_b))


def _pair_weights(src: PairSource) -> np.ndarray:
    """Pair-number probabilities read off the truncated two-mode state."""
    state = two_mode_state(src)
    weights = np.zeros(src.truncation + 1)
    for (n_s, n_i), amp in state.terms.items():
        if n_s != n_i:
            raise AssertionError("pair state must be number-correlated")
        weights[n_s] += abs(amp) ** 2
    return weights


def _source_weights(src: PairSource, weights: str) -> np.ndarray:
    if weights == "state":
        return _pair_weights(src)
    if weights == "pmf":
        # untruncated distribution cut at the truncation order, tail mass dropped
        return np.asarray(src.pmf(np.arange(src.truncation + 1)), dtype=float)
    raise ValueError(f"weights must be 'state' or 'pmf', got {weights!r}")


def _heralded_weights(src: PairSource, det: ThresholdDetector, weights: str = "state") -> np.ndarray:
    """Signal photon-number distribution given an idler click.

    At n_bar = 0 the n_bar -> 0 limit (a single photon) is returned so that
    heralded quantities stay defined.
    """
    weights = _source_weights(src, weights) * click_probability(np.arange(src.truncation + 1), det)
    if src.n_bar == 0.0 or weights.sum() == 0.0:
        limit = np.zeros(src.truncation + 1)
        limit[1] = 1.0
        return limit
    return weights / weights.sum()


def detection_probabilities(
    config: ExperimentConfig, delay: float | None = None, weights: str = "state"
) -> DetectionProbabilities:
    """Exact per-pulse probabilities at ``delay`` (defaults to the configured delay).

    ``weights="state"`` takes pair-number probabilities from the truncated
    two-mode state (amplitudes C_n alpha^n with alpha^2 = n_bar), which match
    the source distribution to first order in n_bar. ``weights="pmf"`` uses
    the source's own distribution up to the truncation order instead, which is
    what the Monte Carlo samples.
    """
    return _pipeline(
        _source_weights(config.source_a, weights),
        _source_weights(config.source_b, weights),
        config,
        config.overlap(delay),
    )


def heralded_probabilities(
    config: ExperimentConfig, overlap: float, weights: str = "state"
) -> DetectionProbabilities:
    """Signal-side probabilities conditioned on both heralds firing."""
    return _pipeline(
        _heralded_weights(config.source_a, config.det_i1, weights),
        _heralded_weights(config.source_b, config.det_i2, weights),
        config,
        overlap,
        include_idlers=False,
    )


def fock_heralded_coincidence(
    n_bar: float,
    eta_i: float,
    eta_s: float,
    interfering: bool,
    statistics: Statistics | str = Statistics.THERMAL,
    truncation: int = 2,
) -> float:
    """Brute-force counterpart of :func:`p_interfering` / :func:`p_noninterfering`.

    Builds each truncated source state, heralds on the idler click, sends the
    signals through a balanced coupler (one coupler or two separate ones) and
    applies threshold detection to both outputs.
    """
    config = ExperimentConfig.published_setup(
        n_bar=n_bar, eta_s=eta_s, eta_i=eta_i, statistics=statistics, truncation=truncation
    )
    return heralded_probabilities(config, 1.0 if interfering else 0.0).fourfold


@dataclass(frozen=True)
class CoincidenceReport:
    p_fourfold: float
    rate: float
    blocked_a: float
    blocked_b: float
    visibility_raw: float
    visibility_net: float
    p_fourfold_zero: float = 0.0
    p_fourfold_far: float = 0.0
    v_max: float = 1.0
    overlap: float = 0.0
    probabilities: DetectionProbabilities | None = field(default=None, repr=False)


def _visibilities(zero: DetectionProbabilities, far: DetectionProbabilities) -> tuple[float, float]:
    if far.fourfold <= 0.0:
        raise ZeroDivisionError("far-from-overlap fourfold probability is zero")
    raw = 1.0 - zero.fourfold / far.fourfold
    background = far.blocked_a + far.blocked_b
    denom = far.fourfold - background
    if denom <= 0.0:
        raise ZeroDivisionError("background subtraction leaves no fourfold signal")
    net = 1.0 - (zero.fourfold - background) / denom
    return raw, net


def run_exact(config: ExperimentConfig) -> CoincidenceReport:
    """Exact (two-pair truncated) fourfold rates, blocked-input backgrounds and visibilities.

    Visibilities compare zero delay with infinite delay. They are computed from
    herald-conditioned probabilities, which give the same ratios as per-pulse
    values but remain defined at n_bar = 0.
    """
    here = detection_probabilities(config)
    zero = detection_probabilities(config, 0.0)
    far = detection_probabilities(config, math.inf)
    raw, net = _visibilities(
        heralded_probabilities(config, config.overlap(0.0)), heralded_probabilities(config, 0.0)
    )
    return CoincidenceReport(
        p_fourfold=here.fourfold,
        rate=here.fourfold * config.pump.rep_rate,
        blocked_a=here.blocked_a,
        blocked_b=here.blocked_b,
        visibility_raw=raw,
        visibility_net=net,
        p_fourfold_zero=zero.fourfold,
        p_fourfold_far=far.fourfold,
        v_max=config.v_max,
        overlap=config.overlap(),
        probabilities=here,
    )


def fourfold_curve(config: ExperimentConfig, delays, weights: str = "state") -> np.ndarray:
    """Exact per-pulse fourfold probability at each delay."""
    return np.array(
        [detection_probabilities(config, float(d), weights).fourfold for d in np.atleast_1d(delays)]
    )
