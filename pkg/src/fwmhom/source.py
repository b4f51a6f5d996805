"""Photon-pair source states, heralding, and pair-number sampling."""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .fock import PureState


class Statistics(str, Enum):
    """Pair-number statistics of one source.

    ``THERMAL`` (also spelled ``gaussian``) is the single-mode filtered case
    with two-pair coefficient C = 1; ``POISSON`` uses C = 1/sqrt(2!).
    """

    THERMAL = "thermal"
    POISSON = "poisson"

    @classmethod
    def _missing_(cls, value):
        if isinstance(value, str):
            key = value.strip().lower()
            if key in ("gaussian", "geometric"):
                return cls.THERMAL
            for member in cls:
                if member.value == key:
                    return member
        return None


@dataclass(frozen=True)
class PairSource:
    n_bar: float
    statistics: Statistics = Statistics.THERMAL
    truncation: int = 2

    def __post_init__(self) -> None:
        object.__setattr__(self, "statistics", Statistics(self.statistics))
        if not (self.n_bar >= 0 and math.isfinite(self.n_bar)):
            raise ValueError(f"n_bar must be a finite non-negative number, got {self.n_bar}")
        if self.truncation < 1:
            raise ValueError(f"truncation must be >= 1, got {self.truncation}")

    def pair_coefficient(self, n: int) -> float:
        """Coefficient C_n multiplying alpha^n in the n-pair amplitude."""
        if self.statistics is Statistics.THERMAL:
            return 1.0
        return 1.0 / math.sqrt(math.factorial(n))

    def pmf(self, n):
        """Untruncated pair-number distribution P(n)."""
        n = np.asarray(n)
        if self.statistics is Statistics.THERMAL:
            return self.n_bar**n / (1.0 + self.n_bar) ** (n + 1)
        from scipy.stats import poisson

        return poisson.pmf(n, self.n_bar)

    def truncated_pmf(self) -> np.ndarray:
        """Pair-number weights of :func:`two_mode_state`, index = pair number."""
        alpha = math.sqrt(self.n_bar)
        amps = np.array([self.pair_coefficient(n) * alpha**n for n in range(self.truncation + 1)])
        weights = amps**2
        return weights / weights.sum()


@dataclass(frozen=True)
class HeraldedState:
    amp_one: float
    amp_two: float
    gamma: float

    def __post_init__(self) -> None:
        if self.amp_two < 0:
            raise ValueError("amp_two must be non-negative")
        if abs(self.amp_one**2 + self.amp_two**2 - 1.0) > 1e-12:
            raise ValueError("heralded state is not normalized")

    @property
    def weights(self) -> dict[int, float]:
        """Photon-number probabilities of the heralded signal."""
        return {1: self.amp_one**2, 2: self.amp_two**2}


def two_mode_state(src: PairSource) -> PureState:
    """Signal/idler state sum_n C_n alpha^n |n, n>, truncated and normalized."""
    if src.n_bar >= 1:
        raise ValueError(f"n_bar={src.n_bar} is outside the perturbative regime (n_bar < 1)")
    alpha = math.sqrt(src.n_bar)
    terms = {(n, n): src.pair_coefficient(n) * alpha**n for n in range(src.truncation + 1)}
    return PureState(terms, 2, n_max=2 * src.truncation).normalized()


def herald_ratio(n_bar: float, eta_i: float) -> float:
    """Unnormalized two-photon amplitude sqrt(2 n gamma / (1 + 2 n gamma))."""
    gamma = 1.0 - eta_i / 2.0
    x = 2.0 * n_bar * gamma
    return math.sqrt(x / (1.0 + x))


def herald(src: PairSource, eta_i: float) -> HeraldedState:
    """Signal state after an idler click, keeping up to two photons.

    Terms of order alpha^2 beyond the two-photon component are dropped and the
    remaining pair of amplitudes is renormalized.
    """
    if not 0.0 < eta_i <= 1.0:
        raise ValueError(f"eta_i must lie in (0, 1], got {eta_i}")
    if src.n_bar >= 1:
        raise ValueError(f"n_bar={src.n_bar} is outside the perturbative regime (n_bar < 1)")
    ratio = herald_ratio(src.n_bar, eta_i)
    norm = math.sqrt(1.0 + ratio**2)
    return HeraldedState(1.0 / norm, ratio / norm, 1.0 - eta_i / 2.0)


def sample_pair_count(src: PairSource, rng: np.random.Generator, size=None):
    """Draw pair numbers per pulse from the untruncated distribution."""
    if src.statistics is Statistics.THERMAL:
        # numpy's geometric starts at 1
        return rng.geometric(1.0 / (1.0 + src.n_bar), size=size) - 1
    return rng.poisson(src.n_bar, size=size)
