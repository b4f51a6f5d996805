"""Threshold (click / no-click) detectors with lumped efficiency."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ThresholdDetector:
    eta: float
    dark_rate_per_pulse: float = 0.0

    def __post_init__(self) -> None:
        if not 0.0 <= self.eta <= 1.0:
            raise ValueError(f"eta must lie in [0, 1], got {self.eta}")
        if not 0.0 <= self.dark_rate_per_pulse < 1.0:
            raise ValueError(f"dark_rate_per_pulse must lie in [0, 1), got {self.dark_rate_per_pulse}")


def click_probability(n, det: ThresholdDetector):
    """Probability of a click for ``n`` incident photons, dark counts included."""
    n = np.asarray(n)
    if np.any(n < 0):
        raise ValueError("photon number must be non-negative")
    p = 1.0 - (1.0 - det.eta) ** n * (1.0 - det.dark_rate_per_pulse)
    return float(p) if p.ndim == 0 else p


def thin(n, det: ThresholdDetector, rng: np.random.Generator):
    """Binomial loss: number of the ``n`` photons that are registered."""
    return rng.binomial(n, det.eta)


def sample_click(n, det: ThresholdDetector, rng: np.random.Generator):
    survivors = thin(n, det, rng)
    dark = rng.random(np.shape(n)) < det.dark_rate_per_pulse
    return (np.asarray(survivors) >= 1) | dark
