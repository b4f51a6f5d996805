"""Gaussian pump and filter spectra, HOM visibility and dip shape.

Bandwidths follow the amplitude convention ``f(w) ~ exp(-(w - w0)^2 / sigma^2)``
in rad/s. Only the ratio ``sigma / sigma_p`` enters the visibilities, so the
convention matters for unit conversion and for the absolute dip width.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .fock import BeamSplitter

SPEED_OF_LIGHT = 299_792_458.0
# time-bandwidth product of a transform-limited Gaussian pulse (intensity FWHMs)
GAUSSIAN_TBP = 2.0 * math.log(2.0) / math.pi
_FWHM_PER_SIGMA = math.sqrt(2.0 * math.log(2.0))


class QuadratureError(RuntimeError):
    def __init__(self, message: str, error_estimate: float):
        super().__init__(f"{message} (achieved error estimate {error_estimate:.3e})")
        self.error_estimate = error_estimate


def _check_bandwidths(sigma: float, sigma_p: float) -> None:
    if not (sigma > 0 and sigma_p > 0):
        raise ValueError(f"bandwidths must be positive, got sigma={sigma}, sigma_p={sigma_p}")
    if not (math.isfinite(sigma) and math.isfinite(sigma_p)):
        raise ValueError("bandwidths must be finite")


@dataclass(frozen=True)
class GaussianFilter:
    center: float
    sigma: float

    def __post_init__(self) -> None:
        if not (self.center > 0 and self.sigma > 0):
            raise ValueError(f"filter center and sigma must be positive, got {self}")

    @classmethod
    def from_wavelength(cls, center_wavelength: float, fwhm_wavelength: float) -> "GaussianFilter":
        return cls(
            2.0 * math.pi * SPEED_OF_LIGHT / center_wavelength,
            wavelength_filter_to_sigma(center_wavelength, fwhm_wavelength),
        )

    def amplitude(self, omega):
        return np.exp(-((omega - self.center) ** 2) / self.sigma**2)


@dataclass(frozen=True)
class PumpPulse:
    center: float
    sigma_p: float
    rep_rate: float
    duration: float | None = None

    def __post_init__(self) -> None:
        if not (self.center > 0 and self.sigma_p > 0 and self.rep_rate > 0):
            raise ValueError(f"pump center, sigma_p and rep_rate must be positive, got {self}")
        if self.duration is not None:
            bandwidth_hz = self.sigma_p * _FWHM_PER_SIGMA / (2.0 * math.pi)
            product = self.duration * bandwidth_hz
            if abs(product / GAUSSIAN_TBP - 1.0) > 0.01:
                raise ValueError(
                    f"duration-bandwidth product {product:.4f} is not transform limited "
                    f"({GAUSSIAN_TBP:.4f} expected)"
                )

    @classmethod
    def from_duration(cls, wavelength: float, duration: float, rep_rate: float) -> "PumpPulse":
        """Transform-limited Gaussian pulse with intensity FWHM ``duration`` (s)."""
        if duration <= 0:
            raise ValueError("pulse duration must be positive")
        bandwidth_hz = GAUSSIAN_TBP / duration
        sigma_p = 2.0 * math.pi * bandwidth_hz / _FWHM_PER_SIGMA
        return cls(2.0 * math.pi * SPEED_OF_LIGHT / wavelength, sigma_p, rep_rate, duration)

    def amplitude(self, omega):
        return np.exp(-((omega - self.center) ** 2) / self.sigma_p**2)


@dataclass(frozen=True)
class WavelengthTriple:
    lambda_p: float
    lambda_s: float
    lambda_i: float

    def __post_init__(self) -> None:
        if min(self.lambda_p, self.lambda_s, self.lambda_i) <= 0:
            raise ValueError(f"wavelengths must be positive, got {self}")


@dataclass(frozen=True)
class EnergyCheck:
    passed: bool
    mismatch: float


def fwm_visibility(sigma: float, sigma_p: float) -> float:
    """Maximum HOM visibility of heralded photons from a four-wave-mixing source."""
    _check_bandwidths(sigma, sigma_p)
    x2 = (sigma / sigma_p) ** 2
    return math.sqrt(1.0 + x2) / (1.0 + x2 / 2.0)


def pdc_visibility(sigma: float, sigma_p: float) -> float:
    """The same quantity for a parametric down-conversion source (one pump photon)."""
    _check_bandwidths(sigma, sigma_p)
    x2 = (sigma / sigma_p) ** 2
    return math.sqrt(1.0 + 2.0 * x2) / (1.0 + x2)


def invert_fwm_visibility(visibility: float) -> float:
    """Bandwidth ratio sigma/sigma_p at which :func:`fwm_visibility` equals ``visibility``."""
    if not 0.0 < visibility < 1.0:
        raise ValueError("visibility must lie in (0, 1)")
    return brentq(lambda x: fwm_visibility(x, 1.0) - visibility, 1e-9, 1e6, xtol=1e-14)


def dip_exponent_scale(sigma: float, sigma_p: float) -> float:
    """Coefficient ``k`` of the dip envelope ``exp(-k * delay^2)``."""
    _check_bandwidths(sigma, sigma_p)
    return sigma**2 / (2.0 * (1.0 + sigma**2 / (2.0 * sigma_p**2)))


def dip_envelope(delta_t, sigma: float, sigma_p: float):
    return np.exp(-dip_exponent_scale(sigma, sigma_p) * np.square(delta_t))


def dip_envelope_fwhm(sigma: float, sigma_p: float) -> float:
    return 2.0 * math.sqrt(math.log(2.0) / dip_exponent_scale(sigma, sigma_p))


def dip_profile(delta_t, sigma: float, sigma_p: float, bs: BeamSplitter, n_bar: float):
    """Relative fourfold probability versus delay; the overall normalization is set to 1."""
    if n_bar < 0:
        raise ValueError("n_bar must be non-negative")
    t2, r2 = bs.transmittance, bs.reflectance
    v = fwm_visibility(sigma, sigma_p)
    return n_bar**2 * (r2 * r2 + t2 * t2 - 2.0 * v * r2 * t2 * dip_envelope(delta_t, sigma, sigma_p))


def _fwm_jsa(sigma: float, sigma_p: float, n: int, half_width: float):
    """Discretized joint spectral amplitude about the filter centres.

    The energy delta is integrated out analytically: convolving two Gaussian
    pump amplitudes leaves a Gaussian in the sum frequency of width sqrt(2) sigma_p.
    """
    grid = np.linspace(-half_width, half_width, n)
    step = grid[1] - grid[0]
    ws, wi = np.meshgrid(grid, grid, indexing="ij")
    phase_matching = np.exp(-((ws + wi) ** 2) / (2.0 * sigma_p**2))
    jsa = np.exp(-(ws**2) / sigma**2 - wi**2 / sigma**2) * phase_matching * step
    return grid, jsa


def _overlap(grid: np.ndarray, jsa: np.ndarray, delays: np.ndarray) -> np.ndarray:
    # Tr(rho U rho U^dag) / Tr(rho)^2 for the heralded signal state rho = M M^H
    total = np.sum(np.abs(jsa) ** 2) ** 2
    out = np.empty(len(delays))
    for idx, tau in enumerate(delays):
        shifted = np.exp(1j * grid * tau)[:, None] * jsa
        out[idx] = np.sum(np.abs(jsa.conj().T @ shifted) ** 2) / total
    return out


def _converge(fn, abs_err: float, n0: int = 33, n_limit: int = 1025):
    n = n0
    prev = fn(n)
    while True:
        n = 2 * n - 1
        cur = fn(n)
        err = float(np.max(np.abs(cur - prev)))
        if err <= abs_err:
            return cur, err
        if n >= n_limit:
            raise QuadratureError("spectral quadrature did not converge", err)
        prev = cur


def visibility_by_quadrature(sigma: float, sigma_p: float, abs_err: float = 1e-6) -> float:
    """Heralded-photon purity from direct integration of the joint spectrum.

    Independent of the closed forms: discretizes the two-photon amplitude on a
    uniform grid (spectrally accurate for Gaussians) and doubles the grid until
    successive estimates agree within ``abs_err``.
    """
    _check_bandwidths(sigma, sigma_p)
    half_width = 8.0 * sigma

    def estimate(n):
        grid, jsa = _fwm_jsa(sigma, sigma_p, n, half_width)
        return _overlap(grid, jsa, np.zeros(1))

    value, _ = _converge(estimate, abs_err)
    return float(value[0])


def dip_by_quadrature(delays, sigma: float, sigma_p: float, abs_err: float = 1e-6) -> np.ndarray:
    """Two-photon overlap versus delay from the same discretized joint spectrum."""
    _check_bandwidths(sigma, sigma_p)
    delays = np.atleast_1d(np.asarray(delays, dtype=float))
    # the delay phase must be resolved on the grid, so the sample count grows with delay
    half_width = 8.0 * sigma
    min_n = int(np.ceil(2 * half_width * np.max(np.abs(delays), initial=0.0) / math.pi)) + 33

    def estimate(n):
        grid, jsa = _fwm_jsa(sigma, sigma_p, max(n, min_n), half_width)
        return _overlap(grid, jsa, delays)

    value, _ = _converge(estimate, abs_err, n_limit=max(1025, 4 * min_n))
    return value


def check_energy_conservation(triple: WavelengthTriple, rel_tol: float = 1e-3) -> EnergyCheck:
    """Compare two pump photon energies against signal plus idler."""
    pump = 2.0 / triple.lambda_p
    mismatch = abs(pump - 1.0 / triple.lambda_s - 1.0 / triple.lambda_i) / pump
    return EnergyCheck(passed=mismatch <= rel_tol, mismatch=mismatch)


def wavelength_filter_to_sigma(center_wavelength: float, fwhm_wavelength: float) -> float:
    """Amplitude bandwidth sigma (rad/s) of a filter given its wavelength FWHM."""
    if center_wavelength <= 0 or fwhm_wavelength < 0:
        raise ValueError("wavelengths must be positive")
    if fwhm_wavelength >= center_wavelength:
        raise ValueError("filter FWHM must be much smaller than its centre wavelength")
    delta_nu = SPEED_OF_LIGHT * fwhm_wavelength / center_wavelength**2
    return 2.0 * math.pi * delta_nu / _FWHM_PER_SIGMA
