"""Least-squares extraction of dip visibility and width from coincidence scans.

The model is

    C(d) = B * (r^4 + t^4 - 2 V r^2 t^2 exp(-(d - d0)^2 / (2 s^2)))

so ``V`` is already corrected for an unbalanced coupler.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.optimize import least_squares

from .fock import BeamSplitter

PARAMS = ("baseline", "visibility", "sigma_dip", "center")
MAX_VISIBILITY = 1.05


class FitError(RuntimeError):
    pass


class InconsistentInputError(ValueError):
    pass


@dataclass(frozen=True)
class DipData:
    delays: np.ndarray
    counts: np.ndarray
    errors: np.ndarray | None = None

    def __post_init__(self) -> None:
        delays = np.asarray(self.delays, dtype=float)
        counts = np.asarray(self.counts, dtype=float)
        if delays.ndim != 1 or delays.shape != counts.shape:
            raise ValueError("delays and counts must be 1-D arrays of equal length")
        if len(delays) < 5:
            raise ValueError(f"need at least 5 samples, got {len(delays)}")
        if np.all(delays == delays[0]):
            raise ValueError("degenerate data: all delays are equal")
        if np.any(np.diff(delays) <= 0):
            raise ValueError("delays must be strictly increasing")
        if np.any(counts < 0) or not np.all(np.isfinite(counts)):
            raise ValueError("counts must be finite and non-negative")
        object.__setattr__(self, "delays", delays)
        object.__setattr__(self, "counts", counts)
        if self.errors is not None:
            errors = np.asarray(self.errors, dtype=float)
            if errors.shape != counts.shape or np.any(errors <= 0):
                raise ValueError("error bars must be positive and match counts")
            object.__setattr__(self, "errors", errors)

    def sigmas(self) -> np.ndarray:
        if self.errors is not None:
            return self.errors
        return np.sqrt(np.maximum(self.counts, 1.0))

    @classmethod
    def from_csv(cls, path: str | Path) -> "DipData":
        """Read ``delay_s,counts[,error]`` rows; a header line is optional."""
        delays, counts, errors = [], [], []
        with open(path, newline="") as fh:
            for lineno, row in enumerate(csv.reader(fh), start=1):
                if not row or not "".join(row).strip() or row[0].lstrip().startswith("#"):
                    continue
                if lineno == 1 and not _is_number(row[0]):
                    continue
                if len(row) not in (2, 3):
                    raise ValueError(f"{path}:{lineno}: expected 2 or 3 columns, got {len(row)}")
                try:
                    values = [float(v) for v in row]
                except ValueError as exc:
                    raise ValueError(f"{path}:{lineno}: {exc}") from None
                delays.append(values[0])
                counts.append(values[1])
                if len(values) == 3:
                    errors.append(values[2])
        if errors and len(errors) != len(delays):
            raise ValueError(f"{path}: error column present on some rows only")
        return cls(np.array(delays), np.array(counts), np.array(errors) if errors else None)

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["delay_s", "counts"] + (["error"] if self.errors is not None else []))
            for i, (d, c) in enumerate(zip(self.delays, self.counts)):
                row = [f"{d:.9e}", f"{c:.9g}"]
                if self.errors is not None:
                    row.append(f"{self.errors[i]:.9g}")
                writer.writerow(row)


def _is_number(text: str) -> bool:
    try:
        float(text)
    except ValueError:
        return False
    return True


@dataclass(frozen=True)
class DipFitResult:
    visibility: float
    sigma_dip: float
    baseline: float
    center: float
    stderr: dict[str, float]
    residual_norm: float
    iterations: int
    residuals: np.ndarray = field(repr=False, default_factory=lambda: np.empty(0))

    CSV_HEADER = (
        "visibility",
        "visibility_err",
        "sigma_dip_s",
        "sigma_dip_err",
        "baseline",
        "baseline_err",
        "center_s",
        "center_err",
        "residual_norm",
        "iterations",
    )

    def csv_row(self) -> list[str]:
        e = self.stderr
        return [
            f"{self.visibility:.9g}",
            f"{e['visibility']:.3e}",
            f"{self.sigma_dip:.9e}",
            f"{e['sigma_dip']:.3e}",
            f"{self.baseline:.9g}",
            f"{e['baseline']:.3e}",
            f"{self.center:.9e}",
            f"{e['center']:.3e}",
            f"{self.residual_norm:.6g}",
            str(self.iterations),
        ]


def dip_model(delays, baseline, visibility, sigma_dip, center, bs: BeamSplitter):
    t2, r2 = bs.transmittance, bs.reflectance
    g = np.exp(-((np.asarray(delays) - center) ** 2) / (2.0 * sigma_dip**2))
    return baseline * (r2 * r2 + t2 * t2 - 2.0 * visibility * r2 * t2 * g)


def _jacobian(delays, params, bs: BeamSplitter) -> np.ndarray:
    b, v, s, d0 = params
    t2, r2 = bs.transmittance, bs.reflectance
    c = 2.0 * r2 * t2
    dx = delays - d0
    g = np.exp(-(dx**2) / (2.0 * s**2))
    return np.column_stack(
        [
            r2 * r2 + t2 * t2 - v * c * g,
            -b * c * g,
            -b * v * c * g * dx**2 / s**3,
            -b * v * c * g * dx / s**2,
        ]
    )


def coupler_correction(bs: BeamSplitter) -> float:
    t2, r2 = bs.transmittance, bs.reflectance
    return (r2 * r2 + t2 * t2) / (2.0 * r2 * t2)


def coupler_corrected_visibility(observed_depth: float, bs: BeamSplitter) -> float:
    """Intrinsic visibility from the fractional depth of a dip seen through ``bs``."""
    if not 0.0 <= observed_depth <= 1.0:
        raise ValueError(f"observed depth must lie in [0, 1], got {observed_depth}")
    if observed_depth == 0.0:
        return 0.0
    if bs.r == 0.0 or bs.t == 0.0:
        raise InconsistentInputError("a one-sided coupler cannot produce a dip")
    v = observed_depth * coupler_correction(bs)
    if v > MAX_VISIBILITY:
        raise InconsistentInputError(
            f"depth {observed_depth} implies visibility {v:.3f} > {MAX_VISIBILITY} for this coupler"
        )
    return v


def initial_guess(data: DipData, bs: BeamSplitter) -> np.ndarray:
    x, y = data.delays, data.counts
    n_outer = max(1, int(round(0.1 * len(x))))
    outer = np.concatenate([y[:n_outer], y[-n_outer:]])
    level = float(np.mean(outer))
    t2, r2 = bs.transmittance, bs.reflectance
    baseline = level / (r2 * r2 + t2 * t2) if level > 0 else 1.0
    i_min = int(np.argmin(y))
    center = float(x[i_min])
    depth = float(np.clip(1.0 - y[i_min] / level, 0.0, 1.0)) if level > 0 else 0.0
    visibility = min(depth * coupler_correction(bs), 1.0)
    half = level - 0.5 * (level - y[i_min])
    left = i_min
    while left > 0 and y[left] < half:
        left -= 1
    right = i_min
    while right < len(x) - 1 and y[right] < half:
        right += 1
    fwhm = float(x[right] - x[left])
    span = float(x[-1] - x[0])
    if fwhm <= 0 or depth == 0.0:
        fwhm = 0.2 * span
    sigma = fwhm / (2.0 * math.sqrt(2.0 * math.log(2.0)))
    return np.array([baseline, max(visibility, 0.01), sigma, center])


def fit_dip(
    data: DipData, bs: BeamSplitter, max_iterations: int = 200, rel_tol: float = 1e-9
) -> DipFitResult:
    """Weighted least squares over (baseline, visibility, sigma_dip, center).

    Uses a bounded trust-region solver with the analytic Jacobian. Without error bars the
    weights are Poisson, 1/max(counts, 1).
    """
    x = data.delays
    sig = data.sigmas()
    p0 = initial_guess(data, bs)
    # rescale time so the optimizer works with O(1) numbers
    tscale = float(np.max(np.abs(x - p0[3]))) or 1.0
    xs = x / tscale
    p0s = p0 / np.array([1.0, 1.0, tscale, tscale])

    def residuals(p):
        return (dip_model(xs, *p, bs) - data.counts) / sig

    def jac(p):
        return _jacobian(xs, p, bs) / sig[:, None]

    # Keep the centre inside the scan and the width between one sample step and
    # a multiple of the span. A narrower dip is unresolved, and on flat data an
    # unbounded fit chases single low samples.
    span = (x[-1] - x[0]) / tscale
    step = float(np.min(np.diff(x))) / tscale
    lower = np.array([0.0, -MAX_VISIBILITY, step, xs[0]])
    upper = np.array([np.inf, MAX_VISIBILITY, 10.0 * span, xs[-1]])
    p0s = np.clip(p0s, lower, upper)
    sol = least_squares(
        residuals,
        p0s,
        jac=jac,
        bounds=(lower, upper),
        method="trf",
        xtol=rel_tol,
        ftol=1e-15,
        gtol=1e-15,
        max_nfev=max_iterations,
        x_scale="jac",
    )
    if sol.status <= 0:
        raise FitError(f"dip fit did not converge after {sol.nfev} evaluations: {sol.message}")
    p = sol.x.copy()
    p[2] = abs(p[2])
    j = jac(p)
    cov = np.linalg.pinv(j.T @ j)
    err = np.sqrt(np.clip(np.diag(cov), 0.0, None))
    unscale = np.array([1.0, 1.0, tscale, tscale])
    p = p * unscale
    err = err * unscale
    return DipFitResult(
        visibility=float(p[1]),
        sigma_dip=float(p[2]),
        baseline=float(p[0]),
        center=float(p[3]),
        stderr=dict(zip(PARAMS, map(float, err))),
        residual_norm=float(np.linalg.norm(sol.fun)),
        iterations=int(sol.nfev),
        residuals=data.counts - dip_model(x, *p, bs),
    )
