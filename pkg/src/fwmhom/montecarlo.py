"""Pulse-by-pulse Monte Carlo of the dual-source experiment.

Each pulse draws untruncated pair numbers for both sources, thins the idlers,
routes the signals through the coupler and thins them at the output detectors.
Routing uses the compiled ``_kernel`` extension when it was built and the numpy
implementation in ``_routing`` otherwise; both give identical counts for a seed.
Set ``FWMHOM_BACKEND=python`` to force the numpy path.

Batches draw from independent streams spawned from the plan's root seed with
:class:`numpy.random.SeedSequence`, so a plan's output depends only on
``(seed, pulses, batches)`` and not on the worker count.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, NamedTuple

import numpy as np

from . import _routing
from .experiment import DETECTORS, PAIRS, ExperimentConfig
from .fock import BeamSplitter, TruncationError, output_distribution
from .source import sample_pair_count

try:
    from ._kernel import route_pulses as _compiled_route
except ImportError:  # extension not built
    _compiled_route = None

DEFAULT_MAX_PHOTONS = 24
DEFAULT_CHUNK = 1 << 20

_BITS = {
    "i1": _routing.I1,
    "i2": _routing.I2,
    "s3": _routing.S3,
    "s4": _routing.S4,
}


def available_backends() -> list[str]:
    return (["compiled"] if _compiled_route is not None else []) + ["python"]


def default_backend() -> str:
    requested = os.environ.get("FWMHOM_BACKEND", "").strip().lower()
    if requested in ("python", "numpy"):
        return "python"
    return "compiled" if _compiled_route is not None else "python"


def get_router(backend: str | None = None) -> Callable[..., np.ndarray]:
    backend = backend or default_backend()
    if backend == "compiled":
        if _compiled_route is None:
            raise RuntimeError("compiled routing kernel is not available; rebuild the package")
        return _compiled_route
    if backend == "python":
        return _routing.route_pulses
    raise ValueError(f"unknown backend {backend!r}; choose from {available_backends()}")


@lru_cache(maxsize=32)
def matched_cdf_table(t: float, r: float, max_photons: int) -> np.ndarray:
    """Cumulative port-3 distribution for |n_a, k> in the matched mode.

    Entry ``[n_a, k, j]`` is P(n3 <= j); entries with ``j >= n_a + k`` are exactly 1.
    """
    bs = BeamSplitter(t, r)
    size = max_photons + 1
    table = np.ones((size, size, size))
    for n_a in range(size):
        for k in range(size - n_a):
            dist = output_distribution(n_a, k, bs)
            if abs(dist.sum() - 1.0) > 1e-9:
                raise ArithmeticError(f"Fock output for |{n_a},{k}> lost normalization")
            cdf = np.cumsum(dist)[: n_a + k]
            table[n_a, k, : n_a + k] = np.minimum(cdf, 1.0)
    table.setflags(write=False)
    return table


@dataclass(frozen=True)
class TrialPlan:
    config: ExperimentConfig
    pulses: int
    seed: int
    batches: int = 1
    max_photons: int = DEFAULT_MAX_PHOTONS
    chunk_size: int = DEFAULT_CHUNK

    def __post_init__(self) -> None:
        if self.pulses < 1:
            raise ValueError("pulses must be >= 1")
        if self.batches < 1:
            raise ValueError("batches must be >= 1")
        if self.batches > self.pulses:
            raise ValueError("cannot split into more batches than pulses")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")

    def batch_sizes(self) -> list[int]:
        base, extra = divmod(self.pulses, self.batches)
        return [base + (1 if i < extra else 0) for i in range(self.batches)]


@dataclass
class CountRecord:
    pulses: int = 0
    singles: dict[str, int] = field(default_factory=lambda: dict.fromkeys(DETECTORS, 0))
    twofold: dict[str, int] = field(default_factory=lambda: dict.fromkeys(PAIRS, 0))
    fourfold: int = 0
    blocked_a: int = 0
    blocked_b: int = 0

    def __add__(self, other: "CountRecord") -> "CountRecord":
        return CountRecord(
            pulses=self.pulses + other.pulses,
            singles={k: self.singles[k] + other.singles[k] for k in DETECTORS},
            twofold={k: self.twofold[k] + other.twofold[k] for k in PAIRS},
            fourfold=self.fourfold + other.fourfold,
            blocked_a=self.blocked_a + other.blocked_a,
            blocked_b=self.blocked_b + other.blocked_b,
        )

    def coincidences(self, key: str) -> int:
        if key == "fourfold":
            return self.fourfold
        if key in self.twofold:
            return self.twofold[key]
        raise KeyError(f"unknown coincidence {key!r}")

    @staticmethod
    def csv_header() -> list[str]:
        return (
            ["pulses"]
            + [f"singles_{d}" for d in DETECTORS]
            + [f"twofold_{p}" for p in PAIRS]
            + ["fourfold", "blocked_a", "blocked_b"]
        )

    def csv_row(self) -> list[int]:
        return (
            [self.pulses]
            + [self.singles[d] for d in DETECTORS]
            + [self.twofold[p] for p in PAIRS]
            + [self.fourfold, self.blocked_a, self.blocked_b]
        )


def _tally(hist: np.ndarray, pulses: int) -> CountRecord:
    values = np.arange(256)

    def count(mask: int) -> int:
        return int(hist[(values & mask) == mask].sum())

    singles = {d: count(_BITS[d]) for d in DETECTORS}
    twofold = {}
    for pair in PAIRS:
        a, b = pair.split("_")
        twofold[pair] = count(_BITS[a] | _BITS[b])
    heralds = _routing.I1 | _routing.I2
    return CountRecord(
        pulses=pulses,
        singles=singles,
        twofold=twofold,
        fourfold=count(heralds | _routing.S3 | _routing.S4),
        blocked_a=count(heralds | _routing.S3_BLOCK_A | _routing.S4_BLOCK_A),
        blocked_b=count(heralds | _routing.S3_BLOCK_B | _routing.S4_BLOCK_B),
    )


def _run_batch(plan: TrialPlan, seed_seq: np.random.SeedSequence, pulses: int, router) -> CountRecord:
    cfg = plan.config
    rng = np.random.Generator(np.random.PCG64(seed_seq))
    cdf = matched_cdf_table(cfg.coupler.t, cfg.coupler.r, plan.max_photons)
    overlap = cfg.overlap()
    dets = cfg.detectors
    dark = np.array([dets[d].dark_rate_per_pulse for d in DETECTORS])
    dark_bits = np.array(
        [
            _routing.I1,
            _routing.I2,
            _routing.S3 | _routing.S3_BLOCK_A | _routing.S3_BLOCK_B,
            _routing.S4 | _routing.S4_BLOCK_A | _routing.S4_BLOCK_B,
        ],
        dtype=np.uint8,
    )
    hist = np.zeros(256, dtype=np.int64)
    done = 0
    while done < pulses:
        n = min(plan.chunk_size, pulses - done)
        n_a = sample_pair_count(cfg.source_a, rng, n).astype(np.int64)
        n_b = sample_pair_count(cfg.source_b, rng, n).astype(np.int64)
        total = n_a + n_b
        worst = int(total.max(initial=0))
        if worst > plan.max_photons:
            raise TruncationError(
                f"a pulse carried {worst} signal photons, above max_photons={plan.max_photons}"
            )
        busy = np.flatnonzero(total)
        na, nb = n_a[busy], n_b[busy]
        need = _routing.uniforms_needed(na, nb)
        offsets = np.cumsum(need) - need
        pool = rng.random(int(need.sum()))
        flags = np.zeros(n, dtype=np.uint8)
        flags[busy] = router(
            na,
            nb,
            offsets,
            pool,
            cdf,
            dets["i1"].eta,
            dets["i2"].eta,
            dets["s3"].eta,
            dets["s4"].eta,
            overlap,
            cfg.coupler.reflectance,
            cfg.coupler.transmittance,
        )
        if dark.any():
            fired = rng.random((len(DETECTORS), n)) < dark[:, None]
            for bits, row in zip(dark_bits, fired):
                flags[row] |= bits
        hist += np.bincount(flags, minlength=256)
        done += n
    return _tally(hist, pulses)


def simulate(plan: TrialPlan, backend: str | None = None, workers: int = 1) -> CountRecord:
    """Run the plan and return summed counts over all batches."""
    router = get_router(backend)
    seeds = np.random.SeedSequence(plan.seed).spawn(plan.batches)
    jobs = list(zip(seeds, plan.batch_sizes()))
    if workers > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(lambda job: _run_batch(plan, job[0], job[1], router), jobs))
    else:
        records = [_run_batch(plan, ss, n, router) for ss, n in jobs]
    out = CountRecord()
    for rec in records:
        out = out + rec
    return out


class VisibilityEstimate(NamedTuple):
    raw: float
    raw_err: float
    net: float
    net_err: float


def _ratio_visibility(a: float, var_a: float, b: float, var_b: float) -> tuple[float, float]:
    if b <= 0:
        raise ZeroDivisionError("no coincidences in the far-delay record")
    value = 1.0 - a / b
    err = math.sqrt(var_a / b**2 + a**2 * var_b / b**4)
    return value, err


def estimate_visibility(
    zero: CountRecord, far: CountRecord, coincidence: str = "fourfold"
) -> VisibilityEstimate:
    """Dip visibility 1 - C(0)/C(inf) with Poisson errors.

    The net value subtracts the blocked-input fourfold counts of each record
    from its own fourfold count; it is only defined for ``fourfold``. Count
    totals are scaled to a common number of pulses.
    """
    if zero.pulses == 0 or far.pulses == 0:
        raise ValueError("records must contain at least one pulse")
    scale = zero.pulses / far.pulses
    a = zero.coincidences(coincidence)
    b = far.coincidences(coincidence) * scale
    raw, raw_err = _ratio_visibility(a, max(a, 1), b, max(b, 1.0) * scale)
    if coincidence != "fourfold":
        return VisibilityEstimate(raw, raw_err, math.nan, math.nan)
    bg0 = zero.blocked_a + zero.blocked_b
    bg_far = (far.blocked_a + far.blocked_b) * scale
    net, net_err = _ratio_visibility(
        a - bg0, max(a + bg0, 1), b - bg_far, max(b + bg_far, 1.0) * scale
    )
    return VisibilityEstimate(raw, raw_err, net, net_err)
