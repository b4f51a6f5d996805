"""Sparse truncated multimode Fock states and the two-port beamsplitter.

States are dictionaries keyed by occupation tuples. The beamsplitter maps
input creation operators as

    a1^dag -> t a3^dag + i r a4^dag
    a2^dag -> i r a3^dag + t a4^dag

with ``t`` and ``r`` real, so reflection always carries a phase of ``i``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Iterable, Mapping

import numpy as np

Occupation = tuple[int, ...]

DEFAULT_N_MAX = 4
NORM_TOL = 1e-12


class TruncationError(ValueError):
    """Raised when a state would exceed its photon-number truncation."""


class NormalizationError(ValueError):
    """Raised when an operation requires a normalized state."""


@dataclass(frozen=True)
class BeamSplitter:
    """Lossless beamsplitter with real amplitude coefficients ``t`` and ``r``."""

    t: float
    r: float

    def __post_init__(self) -> None:
        if self.t < 0 or self.r < 0:
            raise ValueError(f"t and r must be non-negative, got t={self.t}, r={self.r}")
        if abs(self.t**2 + self.r**2 - 1.0) > NORM_TOL:
            raise ValueError(
                f"t^2 + r^2 must equal 1 (got {self.t**2 + self.r**2!r}); "
                "use BeamSplitter.from_coefficients for split ratios"
            )

    @classmethod
    def balanced(cls) -> "BeamSplitter":
        return cls(math.sqrt(0.5), math.sqrt(0.5))

    @classmethod
    def from_transmittance(cls, transmittance: float) -> "BeamSplitter":
        """Build from the intensity transmission ``T = t^2``."""
        if not 0.0 <= transmittance <= 1.0:
            raise ValueError(f"transmittance must lie in [0, 1], got {transmittance}")
        return cls(math.sqrt(transmittance), math.sqrt(1.0 - transmittance))

    @classmethod
    def from_coefficients(cls, t: float, r: float, tol: float = 1e-9) -> "BeamSplitter":
        """Accept either intensity fractions (t + r = 1) or amplitudes (t^2 + r^2 = 1).

        Coupler values such as 0.54/0.46 are split ratios and sum to one;
        amplitude pairs such as 0.7071/0.7071 have unit squared sum.
        """
        if t < 0 or r < 0:
            raise ValueError(f"t and r must be non-negative, got t={t}, r={r}")
        if abs(t + r - 1.0) <= tol:
            return cls.from_transmittance(t / (t + r))
        if abs(t * t + r * r - 1.0) <= tol:
            norm = math.hypot(t, r)
            return cls(t / norm, r / norm)
        raise ValueError(
            f"(t={t}, r={r}) is neither a split ratio (t + r = 1) "
            "nor an amplitude pair (t^2 + r^2 = 1)"
        )

    @property
    def transmittance(self) -> float:
        return self.t * self.t

    @property
    def reflectance(self) -> float:
        return self.r * self.r

    def matrix(self) -> np.ndarray:
        """Mode matrix: column j holds the output expansion of input mode j."""
        return np.array([[self.t, 1j * self.r], [1j * self.r, self.t]])


def _check_occupation(occ: Occupation, mode_count: int, n_max: int) -> None:
    if len(occ) != mode_count:
        raise ValueError(f"occupation {occ} does not have {mode_count} modes")
    if any(n < 0 for n in occ):
        raise ValueError(f"negative occupation in {occ}")
    if sum(occ) > n_max:
        raise TruncationError(f"occupation {occ} has {sum(occ)} photons, above n_max={n_max}")


@dataclass(frozen=True)
class PureState:
    """Pure state as a sparse map from occupation tuples to complex amplitudes."""

    terms: Mapping[Occupation, complex]
    mode_count: int
    n_max: int = DEFAULT_N_MAX

    def __post_init__(self) -> None:
        clean: dict[Occupation, complex] = {}
        for occ, amp in self.terms.items():
            occ = tuple(int(n) for n in occ)
            _check_occupation(occ, self.mode_count, self.n_max)
            if amp != 0:
                clean[occ] = clean.get(occ, 0j) + complex(amp)
        object.__setattr__(self, "terms", clean)

    def norm_squared(self) -> float:
        return float(sum(abs(a) ** 2 for a in self.terms.values()))

    def norm(self) -> float:
        return math.sqrt(self.norm_squared())

    def normalized(self) -> "PureState":
        nrm = self.norm()
        if nrm == 0:
            raise NormalizationError("cannot normalize the zero vector")
        return PureState({k: v / nrm for k, v in self.terms.items()}, self.mode_count, self.n_max)

    def is_normalized(self, tol: float = NORM_TOL) -> bool:
        return abs(self.norm() - 1.0) <= tol

    def amplitude(self, occ: Iterable[int]) -> complex:
        return self.terms.get(tuple(occ), 0j)

    def photon_numbers(self) -> set[int]:
        return {sum(occ) for occ in self.terms}

    def with_n_max(self, n_max: int) -> "PureState":
        return PureState(self.terms, self.mode_count, n_max)

    def inner(self, other: "PureState") -> complex:
        if other.mode_count != self.mode_count:
            raise ValueError("mode counts differ")
        return sum(a.conjugate() * other.terms.get(occ, 0j) for occ, a in self.terms.items())


def fock_state(occupations: Iterable[int], n_max: int = DEFAULT_N_MAX) -> PureState:
    occ = tuple(occupations)
    return PureState({occ: 1.0}, len(occ), n_max)


def superposition(
    terms: Mapping[Occupation, complex], n_max: int = DEFAULT_N_MAX, normalize: bool = True
) -> PureState:
    if not terms:
        raise ValueError("empty superposition")
    mode_count = len(next(iter(terms)))
    state = PureState(dict(terms), mode_count, n_max)
    return state.normalized() if normalize else state


def tensor(a: PureState, b: PureState, n_max: int | None = None) -> PureState:
    """Tensor product; modes of ``a`` come first."""
    bound = max(a.n_max, b.n_max) if n_max is None else n_max
    out: dict[Occupation, complex] = {}
    for occ_a, amp_a in a.terms.items():
        for occ_b, amp_b in b.terms.items():
            occ = occ_a + occ_b
            if sum(occ) > bound:
                raise TruncationError(
                    f"tensor product term {occ} has {sum(occ)} photons, above n_max={bound}"
                )
            out[occ] = amp_a * amp_b
    return PureState(out, a.mode_count + b.mode_count, bound)


_I_POWERS = (1 + 0j, 1j, -1 + 0j, -1j)


@lru_cache(maxsize=4096)
def beamsplitter_amplitudes(n: int, m: int, t: float, r: float) -> dict[tuple[int, int], complex]:
    """Output amplitudes of ``|n>_1 |m>_2`` on a two-port beamsplitter.

    Expands (t a3^dag + i r a4^dag)^n (i r a3^dag + t a4^dag)^m / sqrt(n! m!)
    term by term; ``j`` photons of the first input and ``k`` of the second
    leave through port 3. Returned keys are ``(n3, n4)``.
    """
    total = n + m
    out: dict[tuple[int, int], complex] = {}
    for j in range(n + 1):
        for k in range(m + 1):
            n3 = j + k
            n4 = total - n3
            coef = math.sqrt(
                math.comb(n, j) * math.comb(m, k) * math.comb(n3, j) * math.comb(n4, n - j)
            )
            e = n - j + k
            amp = coef * t ** (j + m - k) * r**e * _I_POWERS[e % 4]
            out[(n3, n4)] = out.get((n3, n4), 0j) + amp
    return out


def output_distribution(n: int, m: int, bs: BeamSplitter) -> np.ndarray:
    """Probability that ``n3`` photons exit port 3, indexed by ``n3``."""
    probs = np.zeros(n + m + 1)
    for (n3, _), amp in beamsplitter_amplitudes(n, m, bs.t, bs.r).items():
        probs[n3] += abs(amp) ** 2
    return probs


def apply_beamsplitter(state: PureState, mode_a: int, mode_b: int, bs: BeamSplitter) -> PureState:
    """Mix ``mode_a`` (input 1) and ``mode_b`` (input 2); outputs overwrite them in place."""
    if mode_a == mode_b:
        raise ValueError("beamsplitter modes must be distinct")
    for mode in (mode_a, mode_b):
        if not 0 <= mode < state.mode_count:
            raise IndexError(f"mode {mode} out of range for {state.mode_count} modes")
    out: dict[Occupation, complex] = {}
    for occ, amp in state.terms.items():
        table = beamsplitter_amplitudes(occ[mode_a], occ[mode_b], bs.t, bs.r)
        for (n3, n4), coef in table.items():
            new = list(occ)
            new[mode_a] = n3
            new[mode_b] = n4
            key = tuple(new)
            out[key] = out.get(key, 0j) + amp * coef
    return PureState(out, state.mode_count, state.n_max)


def expectation(state: PureState, weight: Callable[[Occupation], float]) -> float:
    """Sum of ``|amplitude|^2 * weight(occupation)`` over the state's terms."""
    if not state.is_normalized():
        raise NormalizationError(f"state norm is {state.norm()!r}, expected 1")
    return float(sum(abs(a) ** 2 * weight(occ) for occ, a in state.terms.items()))


def projection_probability(state: PureState, pattern: Callable[[Occupation], bool]) -> float:
    """Probability that a number-resolving measurement lands in ``pattern``."""
    return expectation(state, lambda occ: 1.0 if pattern(occ) else 0.0)
