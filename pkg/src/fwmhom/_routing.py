"""Per-pulse photon routing for the Monte Carlo, numpy implementation.

This is the reference and the fallback for the compiled ``_kernel`` module;
both consume the uniform pool identically and must return identical flags.

For a pulse with ``na`` and ``nb`` signal photons the pool slice starting at
``offsets[p]`` holds ``3 na + 4 nb + 1`` uniforms laid out as

    idler A thinning   na
    idler B thinning   nb
    B mode assignment  nb   (matched if u < overlap)
    A routing          na   (port 3 if u < t^2, used when input B is blocked)
    B routing          nb   (port 3 if u < r^2, unmatched or input A blocked)
    coupler sample     1    (inverse CDF of the matched-mode Fock output)
    signal thinning    na + nb  (first m3 slots port 3, the rest port 4)
"""
from __future__ import annotations

import numpy as np

I1, I2, S3, S4 = 1, 2, 4, 8
S3_BLOCK_A, S4_BLOCK_A, S3_BLOCK_B, S4_BLOCK_B = 16, 32, 64, 128


def uniforms_needed(n_a: np.ndarray, n_b: np.ndarray) -> np.ndarray:
    return 3 * n_a + 4 * n_b + 1


def _segments(starts: np.ndarray, lengths: np.ndarray):
    """Flat pool indices, owning pulse and in-segment position for variable-length segments."""
    total = int(lengths.sum())
    owner = np.repeat(np.arange(len(lengths)), lengths)
    first = np.cumsum(lengths) - lengths
    pos = np.arange(total) - np.repeat(first, lengths)
    return starts[owner] + pos, owner, pos


def _count(mask: np.ndarray, owner: np.ndarray, size: int) -> np.ndarray:
    return np.bincount(owner, weights=mask, minlength=size).astype(np.int64)


def route_pulses(
    n_a: np.ndarray,
    n_b: np.ndarray,
    offsets: np.ndarray,
    uniforms: np.ndarray,
    cdf: np.ndarray,
    eta_i1: float,
    eta_i2: float,
    eta_s3: float,
    eta_s4: float,
    overlap: float,
    r2: float,
    t2: float,
) -> np.ndarray:
    size = len(n_a)
    n_a = np.asarray(n_a, dtype=np.int64)
    n_b = np.asarray(n_b, dtype=np.int64)
    offsets = np.asarray(offsets, dtype=np.int64)
    flags = np.zeros(size, dtype=np.uint8)
    if size == 0:
        return flags

    start = offsets
    idx, owner, _ = _segments(start, n_a)
    surv_i1 = _count(uniforms[idx] < eta_i1, owner, size)
    start = start + n_a
    idx, owner, _ = _segments(start, n_b)
    surv_i2 = _count(uniforms[idx] < eta_i2, owner, size)
    start = start + n_b

    idx_assign, owner_b, _ = _segments(start, n_b)
    matched = uniforms[idx_assign] < overlap
    start = start + n_b
    idx, owner, _ = _segments(start, n_a)
    a_to3 = _count(uniforms[idx] < t2, owner, size)
    start = start + n_a
    idx_route, _, _ = _segments(start, n_b)
    b_port3 = uniforms[idx_route] < r2
    k = _count(matched, owner_b, size)
    unmatched_to3 = _count(~matched & b_port3, owner_b, size)
    b_to3 = _count(b_port3, owner_b, size)
    start = start + n_b

    u_bs = uniforms[start]
    j3 = np.sum(cdf[n_a, k] <= u_bs[:, None], axis=1)
    start = start + 1

    total = n_a + n_b
    idx, owner, pos = _segments(start, total)
    u = uniforms[idx]
    hit3 = u < eta_s3
    hit4 = u < eta_s4

    def port_clicks(m3, limit):
        to3 = pos < m3[owner]
        to4 = ~to3 & (pos < limit[owner])
        return _count(hit3 & to3, owner, size) > 0, _count(hit4 & to4, owner, size) > 0

    s3, s4 = port_clicks(j3 + unmatched_to3, total)
    s3_ba, s4_ba = port_clicks(b_to3, n_b)
    s3_bb, s4_bb = port_clicks(a_to3, n_a)

    flags |= np.where(surv_i1 > 0, I1, 0).astype(np.uint8)
    flags |= np.where(surv_i2 > 0, I2, 0).astype(np.uint8)
    for bit, hit in (
        (S3, s3),
        (S4, s4),
        (S3_BLOCK_A, s3_ba),
        (S4_BLOCK_A, s4_ba),
        (S3_BLOCK_B, s3_bb),
        (S4_BLOCK_B, s4_bb),
    ):
        flags |= np.where(hit, bit, 0).astype(np.uint8)
    return flags
