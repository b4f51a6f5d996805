"""Compare the compiled routing kernel with the numpy fallback.

    python benchmarks/bench_routing.py [--pulses N] [--n-bar X] [--repeat K]

Both backends consume the same uniform pool, so the script also checks that
they return identical detector flags.
"""
import argparse
import time

import numpy as np

from fwmhom import _routing
from fwmhom.experiment import ExperimentConfig
from fwmhom.montecarlo import available_backends, get_router, matched_cdf_table
from fwmhom.source import sample_pair_count


def build_inputs(pulses, n_bar, seed):
    cfg = ExperimentConfig.published_setup(n_bar=n_bar, eta_s=0.5, eta_i=0.5, delay=2e-13)
    rng = np.random.default_rng(seed)
    n_a = sample_pair_count(cfg.source_a, rng, pulses).astype(np.int64)
    n_b = sample_pair_count(cfg.source_b, rng, pulses).astype(np.int64)
    busy = np.flatnonzero(n_a + n_b)
    na, nb = n_a[busy], n_b[busy]
    need = _routing.uniforms_needed(na, nb)
    offsets = np.cumsum(need) - need
    pool = rng.random(int(need.sum()))
    cdf = matched_cdf_table(cfg.coupler.t, cfg.coupler.r, 24)
    args = (na, nb, offsets, pool, cdf, 0.5, 0.5, 0.5, 0.5, cfg.overlap(),
            cfg.coupler.reflectance, cfg.coupler.transmittance)
    return args, len(busy)


def best_time(fn, args, repeat):
    best = float("inf")
    for _ in range(repeat):
        start = time.perf_counter()
        out = fn(*args)
        best = min(best, time.perf_counter() - start)
    return best, out


def main():
    parser = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    parser.add_argument("--pulses", type=int, default=2_000_000)
    parser.add_argument("--n-bar", type=float, default=0.1)
    parser.add_argument("--repeat", type=int, default=5)
    parser.add_argument("--seed", type=int, default=1)
    args = parser.parse_args()

    inputs, busy = build_inputs(args.pulses, args.n_bar, args.seed)
    print(f"pulses={args.pulses} n_bar={args.n_bar} non-empty pulses routed={busy}")
    results = {}
    for backend in available_backends():
        elapsed, flags = best_time(get_router(backend), inputs, args.repeat)
        results[backend] = (elapsed, flags)
        print(f"{backend:>9s}: {elapsed * 1e3:8.2f} ms  ({busy / elapsed / 1e6:6.1f} M pulses/s)")
    if len(results) == 2:
        (t_c, f_c), (t_p, f_p) = results["compiled"], results["python"]
        print(f"  speedup: {t_p / t_c:.1f}x   identical flags: {np.array_equal(f_c, f_p)}")
    else:
        print("compiled kernel not built; only the numpy fallback was timed")


if __name__ == "__main__":
    main()
