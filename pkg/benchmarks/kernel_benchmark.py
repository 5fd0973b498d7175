"""Benchmark the compiled kernels against the NumPy fallback.

Usage::

    python benchmarks/kernel_benchmark.py [--n 49] [--T 100] [--q 2] [--iters 2000]

Times each hot kernel on reference-design-sized inputs, then a short full
chain under each backend (the chain comparison re-executes the sampler with
the backend functions patched in).
"""

import argparse
import time

import numpy as np

from nlarch import PriorSpec, SamplerConfig, SimConfig, SpatialParams
from nlarch import queen_contiguity, row_normalize, run_chain, simulate_panel
from nlarch._kernels import available_backends, get_backend
from nlarch.mixture import DEFAULT_MIXTURE as TAB


def time_kernels(name, n, T, q, reps):
    k = get_backend(name)
    rng = np.random.default_rng(0)
    resid = rng.standard_normal((n, T)) * 2 - 1.3
    u = rng.random((n, T))
    lam = rng.standard_normal((n, q))
    w = np.ascontiguousarray(TAB.inv_sigma2[rng.integers(0, 10, (n, T))])
    yf = rng.standard_normal((n, T))
    noise_f = rng.standard_normal((q, T))
    noise_l = rng.standard_normal((n, q))
    F = rng.standard_normal((q, T))
    pp = np.eye(q) * 0.01
    pr = np.zeros(q)
    outz = np.empty((n, T), dtype=np.int64)
    outf = np.empty((q, T))
    outl = np.empty((n, q))

    rows = {}
    for label, fn in (
        ("indicators", lambda: k.sample_indicators(resid, u, TAB.log_norm, TAB.mu,
                                                   TAB.inv_two_sigma2, outz)),
        ("factors", lambda: k.sample_factors(lam, w, yf, noise_f, outf)),
        ("loadings", lambda: k.sample_loadings(F, w, yf, pp, pr, noise_l, outl)),
    ):
        fn()  # warm up
        t0 = time.perf_counter()
        for _ in range(reps):
            fn()
        rows[label] = (time.perf_counter() - t0) / reps * 1e6
    return rows


def time_chain(name, iters):
    import nlarch.sampler as S

    mod = get_backend(name)
    saved = (S.kernels.sample_indicators, S.kernels.sample_factors,
             S.kernels.sample_loadings)
    S.kernels.sample_indicators = mod.sample_indicators
    S.kernels.sample_factors = mod.sample_factors
    S.kernels.sample_loadings = mod.sample_loadings
    try:
        M = row_normalize(queen_contiguity(7, 7))
        panel, _ = simulate_panel(SimConfig(
            T=100, q=2, params=SpatialParams(0.16, 0.15, 0.2),
            beta=[-2.0], M=M, seed=0))
        cfg = SamplerConfig(iterations=iters, burn_in=iters // 4, seed=1,
                            max_field_draws=50)
        t0 = time.perf_counter()
        run_chain(panel, M, PriorSpec(), cfg, q=2)
        return (time.perf_counter() - t0) / iters * 1e3
    finally:
        (S.kernels.sample_indicators, S.kernels.sample_factors,
         S.kernels.sample_loadings) = saved


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=49)
    ap.add_argument("--T", type=int, default=100)
    ap.add_argument("--q", type=int, default=2)
    ap.add_argument("--reps", type=int, default=300)
    ap.add_argument("--iters", type=int, default=2000)
    args = ap.parse_args()

    backends = available_backends()
    print(f"backends: {backends}   (n={args.n}, T={args.T}, q={args.q})\n")
    results = {b: time_kernels(b, args.n, args.T, args.q, args.reps) for b in backends}
    labels = list(next(iter(results.values())))
    header = f"{'kernel':<12}" + "".join(f"{b:>14}" for b in backends)
    if len(backends) == 2:
        header += f"{'speedup':>10}"
    print(header)
    for label in labels:
        row = f"{label:<12}" + "".join(f"{results[b][label]:>11.1f} us" for b in backends)
        if len(backends) == 2:
            row += f"{results[backends[1]][label] / results[backends[0]][label]:>9.1f}x"
        print(row)

    print(f"\nfull chain, {args.iters} iterations on the reference design:")
    per = {b: time_chain(b, args.iters) for b in backends}
    for b in backends:
        print(f"  {b:<9} {per[b]:8.3f} ms/iteration")
    if len(backends) == 2:
        print(f"  speedup  {per[backends[1]] / per[backends[0]]:8.1f}x")


if __name__ == "__main__":
    main()
