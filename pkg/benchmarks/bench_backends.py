#!/usr/bin/env python3
"""Compare the numba kernels against the pure-numpy fallbacks.

Times each hot kernel on impression-sized inputs (20 rankers, 50 documents,
10 display slots, 10k inference samples) and a short end-to-end learning run
under both backends. Run as:

    python3 benchmarks/bench_backends.py [--repeats N]
"""

import argparse
import os
import subprocess
import sys
import time

import numpy as np

from oltrsim import backends

N_TEAMS = 20
N_DOCS = 50
KAPPA = 10
SAMPLES = 10_000


def bench(fn, args, repeats):
    fn(*args)  # warm-up / compile
    start = time.perf_counter()
    for _ in range(repeats):
        fn(*args)
    return (time.perf_counter() - start) / repeats


def kernel_inputs(rng):
    lists = np.stack([rng.permutation(N_DOCS) for _ in range(N_TEAMS)])
    perms = np.stack([rng.permutation(N_TEAMS)])
    rank_scores = 1.0 / np.arange(1, N_DOCS + 1, dtype=np.float64) ** 3.0
    score_prefix = np.concatenate(([0.0], np.cumsum(rank_scores)))
    u_slot = rng.random(KAPPA)
    clicked_cum = np.cumsum(rng.random((3, N_TEAMS)), axis=1)
    u_samples = rng.random((SAMPLES, 3))
    grades = rng.integers(0, 5, KAPPA)
    p_click = np.array([0.4, 0.6, 0.7, 0.8, 0.9])
    p_stop = np.array([0.1, 0.2, 0.3, 0.4, 0.5])
    u_clicks = rng.random((KAPPA, 2))
    return {
        "team_draft_fill": (lists, perms, KAPPA),
        "prob_multileave_fill": (lists, score_prefix, KAPPA, u_slot, u_slot.copy()),
        "prob_infer_wins": (clicked_cum, u_samples),
        "cascade_clicks": (grades, p_click, p_stop, u_clicks),
    }


def bench_kernels(repeats):
    rng = np.random.default_rng(0)
    inputs = kernel_inputs(rng)
    numba_kernels = backends._build_numba_kernels()
    print(f"{'kernel':<24} {'numpy':>12} {'numba':>12} {'speedup':>9}")
    for name, args in inputs.items():
        t_np = bench(backends._NUMPY_KERNELS[name], args, repeats)
        t_nb = bench(numba_kernels[name], args, repeats)
        print(
            f"{name:<24} {t_np * 1e6:>10.1f}us {t_nb * 1e6:>10.1f}us "
            f"{t_np / t_nb:>8.1f}x"
        )


END_TO_END = """
import time
import numpy as np
import oltrsim as o
ds = o.generate_synthetic(100, 50, 10, relevant_fraction=0.1, noise_level=0.4,
                          seed=7, split_fractions=(0.7, 0.0))
cfg = o.EngineConfig(comparison="{comparison}")
o.run_mgd(ds, cfg, o.INFORMATIONAL, 50, np.random.default_rng(0))  # warm-up
start = time.perf_counter()
o.run_mgd(ds, cfg, o.INFORMATIONAL, {impressions}, np.random.default_rng(1),
          record_every=500)
print(f"{{(time.perf_counter() - start) * 1e3:.0f}}")
"""


def bench_end_to_end(impressions):
    print(f"\nend-to-end run_mgd, {impressions} impressions (ms):")
    print(f"{'comparison':<16} {'numpy':>10} {'numba':>10}")
    for comparison in ("team_draft", "probabilistic"):
        times = {}
        for flag in ("numpy", "numba"):
            env = dict(os.environ, OLTRSIM_BACKEND=flag)
            script = END_TO_END.format(comparison=comparison, impressions=impressions)
            out = subprocess.run(
                [sys.executable, "-c", script],
                env=env, capture_output=True, text=True, check=True,
            )
            times[flag] = float(out.stdout.strip())
        print(f"{comparison:<16} {times['numpy']:>10.0f} {times['numba']:>10.0f}")


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=2000)
    parser.add_argument("--impressions", type=int, default=1000)
    args = parser.parse_args()
    print(f"active backend: {backends.BACKEND}\n")
    bench_kernels(args.repeats)
    bench_end_to_end(args.impressions)


if __name__ == "__main__":
    main()
