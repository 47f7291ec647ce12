"""Benchmark the alignment kernels under both backends.

The backend (numba JIT vs pure numpy) is fixed at import time by the
DNAPIX_NUMBA environment variable, so this script re-runs itself in a
subprocess per backend and prints a side-by-side table.

Usage: python3 benchmarks/benchmark_align.py [--repeat N]
"""

import argparse
import json
import os
import subprocess
import sys
import time


def run_workloads(repeat):
    import numpy as np

    from dnapix import align

    rng = np.random.default_rng(0)
    results = {"backend": align.BACKEND}

    # adaptive-sampling decision: 40-nt reference vs 800-nt prefix
    ref = rng.integers(0, 4, 40).astype(np.uint8)
    prefixes = [rng.integers(0, 4, 800).astype(np.uint8) for _ in range(200)]
    align.semiglobal_distance(ref, prefixes[0], 10)  # warm the JIT
    best = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        for p in prefixes:
            align.semiglobal_distance(ref, p, 10)
        dt = time.perf_counter() - t0
        best = dt if best is None else min(best, dt)
    results["semiglobal_200x40v800"] = best

    # adapter anchoring: 20-nt adapter end-distances over a 1216-nt read
    ada = rng.integers(0, 4, 20).astype(np.uint8)
    reads = [rng.integers(0, 4, 1216).astype(np.uint8) for _ in range(100)]
    align.semiglobal_end_distances(ada, reads[0])
    best = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        for r in reads:
            align.semiglobal_end_distances(ada, r)
        dt = time.perf_counter() - t0
        best = dt if best is None else min(best, dt)
    results["end_distances_100x20v1216"] = best

    # block comparison: bounded edit distance between 148-nt blocks
    blocks = [rng.integers(0, 4, 148).astype(np.uint8) for _ in range(200)]
    align.levenshtein(blocks[0], blocks[1], 37)
    best = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        for a, b in zip(blocks[::2], blocks[1::2]):
            align.levenshtein(a, b, 37)
        dt = time.perf_counter() - t0
        best = dt if best is None else min(best, dt)
    results["levenshtein_100x148"] = best

    # consensus support: global alignment with traceback
    pairs = [
        (rng.integers(0, 4, 148).astype(np.uint8), rng.integers(0, 4, 150).astype(np.uint8))
        for _ in range(50)
    ]
    align.global_align_ops(*pairs[0])
    best = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        for a, b in pairs:
            align.global_align_ops(a, b)
        dt = time.perf_counter() - t0
        best = dt if best is None else min(best, dt)
    results["global_align_50x148v150"] = best

    return results


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--repeat", type=int, default=3)
    parser.add_argument("--_worker", action="store_true", help=argparse.SUPPRESS)
    args = parser.parse_args()

    if args._worker:
        print(json.dumps(run_workloads(args.repeat)))
        return

    rows = {}
    for flag in ("1", "0"):
        env = dict(os.environ, DNAPIX_NUMBA=flag)
        out = subprocess.run(
            [sys.executable, __file__, "--_worker", "--repeat", str(args.repeat)],
            env=env,
            capture_output=True,
            text=True,
            check=True,
        )
        data = json.loads(out.stdout.strip().splitlines()[-1])
        rows[data.pop("backend")] = data

    workloads = sorted(next(iter(rows.values())))
    backends = list(rows)
    header = f"{'workload':<32}" + "".join(f"{b + ' (s)':>14}" for b in backends)
    if len(backends) == 2:
        header += f"{'speedup':>10}"
    print(header)
    print("-" * len(header))
    for w in workloads:
        line = f"{w:<32}" + "".join(f"{rows[b][w]:>14.4f}" for b in backends)
        if len(backends) == 2:
            a, b = (rows[be][w] for be in backends)
            line += f"{b / a:>10.1f}x"
        print(line)


if __name__ == "__main__":
    main()
