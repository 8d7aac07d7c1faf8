"""Time the compiled kernels against the plain-Python fallback.

Each backend runs in its own interpreter (the switch is read at import),
so the parent only spawns children and prints the table:

    python3 benchmarks/bench_kernels.py [--quick]

Outputs of the two backends are hashed as well: the random streams are
the same numpy generators, so the hashes should agree.
"""

import argparse
import hashlib
import json
import os
import subprocess
import sys
import time

import numpy as np


def _workloads(quick):
    from bdgmaps import snake, stats
    from bdgmaps.trees import Condition, sample_conditioned
    from bdgmaps.weights import fixture

    laws = fixture("q4")[2]
    scale = 1 if quick else 4

    def gw_trees():
        rng = np.random.Generator(np.random.Philox(1))
        out = [sample_conditioned(laws, 1, 0, Condition(size=50), rng=rng, method="rejection")
               for _ in range(5 * scale)]
        return np.concatenate([t.labels for t in out])

    def sequential_positive():
        rng = np.random.Generator(np.random.Philox(2))
        out = [sample_conditioned(laws, 1, 1, Condition(size=200, positive=True), rng=rng,
                                  method="sequential") for _ in range(5 * scale)]
        return np.concatenate([t.labels for t in out])

    def size_histogram():
        rng = np.random.Generator(np.random.Philox(3))
        return stats.type1_size_counts(laws, 2000 * scale, 200, rng)

    def snake_paths():
        rng = np.random.Generator(np.random.Philox(4))
        ens = snake.snake_ensemble(20 * scale, 512, rng)
        return np.column_stack([ens[k] for k in snake.FUNCTIONALS])

    return {
        "gw_rejection n=50": gw_trees,
        "sequential positive n=200": sequential_positive,
        "type-1 size histogram": size_histogram,
        "snake ensemble grid=512": snake_paths,
    }


def child(quick):
    from bdgmaps._accel import backend_name

    rows = {}
    for name, fn in _workloads(quick).items():
        fn()  # warm-up: triggers compilation (or loads the cache)
        t0 = time.perf_counter()
        out = fn()
        dt = time.perf_counter() - t0
        digest = hashlib.sha1(np.ascontiguousarray(out).tobytes()).hexdigest()[:12]
        rows[name] = {"seconds": dt, "digest": digest}
    print(json.dumps({"backend": backend_name(), "rows": rows}))


def run_backend(disable, quick):
    env = dict(os.environ, BDGMAPS_DISABLE_NUMBA="1" if disable else "0")
    cmd = [sys.executable, __file__, "--child"] + (["--quick"] if quick else [])
    res = subprocess.run(cmd, env=env, capture_output=True, text=True, check=True)
    return json.loads(res.stdout.strip().splitlines()[-1])


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--quick", action="store_true", help="smaller workloads")
    ap.add_argument("--child", action="store_true", help=argparse.SUPPRESS)
    args = ap.parse_args()
    if args.child:
        child(args.quick)
        return
    fast = run_backend(False, args.quick)
    slow = run_backend(True, args.quick)
    print(f"{'workload':<28}{fast['backend']:>10}{slow['backend']:>10}{'speedup':>9}  outputs")
    for name, a in fast["rows"].items():
        b = slow["rows"][name]
        same = "same" if a["digest"] == b["digest"] else "DIFFER"
        print(f"{name:<28}{a['seconds']:>9.3f}s{b['seconds']:>9.3f}s{b['seconds'] / a['seconds']:>8.1f}x  {same}")


if __name__ == "__main__":
    main()
