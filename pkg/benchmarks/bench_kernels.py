"""Time the compiled kernels against the pure-Python fallback.

    python benchmarks/bench_kernels.py --n 1000 --repeat 200
"""

import argparse
import timeit

import numpy as np

from dr_ate import _backend
from dr_ate.monte_carlo import McConfig, run_monte_carlo
from dr_ate.synthetic import load_default_spec


def bench(name, args):
    rng = np.random.default_rng(0)
    n = args.n
    x = rng.standard_normal((n, 3)) + 1.0
    t = (rng.random(n) < 0.3).astype(float)
    y = x @ [1.0, -0.5, 0.2] + t * x[:, 0] + rng.standard_normal(n)
    W = np.column_stack([t - t.mean(), x, np.ones(n)])
    spec = load_default_spec("29b")
    cfg = McConfig(spec, (n,), args.mc_reps, master_seed=1)

    prev = _backend.use_backend(name)
    try:
        rows = {
            "householder_lstsq": min(timeit.repeat(lambda: _backend.householder_lstsq(W, y),
                                                   number=args.repeat, repeat=3)) / args.repeat,
            "replicate_estimates": min(timeit.repeat(lambda: _backend.replicate_estimates(y, t, x),
                                                     number=args.repeat, repeat=3)) / args.repeat,
            f"monte_carlo ({args.mc_reps} reps)": min(timeit.repeat(lambda: run_monte_carlo(cfg),
                                                                    number=1, repeat=2)),
        }
    finally:
        _backend.use_backend(prev)
    return rows


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=1000, help="rows per system (default 1000)")
    ap.add_argument("--repeat", type=int, default=200, help="calls per timing (default 200)")
    ap.add_argument("--mc-reps", type=int, default=500, help="replications for the MC timing")
    args = ap.parse_args()

    backends = _backend.available_backends()
    results = {b: bench(b, args) for b in backends}
    print(f"n = {args.n}; backends: {', '.join(backends)}")
    header = f"{'kernel':32s}" + "".join(f"{b:>14s}" for b in backends)
    if len(backends) > 1:
        header += f"{'speedup':>10s}"
    print(header)
    for key in results[backends[0]]:
        vals = [results[b][key] for b in backends]
        line = f"{key:32s}" + "".join(f"{v * 1e3:>11.3f} ms" for v in vals)
        if len(backends) > 1:
            line += f"{results['python'][key] / results['cython'][key]:>9.1f}x"
        print(line)


if __name__ == "__main__":
    main()
