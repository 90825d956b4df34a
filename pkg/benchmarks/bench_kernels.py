"""Compare the compiled and pure-Python kernel backends.

Usage: python benchmarks/bench_kernels.py [--repeat N]

Times each hot kernel on inputs shaped like the ones the harness produces
(about 114 training rows, 2 features, 5-column stacking meta designs) and
one full Monte Carlo iteration of the 11-model roster under each backend.

The two signed-rank kernels use different algorithms: the compiled one walks
all 2^n sign vectors in Gray-code order, the fallback counts rank sums with a
subset-sum recursion.  Both are exact, so that row is not a like-for-like
comparison.
"""

import argparse
import time

import numpy as np

from ensemble_effort import kernels
from ensemble_effort.dataset import generate_synthetic
from ensemble_effort.harness import ExperimentConfig, run_experiment


def _best(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def _cases():
    rng = np.random.default_rng(0)
    n = 114
    X = rng.uniform(size=(n, 2))
    y = 44.7 + X @ [90.0, -15.0] + rng.normal(0, 30, n)
    y[:4] += 150.0
    Z = np.column_stack([y + rng.normal(0, 3, n) for _ in range(3)] + [X])
    Zc = Z - Z.mean(0)
    G, c = Zc.T @ Zc / n, Zc.T @ (y - y.mean()) / n
    lam = 0.1 * np.abs(c).max()
    ranks2 = np.arange(2, 41, 2, dtype=np.int64)
    return {
        "huber_irls (n=114, p=2)": lambda k: k.huber_irls(X, y, -1.0, 1e-6, 1000),
        "lasso_cd_gram (p=5 meta)": lambda k: k.lasso_cd_gram(G, c, lam, 1e-8, 1_000_000, np.zeros(5)),
        "signed_rank_counts (n=20)*": lambda k: k.signed_rank_counts(ranks2),
    }


def _roster_iteration(impl, repeat):
    saved = {name: getattr(kernels, name) for name in ("lasso_cd_gram", "huber_irls", "signed_rank_counts")}
    for name in saved:
        setattr(kernels, name, getattr(impl, name))
    try:
        d = generate_synthetic(163, 30.0, 7)
        cfg = ExperimentConfig(mc_iterations=5, master_seed=0)
        return _best(lambda: run_experiment(cfg, d), repeat) / cfg.mc_iterations
    finally:
        for name, fn in saved.items():
            setattr(kernels, name, fn)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--repeat", type=int, default=20)
    args = ap.parse_args(argv)
    backends = kernels.available_backends()
    if "cython" not in backends:
        print("compiled extension not built; only the python backend is available")
    names = sorted(backends)
    print(f"{'kernel':<30}" + "".join(f"{n:>14}" for n in names) + ("     speedup" if len(names) > 1 else ""))
    for label, fn in _cases().items():
        times = [_best(lambda: fn(backends[n]), args.repeat) for n in names]
        row = f"{label:<30}" + "".join(f"{t * 1e3:>11.3f} ms" for t in times)
        if len(names) > 1:
            row += f"{times[names.index('python')] / times[names.index('cython')]:>11.1f}x"
        print(row)
    times = [_roster_iteration(backends[n], max(1, args.repeat // 10)) for n in names]
    row = f"{'one MC iteration, 11 models':<30}" + "".join(f"{t * 1e3:>11.1f} ms" for t in times)
    if len(names) > 1:
        row += f"{times[names.index('python')] / times[names.index('cython')]:>11.1f}x"
    print(row)
    print("* different algorithms per backend, see the module docstring")


if __name__ == "__main__":
    main()
