"""Compare the numba and pure-numpy kernel backends.

Usage: python benchmarks/bench_kernels.py [--docs N] [--repeat R]

Both backends are imported directly, so the env flag does not matter here.
Reports best-of-R wall time per kernel and the max abs difference of outputs.
"""
import argparse
import time

import numpy as np

from fedlime.corpus import default_synthetic_spec, generate_synthetic
from fedlime.features import VectorizerConfig, vectorize_many
from fedlime.kernels import _numba as numba_backend
from fedlime.kernels import _numpy as numpy_backend


def best_of(fn, repeat):
    times = []
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def max_diff(a, b):
    a = a if isinstance(a, tuple) else (a,)
    b = b if isinstance(b, tuple) else (b,)
    return max(float(np.max(np.abs(np.asarray(x, float) - np.asarray(y, float)), initial=0.0)) for x, y in zip(a, b))


def cases(n_docs, seed):
    corpus = generate_synthetic(default_synthetic_spec(n_docs, 0.58, seed=seed))
    vec = VectorizerConfig()
    X = vectorize_many(vec, [d.text for d in corpus])
    y = np.array([d.label for d in corpus], dtype=np.float64)
    rng = np.random.default_rng(seed)
    w0 = rng.normal(0, 0.01, vec.hash_dim)
    order = rng.permutation(len(y)).astype(np.int64)
    masks = (rng.random((500, 12)) < 0.7).astype(np.float64)
    out = rng.random(500)
    pi = rng.random(500)

    def sgd(be):
        def run():
            w = w0.copy()
            b, losses, bad = be.sgd_epoch(w, 0.0, X.indptr, X.indices, X.data, y, order, 0.5, 10, 1e-4)
            return w, np.array([b]), losses
        return run

    def margins(be):
        return lambda: be.csr_margins(X.indptr, X.indices, X.data, w0, 0.1)

    def ridge(be):
        def run():
            a, rhs = be.weighted_normal_equations(masks, out, pi, 1e-3)
            x, _ = be.cholesky_solve(a, rhs)
            return x
        return run

    return {"sgd_epoch": sgd, "csr_margins": margins, "normal_eq+cholesky": ridge}


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--docs", type=int, default=5000)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    print(f"{'kernel':<20} {'numba (ms)':>11} {'numpy (ms)':>11} {'speedup':>8} {'max|diff|':>10}")
    for name, make in cases(args.docs, args.seed).items():
        make(numba_backend)()  # JIT warm-up
        t_nb, o_nb = best_of(make(numba_backend), args.repeat)
        t_np, o_np = best_of(make(numpy_backend), args.repeat)
        print(f"{name:<20} {t_nb * 1e3:>11.3f} {t_np * 1e3:>11.3f} {t_np / t_nb:>7.1f}x {max_diff(o_nb, o_np):>10.2e}")


if __name__ == "__main__":
    main()
