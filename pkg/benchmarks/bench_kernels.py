"""Time the numba kernels against their numpy fallbacks.

    python benchmarks/bench_kernels.py [--repeat N] [--quick]

Each row reports the best-of-N wall time for both backends, the speedup, and
the largest difference between their outputs.  Compilation happens in a
warm-up call that is not timed.
"""
import argparse
import time

import numpy as np

from tilesparse.kernels import numba_impl, numpy_impl


def best_time(fn, args, repeat):
    best = np.inf
    out = None
    for _ in range(repeat):
        fresh = [a.copy() if isinstance(a, np.ndarray) else a for a in args]
        t0 = time.perf_counter()
        out = fn(*fresh)
        best = min(best, time.perf_counter() - t0)
    return best, out


def cases(rng, quick):
    n_eig = 64 if quick else 196
    a = rng.standard_normal((n_eig, n_eig))
    yield "jacobi_eigh", f"{n_eig}x{n_eig} symmetric", (a + a.T, 1e-12, 100), lambda o: np.sort(o[0])

    k, n = 9, 256 if quick else 4096
    x = rng.standard_normal((64, k))
    ys = rng.standard_normal((64, n))
    yield ("lasso_cd_batch", f"k={k}, {n} patches",
           (x.T @ x, np.ascontiguousarray(x.T @ ys), 0.8, 1e-8 * (1 + np.linalg.norm(ys, axis=0)), 10000),
           lambda o: o[0])

    m = 80 if quick else 400
    xs = np.hstack([rng.standard_normal((m, 16)), np.ones((m, 1))])
    y = np.where(xs[:, 0] + 0.5 * rng.standard_normal(m) > 0, 1.0, -1.0)
    yield "svm_dual_cd", f"{m} samples x 16", (xs, y, np.ones(m), 1e-6, 100000), lambda o: o[0]

    rows = 200 if quick else 2000
    xf = rng.standard_normal((rows, 64))
    yf = rng.integers(0, 4, rows).astype(np.int64)
    idx = rng.integers(0, rows, rows).astype(np.int64)
    feats = rng.permutation(64)[:8].astype(np.int64)
    yield "best_split", f"{rows} rows, 8 features", (xf, yf, idx, feats, 4), lambda o: np.array(o[1:])


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--quick", action="store_true", help="small sizes, for smoke runs")
    args = ap.parse_args(argv)
    if numba_impl is None:
        raise SystemExit("numba is not installed; nothing to compare")
    rng = np.random.default_rng(0)
    print(f"{'kernel':<16}{'case':<24}{'numba s':>10}{'numpy s':>10}{'speedup':>9}{'max diff':>11}")
    rows = []
    for name, label, call_args, key in cases(rng, args.quick):
        fast, slow = getattr(numba_impl, name), getattr(numpy_impl, name)
        fast(*[a.copy() if isinstance(a, np.ndarray) else a for a in call_args])
        t_nb, out_nb = best_time(fast, call_args, args.repeat)
        t_np, out_np = best_time(slow, call_args, args.repeat)
        diff = float(np.max(np.abs(key(out_nb) - key(out_np))))
        rows.append((name, t_nb, t_np))
        print(f"{name:<16}{label:<24}{t_nb:>10.4f}{t_np:>10.4f}{t_np / t_nb:>8.1f}x{diff:>11.1e}")
    return rows


if __name__ == "__main__":
    main()
