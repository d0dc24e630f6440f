"""Time the compiled kernels against the numpy fallback.

Usage::

    python3 benchmarks/bench_kernels.py [--repeat 5]

The kernel cases are synthetic inputs sized like a Table 1 detection image
(2000-sample window, 400 rows by 250 columns). Per-pixel lag caps exercise the
general lag-sum loop; row-constant caps let the numpy path use a single
matrix product. The last case times one full proposed run on Table 1 with
each backend swapped in.
"""

import argparse
import timeit

import numpy as np

from antiisrj import _backend, _kernels_py, harness

try:
    from antiisrj import _kernels as compiled
except ImportError:
    compiled = None


def lag_case(rng, per_pixel, n=2000, nrows=400, ncols=250, cap=200):
    g1 = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    g2 = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    cols = np.linspace(cap, n - 1 - cap, ncols).astype(np.int64)
    if per_pixel:
        caps = rng.integers(0, cap, size=(nrows, ncols)).astype(np.int64)
    else:
        caps = np.tile(rng.integers(0, cap, size=(nrows, 1)), (1, ncols)).astype(np.int64)
    chirp = np.exp(1j * 1e-4 * np.arange(cap + 1) ** 2)
    return (g1, g2, cols, caps, rng.standard_normal(nrows), rng.standard_normal(ncols), chirp, 0.05)


def hough_case(rng, shape=(400, 250), n_theta=180):
    w = rng.random(shape) * (rng.random(shape) > 0.9)
    th = np.linspace(-np.pi / 2, np.pi / 2, n_theta, endpoint=False)
    diag = float(np.hypot(*shape))
    return (w, np.cos(th), np.sin(th), -diag, 1.0, int(2 * diag) + 2)


def best_of(fn, args, repeat):
    return min(timeit.repeat(lambda: fn(*args), number=1, repeat=repeat))


def scenario_run(impl):
    """One proposed Table 1 run with ``impl`` supplying both kernels."""
    saved = _backend.glwd_lag_sum, _backend.hough_vote
    _backend.glwd_lag_sum, _backend.hough_vote = impl.glwd_lag_sum, impl.hough_vote
    try:
        harness.run_scenario(harness.resolve_config("table1"), "proposed", harness.trial_seed(1, 0, 0))
    finally:
        _backend.glwd_lag_sum, _backend.hough_vote = saved


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    rng = np.random.default_rng(0)
    cases = [
        ("glwd_lag_sum (per-pixel caps)", "glwd_lag_sum", lag_case(rng, True)),
        ("glwd_lag_sum (row caps)", "glwd_lag_sum", lag_case(rng, False)),
        ("hough_vote", "hough_vote", hough_case(rng)),
    ]
    print(f"{'kernel':32s} {'python [ms]':>12s} {'cython [ms]':>12s} {'speed-up':>9s}")
    for label, name, case in cases:
        t_py = best_of(getattr(_kernels_py, name), case, args.repeat)
        if compiled is None:
            print(f"{label:32s} {1e3 * t_py:12.1f} {'n/a':>12s} {'n/a':>9s}")
            continue
        t_c = best_of(getattr(compiled, name), case, args.repeat)
        print(f"{label:32s} {1e3 * t_py:12.1f} {1e3 * t_c:12.1f} {t_py / t_c:8.1f}x")
    t_py = best_of(scenario_run, (_kernels_py,), args.repeat)
    if compiled is None:
        print(f"{'table1 proposed run':32s} {1e3 * t_py:12.1f} {'n/a':>12s} {'n/a':>9s}")
        return
    t_c = best_of(scenario_run, (compiled,), args.repeat)
    print(f"{'table1 proposed run':32s} {1e3 * t_py:12.1f} {1e3 * t_c:12.1f} {t_py / t_c:8.1f}x")


if __name__ == "__main__":
    main()
