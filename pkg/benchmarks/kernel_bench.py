"""Timing comparison of the numpy and compiled kernel backends.

Runs each kernel on realistic problem sizes (the default spectral grid
is 8001 points) and reports per-call time plus the compiled speedup.
With --end-to-end it also times a full default sweep per backend in a
subprocess, since the backend is fixed at import time.

Usage: python benchmarks/kernel_bench.py [--repeats N] [--end-to-end]
"""

import argparse
import os
import statistics
import subprocess
import sys
import tempfile
import time

import numpy as np

from cavpull.kernels import available_backends, get_backend


def _time_call(fn, repeats):
    # one warm-up, then median over repeats
    fn()
    samples = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        samples.append(time.perf_counter() - t0)
    return statistics.median(samples)


def _cases(n_points):
    x = np.linspace(1340.0, 1360.0, n_points)
    centers = np.array([1349.2, 1350.0, 1350.8, 1351.6])
    fwhms = np.array([0.05, 1.35, 0.05, 0.05])
    areas = np.array([0.25, 0.4, 0.2, 0.15])
    values = np.exp(-((x - 1350.0) / 2.0) ** 2)
    kernel = np.exp(-np.linspace(-4.0, 4.0, 101) ** 2 / 2.0)
    kernel /= kernel.sum()
    kbt = 0.08617333 * 20.0
    return [
        ("lorentzian_profile",
         lambda ns: ns.lorentzian_profile(x, 1350.0, 1.35)),
        ("sideband_profile",
         lambda ns: ns.sideband_profile(x, 1350.0, 0.1234, 0.9, kbt)),
        ("multi_lorentz_model",
         lambda ns: ns.multi_lorentz_model(x, centers, fwhms, areas, 0.0)),
        ("multi_lorentz_jacobian",
         lambda ns: ns.multi_lorentz_jacobian(x, centers, fwhms, areas)),
        ("convolve_reflect",
         lambda ns: ns.convolve_reflect(values, kernel)),
        ("trapezoid_uniform",
         lambda ns: ns.trapezoid_uniform(values, 0.0025)),
    ]


def run_kernel_bench(n_points, repeats):
    backends = available_backends()
    print(f"backends: {', '.join(backends)}   grid: {n_points} points   "
          f"median of {repeats}")
    print(f"{'kernel':<24}" + "".join(f"{b + ' (us)':>16}" for b in backends)
          + ("{:>10}".format("speedup") if len(backends) > 1 else ""))
    for label, call in _cases(n_points):
        times = [_time_call(lambda ns=get_backend(b): call(ns), repeats)
                 for b in backends]
        row = f"{label:<24}" + "".join(f"{t * 1e6:>16.1f}" for t in times)
        if len(times) > 1 and times[-1] > 0:
            row += f"{times[0] / times[-1]:>10.2f}x"
        print(row)


def run_end_to_end(repeats):
    print("\nfull default sweep (121 points, subprocess per backend):")
    for backend in available_backends():
        samples = []
        for _ in range(repeats):
            with tempfile.TemporaryDirectory() as tmp:
                env = dict(os.environ, CAVPULL_KERNELS=backend)
                t0 = time.perf_counter()
                subprocess.run(
                    [sys.executable, "-m", "cavpull", "--out", tmp],
                    check=True, env=env, stdout=subprocess.DEVNULL)
                samples.append(time.perf_counter() - t0)
        print(f"  {backend:<8} {min(samples):6.2f} s")


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--points", type=int, default=8001,
                        help="grid size for the kernel cases")
    parser.add_argument("--repeats", type=int, default=200,
                        help="timing repeats per kernel")
    parser.add_argument("--end-to-end", action="store_true",
                        help="also time a full sweep per backend")
    args = parser.parse_args(argv)
    run_kernel_bench(args.points, args.repeats)
    if args.end_to_end:
        run_end_to_end(max(3, args.repeats // 50))
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
