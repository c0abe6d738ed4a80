"""Benchmark the numba kernel builds against the pure-numpy fallback.

Runs each kernel in a subprocess per backend (the backend is chosen at
import time from POLARMUON_NUMBA), times repeated calls, and checks that
the two paths produce bit-identical results.

Usage:  python3 benchmarks/bench_kernels.py [--repeats N]
"""

from __future__ import annotations

import argparse
import json
import os
import subprocess
import sys
import tempfile

_WORKER = r"""
import json, os, sys, time
import numpy as np
from polarmuon._kernels import polynomial_iterate, power_iterate, using_numba
from polarmuon.polar import quintic_theoretical_schedule

repeats = int(sys.argv[1])
out_path = sys.argv[2]

rng = np.random.Generator(np.random.Philox(key=[1234, 0]))
cases = {
    "polynomial q=5 256x256": lambda: polynomial_iterate(z256, coeffs),
    "polynomial q=5 1024x256": lambda: polynomial_iterate(z1024, coeffs),
    "power h=2 1024x1024 ell=64": lambda: power_iterate(m1024, omega, 2),
}
coeffs = quintic_theoretical_schedule(5).coeff_array()
z256 = rng.standard_normal((256, 256))
z256 /= np.linalg.norm(z256)
z1024 = rng.standard_normal((1024, 256))
z1024 /= np.linalg.norm(z1024)
m1024 = rng.standard_normal((1024, 1024))
omega = rng.standard_normal((1024, 64))

results = {"backend": "numba" if using_numba() else "numpy", "cases": {}}
for name, fn in cases.items():
    fn()  # warm-up (includes JIT compilation on the numba path)
    t0 = time.perf_counter()
    for _ in range(repeats):
        out = fn()
    dt = (time.perf_counter() - t0) / repeats
    results["cases"][name] = {"seconds": dt, "checksum": float(np.sum(out))}
with open(out_path, "w") as f:
    json.dump(results, f)
"""


def run_backend(numba_flag: str, repeats: int) -> dict:
    env = dict(os.environ, POLARMUON_NUMBA=numba_flag)
    with tempfile.NamedTemporaryFile(suffix=".json", delete=False) as tmp:
        out_path = tmp.name
    try:
        subprocess.run(
            [sys.executable, "-c", _WORKER, str(repeats), out_path],
            env=env,
            check=True,
        )
        with open(out_path) as f:
            return json.load(f)
    finally:
        os.unlink(out_path)


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=20)
    args = parser.parse_args()

    numpy_res = run_backend("0", args.repeats)
    numba_res = run_backend("1", args.repeats)
    if numba_res["backend"] != "numba":
        print("numba not available; only the numpy path was timed")

    print(f"{'kernel':<32} {'numpy (ms)':>12} {'numba (ms)':>12} {'speedup':>9}")
    for name, np_case in numpy_res["cases"].items():
        nb_case = numba_res["cases"][name]
        if np_case["checksum"] != nb_case["checksum"]:
            print(f"{name}: MISMATCH between backends", file=sys.stderr)
            return 1
        speed = np_case["seconds"] / nb_case["seconds"]
        print(
            f"{name:<32} {np_case['seconds'] * 1e3:>12.3f} "
            f"{nb_case['seconds'] * 1e3:>12.3f} {speed:>8.2f}x"
        )
    print("backends agree bit-for-bit on every case")
    return 0


if __name__ == "__main__":
    sys.exit(main())
