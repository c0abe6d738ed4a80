"""Hot numeric kernels: polynomial polar iteration and sketch power iteration.

Both kernels exist in two equivalent versions: a numba ``@njit`` build and a
pure-numpy fallback.  Set ``POLARMUON_NUMBA=0`` in the environment to force
the numpy path (useful on platforms without numba, and for the benchmark in
``benchmarks/bench_kernels.py``).  Both paths call the same BLAS underneath,
so results are identical.
"""

from __future__ import annotations

import os

import numpy as np

_USE_NUMBA = os.environ.get("POLARMUON_NUMBA", "1") != "0"

if _USE_NUMBA:
    try:
        from numba import njit
    except ImportError:  # pragma: no cover
        _USE_NUMBA = False


def _polynomial_iterate_np(z: np.ndarray, coeffs: np.ndarray) -> np.ndarray:
    # Each step applies a*Z + b*Z(Z^T Z) + c*Z(Z^T Z)^2, realized on the
    # smaller Gram factor: (ZZ^T)Z when rows <= cols, Z(Z^T Z) otherwise.
    for t in range(coeffs.shape[0]):
        a, b, c = coeffs[t, 0], coeffs[t, 1], coeffs[t, 2]
        if z.shape[0] <= z.shape[1]:
            g = z @ z.T
            z = a * z + (b * g + c * (g @ g)) @ z
        else:
            g = z.T @ z
            z = a * z + z @ (b * g + c * (g @ g))
    return z


def _power_iterate_np(m: np.ndarray, omega: np.ndarray, h: int) -> np.ndarray:
    y = m @ omega
    for _ in range(h):
        y = m @ (m.T @ y)
    return y


if _USE_NUMBA:
    _polynomial_iterate_jit = njit(cache=True)(_polynomial_iterate_np)
    _power_iterate_jit = njit(cache=True)(_power_iterate_np)

    def polynomial_iterate(z: np.ndarray, coeffs: np.ndarray) -> np.ndarray:
        return _polynomial_iterate_jit(
            np.ascontiguousarray(z), np.ascontiguousarray(coeffs)
        )

    def power_iterate(m: np.ndarray, omega: np.ndarray, h: int) -> np.ndarray:
        return _power_iterate_jit(
            np.ascontiguousarray(m), np.ascontiguousarray(omega), h
        )

else:
    polynomial_iterate = _polynomial_iterate_np
    power_iterate = _power_iterate_np


def using_numba() -> bool:
    return _USE_NUMBA
