"""Lifted randomized polar decomposition with Gaussian and Kaczmarz sketches.

Pipeline: draw a sketch Omega (n x ell), form Y = (M M^T)^h M Omega, take
Q = orth(Y), compress to B = Q^T M, run the polynomial polar iteration on
B / delta, and lift back with Q.  The expected-alignment lower bound and the
integer power-iteration rule are exposed as spectrum calculators.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import matcore
from ._kernels import polynomial_iterate, power_iterate
from .errors import DegenerateInputError, PreconditionError
from .matcore import RngStream
from .polar import PolarConfig

__all__ = [
    "SketchConfig",
    "SpectrumSummary",
    "ThetaGamma",
    "gaussian_sketch",
    "kaczmarz_sketch",
    "randomized_polar",
    "prop2_lower_bound",
    "choose_power_iterations",
    "theta_and_gamma",
]


@dataclass(frozen=True)
class SketchConfig:
    """Randomized-polar parameters: target rank s, oversampling p >= 2,
    power iterations h, sketch kind."""

    s: int
    p: int = 2
    h: int = 0
    kind: str = "gaussian"  # "gaussian" | "kaczmarz"

    def __post_init__(self):
        if self.s < 1:
            raise PreconditionError("target rank s must be >= 1")
        if self.p < 2:
            raise PreconditionError("oversampling p must be >= 2")
        if self.h < 0:
            raise PreconditionError("power iterations h must be >= 0")
        if self.kind not in ("gaussian", "kaczmarz"):
            raise PreconditionError(f"unknown sketch kind: {self.kind!r}")

    @property
    def ell(self) -> int:
        return self.s + self.p


@dataclass(frozen=True)
class SpectrumSummary:
    """Head/tail energy split of a singular spectrum at index s.

    H_s = sum of sigma_j^2 for j <= s, T_s for j > s, and the gap ratio
    rho_s = sigma_{s+1} / sigma_s.
    """

    sigma: np.ndarray
    s: int
    head_energy: float
    tail_energy: float
    gap_ratio: float

    @classmethod
    def from_sigma(cls, sigma, s: int) -> "SpectrumSummary":
        sg = np.asarray(sigma, dtype=np.float64)
        if sg.size < 2 or np.any(sg <= 0) or np.any(np.diff(sg) > 0):
            raise PreconditionError("sigma must be positive and nonincreasing, length >= 2")
        if not 1 <= s < sg.size:
            raise PreconditionError("need 1 <= s < len(sigma)")
        return cls(
            sigma=sg,
            s=s,
            head_energy=float(np.sum(sg[:s] ** 2)),
            tail_energy=float(np.sum(sg[s:] ** 2)),
            gap_ratio=float(sg[s] / sg[s - 1]),
        )


def gaussian_sketch(n: int, ell: int, rng: RngStream) -> np.ndarray:
    """n x ell matrix of i.i.d. standard normal entries."""
    return rng.normal((n, ell))


def kaczmarz_sketch(m, ell: int, rng: RngStream) -> np.ndarray:
    """Sparse sketch of rescaled canonical basis columns.

    Column j of the input is sampled with probability proportional to its
    squared norm; sketch column k is e_{i_k} / sqrt(ell * pi_{i_k}).
    """
    a = matcore.as_matrix(m)
    col_energy = np.sum(a * a, axis=0)
    total = float(np.sum(col_energy))
    if total == 0.0:
        raise DegenerateInputError("kaczmarz_sketch of zero matrix")
    pi = col_energy / total
    n = a.shape[1]
    idx = rng.generator.choice(n, size=ell, replace=True, p=pi)
    omega = np.zeros((n, ell))
    omega[idx, np.arange(ell)] = 1.0 / np.sqrt(ell * pi[idx])
    return omega


def _draw_sketch(a: np.ndarray, scfg: SketchConfig, rng: RngStream) -> np.ndarray:
    if scfg.kind == "gaussian":
        return gaussian_sketch(a.shape[1], scfg.ell, rng)
    return kaczmarz_sketch(a, scfg.ell, rng)


def randomized_polar(
    m, scfg: SketchConfig, pcfg: PolarConfig, rng: RngStream, return_info: bool = False
):
    """Project down, iterate, project up; returns Q @ Z_q.

    delta is resolved from ``pcfg.delta_rule`` on the *original* matrix, so
    theoretical schedules keep the almost-sure operator-norm <= 1 guarantee
    whenever delta >= ||m||_op.  A degenerate sketch (zero Y) is redrawn once
    before erroring.
    """
    a = matcore.as_matrix(m)
    if not a.any():
        raise DegenerateInputError("randomized_polar of zero matrix")
    if pcfg.solver != "polynomial":
        raise PreconditionError("randomized_polar requires a polynomial config")
    if scfg.ell > min(a.shape):
        raise PreconditionError(
            f"ell = s + p = {scfg.ell} exceeds min(shape) = {min(a.shape)}"
        )
    y = power_iterate(a, _draw_sketch(a, scfg, rng), scfg.h)
    if not y.any():
        y = power_iterate(a, _draw_sketch(a, scfg, rng), scfg.h)
        if not y.any():
            raise DegenerateInputError("sketch produced zero Y twice")
    q_basis = matcore.orthonormal_basis(y)
    b = q_basis.T @ a
    delta = pcfg.resolve_delta(a)
    z = polynomial_iterate(b / delta, pcfg.schedule.coeff_array())
    out = q_basis @ z
    if return_info:
        return out, {"delta": delta, "basis_rank": q_basis.shape[1]}
    return out


def prop2_lower_bound(
    spec: SpectrumSummary, s: int, p: int, h: int, delta: float
) -> float:
    """Expected-alignment lower bound (1/delta) * [H_s - s/(p-1) rho^(4h) T_s]_+."""
    if p < 2:
        raise PreconditionError("oversampling p must be >= 2")
    if s != spec.s:
        spec = SpectrumSummary.from_sigma(spec.sigma, s)
    if delta < spec.sigma[0]:
        raise PreconditionError("delta must be >= sigma_1")
    a = spec.head_energy - (s / (p - 1)) * spec.gap_ratio ** (4 * h) * spec.tail_energy
    return max(0.0, a) / delta


def choose_power_iterations(spec: SpectrumSummary, s: int, p: int) -> int | None:
    """Smallest integer h making the alignment bound positive; None if infeasible.

    h = 0 already suffices when H_s > s T_s / (p-1).  Otherwise, with a
    spectral gap (rho_s < 1), h = 1 + floor(log(s T_s / ((p-1) H_s)) /
    (4 log(1/rho_s))).  A flat tail (rho_s = 1) cannot be fixed by power
    iteration, so the rule reports infeasible.
    """
    if p < 2:
        raise PreconditionError("oversampling p must be >= 2")
    if s != spec.s:
        spec = SpectrumSummary.from_sigma(spec.sigma, s)
    penalty = s * spec.tail_energy / (p - 1)
    if spec.head_energy > penalty:
        return 0
    rho = spec.gap_ratio
    if rho >= 1.0:
        return None
    return 1 + int(
        np.floor(np.log(penalty / spec.head_energy) / (4.0 * np.log(1.0 / rho)))
    )


class ThetaGamma(NamedTuple):
    theta: float
    gamma: float
    degenerate: bool


def theta_and_gamma(
    spec: SpectrumSummary, s: int, p: int, h: int, delta: float
) -> ThetaGamma:
    """Certified alignment fraction theta = [A_{s,h}]_+ / (delta ||M||_*) and
    gamma = 1 - theta.  ``degenerate`` flags theta = 0 (bound uninformative)."""
    bound = prop2_lower_bound(spec, s, p, h, delta)
    nuclear = float(np.sum(spec.sigma))
    theta = bound * delta / (delta * nuclear)
    return ThetaGamma(theta=theta, gamma=1.0 - theta, degenerate=theta == 0.0)
