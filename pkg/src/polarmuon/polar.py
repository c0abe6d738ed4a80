"""Polar decomposition: exact oracle and polynomial (Newton-Schulz family) solvers.

A polynomial solver normalizes the input by a scale delta, then applies q
odd-polynomial steps phi_t(x) = a_t*x + b_t*x^3 + c_t*x^5 to the singular
values via matrix products.  The alignment coefficient gamma of such a solver
has a closed form in the singular values, exposed as :func:`prop1_gamma`.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import matcore
from ._kernels import polynomial_iterate
from .errors import DegenerateInputError, PreconditionError

__all__ = [
    "PolynomialSchedule",
    "PolarConfig",
    "cubic_schedule",
    "quintic_theoretical_schedule",
    "quintic_empirical_schedule",
    "polar_express_schedule",
    "schedule_by_name",
    "exact_polar",
    "apply_polynomial_step",
    "inexact_polar",
    "prop1_gamma",
]

CUBIC_COEFFS = (1.5, -0.5, 0.0)
QUINTIC_THEORETICAL_COEFFS = (15.0 / 8.0, -10.0 / 8.0, 3.0 / 8.0)
QUINTIC_EMPIRICAL_COEFFS = (3.4445, -4.7750, 2.0315)

# Iteration-dependent degree-5 coefficient tables (9 steps each), as used by
# the PolarExpress solver in its two published tunings.
_POLAR_EXPRESS = {
    "nanogpt": (
        (8.1566, -22.4833, 15.8788),
        (4.0429, -2.8089, 0.5000),
        (3.8917, -2.7725, 0.5061),
        (3.2858, -2.3681, 0.4645),
        (2.3005, -1.6112, 0.3833),
        (1.8631, -1.2042, 0.3422),
        (1.8383, -1.1779, 0.3397),
        (1.8382, -1.1779, 0.3396),
        (1.8750, -1.2500, 0.3750),
    ),
    "cifar10": (
        (8.2872, -23.5959, 17.3004),
        (4.1071, -2.9478, 0.5448),
        (3.9487, -2.9089, 0.5518),
        (3.3184, -2.4885, 0.5100),
        (2.3007, -1.6689, 0.4188),
        (1.8913, -1.2680, 0.3768),
        (1.8750, -1.2500, 0.3750),
        (1.8750, -1.2500, 0.3750),
        (1.8750, -1.2500, 0.3750),
    ),
}


@dataclass(frozen=True)
class PolynomialSchedule:
    """Ordered coefficient triples (a_t, b_t, c_t), one per iteration.

    ``theoretical`` marks schedules whose scalar map provably stays in [0, 1]
    on [0, 1] (cubic, quintic-theoretical); only for those is the hard
    operator-norm bound <= 1 asserted downstream.
    """

    steps: tuple[tuple[float, float, float], ...]
    name: str = "custom"
    theoretical: bool = False

    @property
    def q(self) -> int:
        return len(self.steps)

    def coeff_array(self) -> np.ndarray:
        return np.array(self.steps, dtype=np.float64).reshape(-1, 3)

    def scalar_map(self, x):
        """Apply the scalar recursion p_0(x)=x, p_{t+1}=phi_t(p_t) elementwise."""
        p = np.asarray(x, dtype=np.float64)
        for a, b, c in self.steps:
            p = a * p + b * p**3 + c * p**5
        return p


def cubic_schedule(q: int) -> PolynomialSchedule:
    if q < 0:
        raise PreconditionError("q must be nonnegative")
    return PolynomialSchedule((CUBIC_COEFFS,) * q, name="cubic", theoretical=True)


def quintic_theoretical_schedule(q: int) -> PolynomialSchedule:
    if q < 0:
        raise PreconditionError("q must be nonnegative")
    return PolynomialSchedule(
        (QUINTIC_THEORETICAL_COEFFS,) * q, name="quintic-theoretical", theoretical=True
    )


def quintic_empirical_schedule(q: int) -> PolynomialSchedule:
    if q < 1:
        raise PreconditionError("q must be >= 1")
    return PolynomialSchedule(
        (QUINTIC_EMPIRICAL_COEFFS,) * q, name="quintic-empirical", theoretical=False
    )


def polar_express_schedule(variant: str) -> PolynomialSchedule:
    if variant not in _POLAR_EXPRESS:
        raise PreconditionError(f"unknown PolarExpress variant: {variant!r}")
    return PolynomialSchedule(
        _POLAR_EXPRESS[variant], name=f"polar-express-{variant}", theoretical=False
    )


def schedule_by_name(name: str, q: int) -> PolynomialSchedule:
    """Builtin schedule lookup used by the config layer."""
    if name == "cubic":
        return cubic_schedule(q)
    if name == "quintic-theoretical":
        return quintic_theoretical_schedule(q)
    if name == "quintic-empirical":
        return quintic_empirical_schedule(q)
    if name == "polar-express-nanogpt":
        return polar_express_schedule("nanogpt")
    if name == "polar-express-cifar10":
        return polar_express_schedule("cifar10")
    raise PreconditionError(f"unknown schedule name: {name!r}")


@dataclass(frozen=True)
class PolarConfig:
    """Selects a polar solver.

    ``delta_rule``: "frobenius-norm" (default, the common practitioner
    choice), "operator-norm" (tight scaling), or an explicit positive float.
    """

    solver: str = "polynomial"  # "exact" | "polynomial"
    schedule: PolynomialSchedule = field(
        default_factory=lambda: quintic_theoretical_schedule(6)
    )
    delta_rule: str | float = "frobenius-norm"

    def __post_init__(self):
        if self.solver not in ("exact", "polynomial"):
            raise PreconditionError(f"unknown solver: {self.solver!r}")
        if isinstance(self.delta_rule, (int, float)):
            if self.delta_rule <= 0:
                raise PreconditionError("explicit delta must be positive")
        elif self.delta_rule not in ("operator-norm", "frobenius-norm"):
            raise PreconditionError(f"unknown delta rule: {self.delta_rule!r}")

    @property
    def q(self) -> int:
        return self.schedule.q

    def resolve_delta(self, m: np.ndarray) -> float:
        if isinstance(self.delta_rule, (int, float)):
            return float(self.delta_rule)
        if self.delta_rule == "operator-norm":
            return matcore.operator_norm(m)
        return matcore.frobenius_norm(m)


def exact_polar(m) -> np.ndarray:
    """U V^T from the compact SVD: the nuclear-norm-aligned partial isometry."""
    f = matcore.svd(m)
    return f.u @ f.v.T


def apply_polynomial_step(z, coeffs) -> np.ndarray:
    """One step a*Z + b*Z(Z^T Z) + c*Z(Z^T Z)^2 on the singular values of Z."""
    a = matcore.as_matrix(z)
    c = np.array([coeffs], dtype=np.float64)
    return polynomial_iterate(a, c)


def inexact_polar(m, cfg: PolarConfig, return_info: bool = False):
    """Polynomial polar approximation p_q(m / delta).

    With ``return_info=True`` also returns a dict carrying the resolved delta
    and a ``delta_below_operator_norm`` warning flag: an explicit delta below
    the operator norm voids the <= 1 spectral guarantee of theoretical
    schedules.
    """
    a = matcore.as_matrix(m)
    if not a.any():
        raise DegenerateInputError("inexact_polar of zero matrix")
    if cfg.solver != "polynomial":
        raise PreconditionError("inexact_polar requires a polynomial config")
    delta = cfg.resolve_delta(a)
    info = {"delta": delta, "delta_below_operator_norm": False}
    if isinstance(cfg.delta_rule, (int, float)) and cfg.schedule.theoretical:
        if delta < matcore.operator_norm(a):
            info["delta_below_operator_norm"] = True
    z = polynomial_iterate(a / delta, cfg.schedule.coeff_array())
    if return_info:
        return z, info
    return z


def prop1_gamma(sigma, delta: float, schedule: PolynomialSchedule) -> float:
    """Alignment loss 1 - sum(sigma_i * p_q(sigma_i/delta)) / sum(sigma_i)."""
    s = np.asarray(sigma, dtype=np.float64)
    if s.size == 0 or np.any(s <= 0):
        raise PreconditionError("sigma must be nonempty and positive")
    # ulp-scale slack: delta and sigma often come from independent SVD calls
    if delta < np.max(s) * (1.0 - 1e-12):
        raise PreconditionError("delta must be >= max(sigma)")
    p = schedule.scalar_map(s / delta)
    return float(1.0 - np.sum(s * p) / np.sum(s))
