"""Hyperparameter schedule: gamma = 2, xi = 2 L_G, the step size h, and the
iteration budget K guaranteeing KL <= epsilon for targets with log-Sobolev
constant rho (capped at 1), normalizer constants (C_N, C_M) and accuracy
epsilon <= 2d."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, asdict

from .potentials import Potential

__all__ = [
    "Schedule",
    "c_n_tilde",
    "step_size",
    "iteration_count",
    "iteration_count_from_bound",
    "initial_lyapunov_bound",
    "guaranteed_schedule",
]


@dataclass(frozen=True)
class Schedule:
    gamma: float
    xi: float
    h: float
    n_steps: int
    rho: float
    c_n_tilde: float
    c_m: float
    epsilon: float
    dim: int
    l_g: float
    l_h: float

    def as_dict(self) -> dict:
        return asdict(self)


def c_n_tilde(c_n: float, l_g: float) -> float:
    """C_N shifted by the initializer's own normalizer: C_N + (1/2) ln(L_G / 2 pi)."""
    return c_n + 0.5 * math.log(l_g / (2.0 * math.pi))


def _check_range(epsilon: float, dim: int) -> None:
    if epsilon > 2.0 * dim:
        warnings.warn(
            f"epsilon={epsilon} exceeds the guarantee range 2 d = {2 * dim}; "
            "computing the schedule anyway",
            RuntimeWarning,
            stacklevel=3,
        )


def step_size(
    l_g: float,
    l_h: float,
    rho: float,
    cnt: float,
    c_m: float,
    epsilon: float,
    dim: int,
) -> float:
    """h = (1/56) L_G^{-1/2} min{rho/(24 L_G), sqrt(L_G) rho / L_H}
                             * min{(C~_N + 2)^{-1/2} sqrt(eps/d), sqrt(eps/C_M)}.

    Vanishing L_H or C_M makes the corresponding min argument +inf.
    """
    if l_g <= 0 or rho <= 0 or epsilon <= 0 or dim < 1:
        raise ValueError("need l_g > 0, rho > 0, epsilon > 0, dim >= 1")
    if l_h < 0 or c_m < 0:
        raise ValueError("l_h and c_m must be nonnegative")
    if rho > 1:
        raise ValueError("rho must be capped at 1 (pass min(rho, 1))")
    if cnt + 2.0 <= 0:
        raise ValueError("c_n_tilde + 2 must be positive")
    _check_range(epsilon, dim)
    smooth = rho / (24.0 * l_g)
    if l_h > 0:
        smooth = min(smooth, math.sqrt(l_g) * rho / l_h)
    accuracy = math.sqrt(epsilon / dim) / math.sqrt(cnt + 2.0)
    if c_m > 0:
        accuracy = min(accuracy, math.sqrt(epsilon / c_m))
    return (1.0 / 56.0) / math.sqrt(l_g) * smooth * accuracy


def iteration_count(
    l_g: float,
    l_h: float,
    rho: float,
    cnt: float,
    c_m: float,
    epsilon: float,
    dim: int,
) -> int:
    """Closed-form budget

        K = 1680 max{24 L_G^{3/2}/rho^2, L_H/rho^2}
                 * max{sqrt(C~_N + 2) sqrt(d/eps), sqrt(C_M/eps)}
                 * ln(4 max{(C~_N + 1) d/eps, C_M/eps}),

    rounded up to an integer."""
    if rho <= 0 or rho > 1:
        raise ValueError("need 0 < rho <= 1")
    _check_range(epsilon, dim)
    smooth = max(24.0 * l_g**1.5 / rho**2, l_h / rho**2)
    accuracy = max(math.sqrt(cnt + 2.0) * math.sqrt(dim / epsilon),
                   math.sqrt(c_m / epsilon))
    log_arg = 4.0 * max((cnt + 1.0) * dim / epsilon, c_m / epsilon)
    return math.ceil(1680.0 * smooth * accuracy * math.log(log_arg))


def iteration_count_from_bound(
    rho: float, h: float, initial_bound: float, epsilon: float
) -> int:
    """Generic budget K = ceil((30 / (rho h)) ln(2 L[p_0] / epsilon)) given a
    bound on the initial Lyapunov value."""
    if rho <= 0 or h <= 0 or initial_bound <= 0 or epsilon <= 0:
        raise ValueError("all arguments must be positive")
    return math.ceil(30.0 / (rho * h) * math.log(2.0 * initial_bound / epsilon))


def initial_lyapunov_bound(cnt: float, c_m: float, dim: int) -> float:
    """L[p_0] <= (C~_N + 1) d + C_M for theta_0 ~ N(0, I/L_G), r_0 ~ N(0, I/xi)."""
    return (cnt + 1.0) * dim + c_m


def guaranteed_schedule(potential: Potential, epsilon: float) -> Schedule:
    """Full schedule for a potential: gamma = 2, xi = 2 L_G, h and K from the
    closed forms, rho capped at 1."""
    consts = potential.constants()
    rho = min(consts.rho, 1.0)
    cnt = c_n_tilde(consts.c_n, consts.l_g)
    h = step_size(consts.l_g, consts.l_h, rho, cnt, consts.c_m, epsilon, potential.dim)
    n_steps = iteration_count(consts.l_g, consts.l_h, rho, cnt, consts.c_m,
                              epsilon, potential.dim)
    return Schedule(
        gamma=2.0, xi=2.0 * consts.l_g, h=h, n_steps=n_steps, rho=rho,
        c_n_tilde=cnt, c_m=consts.c_m, epsilon=epsilon, dim=potential.dim,
        l_g=consts.l_g, l_h=consts.l_h,
    )
