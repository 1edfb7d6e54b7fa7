"""One-step transition kernels for all samplers.

The underdamped sampler draws x' ~ N(mu(x), Sigma) where mu and Sigma are the
closed-form mean and covariance of the linear SDE

    d theta = xi r dt
    d r     = -gamma xi r dt - grad U(theta_0) dt + sqrt(2 gamma) dB

integrated over one step of length h with the gradient frozen at the step's
start.  Sigma couples each (theta_i, r_i) pair identically, so sampling uses a
single 2x2 Cholesky factor shared across coordinates.

States carry position and momentum as (..., d) arrays; a leading batch axis
runs that many chains at once.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .potentials import Potential

__all__ = [
    "PhaseState",
    "StepCoefficients",
    "underdamped_covariance",
    "underdamped_mean",
    "underdamped_step",
    "em_step",
    "overdamped_step",
    "hmc_momentum_refresh",
    "leapfrog_step",
    "hmc_step",
    "generic_dq_step",
    "rng_stream",
    "spawn_streams",
]


@dataclass(frozen=True)
class PhaseState:
    """Position-momentum pair; theta and r share shape (..., d)."""

    theta: np.ndarray
    r: np.ndarray

    def __post_init__(self):
        theta = np.asarray(self.theta, dtype=float)
        r = np.asarray(self.r, dtype=float)
        if theta.shape != r.shape:
            raise ValueError(f"theta {theta.shape} and r {r.shape} differ in shape")
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "r", r)

    @property
    def dim(self) -> int:
        return self.theta.shape[-1]


# Taylor coefficients of f(a) = 2a - 3 + 4 e^{-a} - e^{-2a} from a^3 up:
# f(a) = sum_{n>=3} (4 (-1)^n - (-2)^n) / n! * a^n.  Below _SERIES_CUT the
# direct formula cancels to third order and loses ~eps*(9/2)/a^3 relative.
_S11_COEFFS = tuple(
    (4 * (-1) ** n - (-2) ** n) / math.factorial(n) for n in range(3, 11)
)
_SERIES_CUT = 0.08


def _s11_shape(a: float) -> float:
    """f(a) = 2a - 3 + 4 e^{-a} - e^{-2a}, accurate near a = 0."""
    if a < _SERIES_CUT:
        acc = 0.0
        for c in reversed(_S11_COEFFS):
            acc = acc * a + c
        return acc * a**3
    return 2.0 * a - 3.0 + 4.0 * math.exp(-a) - math.exp(-2.0 * a)


@dataclass(frozen=True)
class StepCoefficients:
    """Scalars of the exact one-step kernel at friction gamma, momentum
    temperature 1/xi and step h.

    e1 = e^{-gamma xi h}, e2 = e^{-2 gamma xi h};  (s11, s12, s22) fill the
    per-coordinate 2x2 noise covariance [[s11, s12], [s12, s22]].  om_e1 and
    drift_gap are 1 - e1 and (h - (1 - e1)/(gamma xi)) / gamma evaluated
    without cancellation.
    """

    gamma: float
    xi: float
    h: float
    e1: float
    e2: float
    s11: float
    s12: float
    s22: float
    om_e1: float
    drift_gap: float

    @property
    def noise_cov(self) -> np.ndarray:
        return np.array([[self.s11, self.s12], [self.s12, self.s22]])

    def cholesky(self) -> tuple[float, float, float]:
        """Lower-triangular factor (l11, l21, l22) of the 2x2 noise block.

        If rounding pushed the block indefinite, s12 is clamped to the PSD
        boundary and a warning is emitted.
        """
        if self.s11 <= 0.0:
            return 0.0, 0.0, 0.0
        l11 = math.sqrt(self.s11)
        s12 = self.s12
        schur = self.s22 - s12 * s12 / self.s11
        if schur < 0.0:
            warnings.warn(
                "noise covariance block indefinite by rounding; "
                "clamping cross term to the PSD boundary",
                RuntimeWarning,
                stacklevel=2,
            )
            s12 = math.copysign(math.sqrt(self.s11 * self.s22), s12)
            schur = 0.0
        return l11, s12 / l11, math.sqrt(schur)


def underdamped_covariance(gamma: float, xi: float, h: float) -> StepCoefficients:
    """Closed-form step coefficients; stable for gamma*xi*h down to 0."""
    if gamma <= 0 or xi <= 0:
        raise ValueError("gamma and xi must be positive")
    if h < 0:
        raise ValueError("h must be nonnegative")
    a = gamma * xi * h
    e1 = math.exp(-a)
    e2 = math.exp(-2.0 * a)
    om_e1 = -math.expm1(-a)
    s11 = _s11_shape(a) / (gamma * gamma * xi)
    s12 = om_e1 * om_e1 / (gamma * xi)
    s22 = -math.expm1(-2.0 * a) / xi
    # drift_gap = (h - (1 - e1)/(gamma xi)) / gamma, stable via expm1
    drift_gap = (a + math.expm1(-a)) / (gamma * gamma * xi)
    return StepCoefficients(
        gamma=gamma, xi=xi, h=h, e1=e1, e2=e2,
        s11=s11, s12=s12, s22=s22, om_e1=om_e1, drift_gap=drift_gap,
    )


def underdamped_mean(state: PhaseState, grad: np.ndarray, c: StepCoefficients) -> PhaseState:
    """Conditional mean mu(x) of the exact one-step kernel, gradient frozen."""
    grad = np.asarray(grad, dtype=float)
    if grad.shape != state.theta.shape:
        raise ValueError(f"gradient shape {grad.shape} != state shape {state.theta.shape}")
    theta = state.theta + (c.om_e1 / c.gamma) * state.r - c.drift_gap * grad
    r = c.e1 * state.r - (c.om_e1 / (c.gamma * c.xi)) * grad
    return PhaseState(theta, r)


def underdamped_step(
    state: PhaseState,
    potential: Potential,
    c: StepCoefficients,
    rng: np.random.Generator,
) -> PhaseState:
    """One exact-kernel transition: x' ~ N(mu(x), Sigma)."""
    mean = underdamped_mean(state, potential.grad(state.theta), c)
    l11, l21, l22 = c.cholesky()
    if l11 == 0.0 and l22 == 0.0:
        return mean
    z1 = rng.standard_normal(state.theta.shape)
    z2 = rng.standard_normal(state.theta.shape)
    return PhaseState(mean.theta + l11 * z1, mean.r + l21 * z1 + l22 * z2)


def em_step(
    state: PhaseState,
    potential: Potential,
    gamma: float,
    xi: float,
    h: float,
    rng: np.random.Generator,
) -> PhaseState:
    """Euler-Maruyama transition of the same dynamics (first order)."""
    if h <= 0:
        raise ValueError("h must be positive")
    z = rng.standard_normal(state.theta.shape)
    theta = state.theta + h * xi * state.r
    r = (1.0 - h * gamma * xi) * state.r - h * potential.grad(state.theta) \
        + math.sqrt(2.0 * gamma * h) * z
    return PhaseState(theta, r)


def overdamped_step(
    theta: np.ndarray,
    potential: Potential,
    h: float,
    rng: np.random.Generator,
) -> np.ndarray:
    """Unadjusted Langevin step: theta' = theta - h grad U + sqrt(2h) z."""
    if h <= 0:
        raise ValueError("h must be positive")
    theta = np.asarray(theta, dtype=float)
    z = rng.standard_normal(theta.shape)
    return theta - h * potential.grad(theta) + math.sqrt(2.0 * h) * z


def hmc_momentum_refresh(
    r: np.ndarray,
    gamma: float,
    xi: float,
    duration: float,
    rng: np.random.Generator,
) -> np.ndarray:
    """Exact momentum OU update over `duration`:

        r' = e^{-gamma xi s} r + sqrt((1 - e^{-2 gamma xi s}) / xi) z.

    duration -> inf resamples r from the stationary N(0, I/xi).
    """
    if duration < 0:
        raise ValueError("duration must be nonnegative")
    a = gamma * xi * duration
    decay = math.exp(-a)
    std = math.sqrt(-math.expm1(-2.0 * a) / xi)
    if std == 0.0:
        return decay * np.asarray(r, dtype=float)
    return decay * np.asarray(r, dtype=float) + std * rng.standard_normal(np.shape(r))


def leapfrog_step(state: PhaseState, potential: Potential, xi: float, h: float) -> PhaseState:
    """Leapfrog for H = U(theta) + (xi/2)|r|^2 (d theta = xi r, d r = -grad U)."""
    if h <= 0:
        raise ValueError("h must be positive")
    r_half = state.r - 0.5 * h * potential.grad(state.theta)
    theta = state.theta + h * xi * r_half
    r = r_half - 0.5 * h * potential.grad(theta)
    return PhaseState(theta, r)


def hmc_step(
    state: PhaseState,
    potential: Potential,
    gamma: float,
    xi: float,
    h: float,
    rng: np.random.Generator,
    n_leapfrog: int = 5,
    refresh_duration: float | None = None,
) -> PhaseState:
    """Splitting sampler: n_leapfrog leapfrog substeps of size h, then one
    momentum refresh of the given duration (default h).  No
    Metropolis correction."""
    if n_leapfrog < 1:
        raise ValueError("n_leapfrog must be >= 1")
    s = h if refresh_duration is None else refresh_duration
    for _ in range(n_leapfrog):
        state = leapfrog_step(state, potential, xi, h)
    r = hmc_momentum_refresh(state.r, gamma, xi, s, rng)
    return PhaseState(state.theta, r)


def _psd_sqrt(mat: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(mat)
    w = np.clip(w, 0.0, None)
    return (v * np.sqrt(w)) @ v.T


def generic_dq_step(
    x: np.ndarray,
    logp_grad,
    diffusion: np.ndarray,
    curl: np.ndarray,
    h: float,
    rng: np.random.Generator,
) -> np.ndarray:
    """Euler step of dx = (D + Q) grad ln p*(x) dt + sqrt(2 D) dB with
    constant PSD diffusion D and constant skew curl Q (so the state-dependent
    correction vanishes)."""
    if h <= 0:
        raise ValueError("h must be positive")
    x = np.asarray(x, dtype=float)
    d_mat = np.asarray(diffusion, dtype=float)
    q_mat = np.asarray(curl, dtype=float)
    n = x.shape[-1]
    if d_mat.shape != (n, n) or q_mat.shape != (n, n):
        raise ValueError("D and Q must be (n, n)")
    scale = max(1.0, float(np.abs(d_mat).max()))
    if not np.allclose(d_mat, d_mat.T, atol=1e-12 * scale):
        raise ValueError("D must be symmetric")
    if np.linalg.eigvalsh(d_mat).min() < -1e-12 * scale:
        raise ValueError("D must be positive semidefinite")
    qscale = max(1.0, float(np.abs(q_mat).max()))
    if not np.allclose(q_mat, -q_mat.T, atol=1e-12 * qscale):
        raise ValueError("Q must be skew-symmetric")
    drift = np.asarray(logp_grad(x), dtype=float) @ (d_mat + q_mat).T
    z = rng.standard_normal(x.shape)
    return x + h * drift + math.sqrt(2.0 * h) * (z @ _psd_sqrt(d_mat).T)


def rng_stream(seed: int) -> np.random.Generator:
    """Deterministic counter-based generator; equal seeds reproduce
    trajectories bit-for-bit on one platform."""
    return np.random.default_rng(seed)


def spawn_streams(seed: int, n: int) -> list[np.random.Generator]:
    """n statistically independent child streams of one root seed."""
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(n)]
