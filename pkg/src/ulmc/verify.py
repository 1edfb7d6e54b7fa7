"""Numeric verifiers for the matrix lower bounds and auxiliary facts used by
the convergence analysis.

The two lower-bound checks reduce a 2d x 2d matrix inequality to three scalar
endpoint expressions in t = rho / L_G (trace and determinant conditions of a
2x2 symbol at Hessian eigenvalue +-L_G).  The expressions are exact rationals;
they are evaluated with Fraction arithmetic and cross-checked against both a
float evaluation and a dense eigenvalue sweep over the symbol.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .integrators import underdamped_covariance
from .potentials import LocallyNonconvexPotential, Potential, QuadraticPotential

__all__ = [
    "EndpointReport",
    "SweepReport",
    "FactReport",
    "check_mc_bound",
    "check_m_bound",
    "check_fact2",
    "check_fact1",
    "check_step_formulas",
    "eta_coefficient",
    "fact2_bound",
]

_SAT_TOL = 1e-12


@dataclass(frozen=True)
class EndpointReport:
    """One scalar inequality: satisfied iff value <= 1e-12."""

    label: str
    value: float
    satisfied: bool
    params: dict = field(default_factory=dict)


@dataclass(frozen=True)
class SweepReport:
    """Dense PSD sweep: value is the negated minimum eigenvalue found."""

    label: str
    value: float
    satisfied: bool
    params: dict = field(default_factory=dict)


@dataclass(frozen=True)
class FactReport:
    label: str
    trials: int
    violations: int
    worst_margin: float
    params: dict = field(default_factory=dict)

    @property
    def satisfied(self) -> bool:
        return self.violations == 0


def _symbol_coeffs(rho: Fraction, l_g: Fraction, *, damped_form: bool):
    """(alpha, beta, sigma, a, b) of the 2x2 symbol
    [[alpha, beta - (b/2) L], [beta - (b/2) L, sigma - (a/2) L]] for Hessian
    eigenvalue L, at gamma = 2, xi = 2 L_G.

    damped_form=False: continuous-flow matrix, shrinkage rate rho/10.
    damped_form=True:  discretized-flow matrix, shrinkage rate rho/30.
    """
    a = 1 / l_g
    b = 1 / (4 * l_g)
    c = 2 / l_g
    gamma = Fraction(2)
    xi = 2 * l_g
    if damped_form:
        lam = rho / 30
        alpha = Fraction(31, 64) * a * xi - (b + 1 / (2 * rho)) * lam
        sigma = Fraction(31, 32) * gamma * (2 * c * xi + 1) - (c + 1 / (2 * rho)) * lam
    else:
        lam = rho / 10
        alpha = (a / 2) * xi - (b + 1 / (2 * rho)) * lam
        sigma = gamma * (2 * c * xi + 1) - (c + 1 / (2 * rho)) * lam
    beta = ((c + a * gamma) / 2) * xi - (a / 2) * lam
    return alpha, beta, sigma, a, b


def _endpoints_from_coeffs(alpha, beta, sigma, a, b, l_g):
    """Trace and determinant endpoint expressions at Hessian eigenvalue +-L_G."""
    e_trace = (a / 2) * l_g - alpha - sigma
    det_even = (b * b / 4) * l_g * l_g + beta * beta - alpha * sigma
    det_odd = ((a / 2) * alpha - b * beta) * l_g
    return e_trace, det_even - det_odd, det_even + det_odd


def _closed_endpoints(t: Fraction, *, damped_form: bool):
    """The same three expressions in closed form, t = rho / L_G."""
    if damped_form:
        return (
            Fraction(-8579, 480) + Fraction(3, 40) * t,
            Fraction(-5357, 115200) + Fraction(241, 3200) * t - t * t / 3600,
            Fraction(-126077, 115200) + Fraction(241, 3200) * t - t * t / 3600,
        )
    return (
        Fraction(-92, 5) + Fraction(9, 40) * t,
        Fraction(-819, 1600) + Fraction(191, 800) * t - t * t / 400,
        Fraction(-2499, 1600) + Fraction(191, 800) * t - t * t / 400,
    )


def _dense_sweep(rho: float, l_g: float, *, damped_form: bool, n_grid: int = 256) -> float:
    """Minimum eigenvalue of the 2x2 symbol over a dense Hessian-eigenvalue
    grid in [-L_G, L_G]."""
    alpha, beta, sigma, a, b = (
        float(x) for x in _symbol_coeffs(Fraction(rho), Fraction(l_g), damped_form=damped_form)
    )
    lams = np.linspace(-l_g, l_g, n_grid)
    mats = np.zeros((n_grid, 2, 2))
    mats[:, 0, 0] = alpha
    mats[:, 0, 1] = mats[:, 1, 0] = beta - 0.5 * b * lams
    mats[:, 1, 1] = sigma - 0.5 * a * lams
    return float(np.linalg.eigvalsh(mats).min())


def _check_bound(rho: float, l_g: float, *, damped_form: bool) -> list:
    rho_f = Fraction(rho)
    l_g_f = Fraction(l_g)
    t = rho_f / l_g_f
    alpha, beta, sigma, a, b = _symbol_coeffs(rho_f, l_g_f, damped_form=damped_form)
    exact = _endpoints_from_coeffs(alpha, beta, sigma, a, b, l_g_f)
    closed = _closed_endpoints(t, damped_form=damped_form)
    for e, c in zip(exact, closed):
        if e != c:
            raise ArithmeticError(
                "endpoint expression disagrees with its closed form "
                f"(exact rational {e} vs {c})"
            )
    af, bf, sf, aa, bb = (float(x) for x in (alpha, beta, sigma, a, b))
    floats = _endpoints_from_coeffs(af, bf, sf, aa, bb, float(l_g))
    params = {"rho": rho, "l_g": l_g}
    labels = ("trace_endpoint", "det_endpoint_minus", "det_endpoint_plus")
    reports = []
    for label, e, f in zip(labels, exact, floats):
        ev = float(e)
        if abs(ev - f) > _SAT_TOL * max(1.0, abs(ev)):
            raise ArithmeticError(f"float drift in {label}: {ev} vs {f}")
        reports.append(EndpointReport(label, ev, ev <= _SAT_TOL, params))
    min_eig = _dense_sweep(rho, l_g, damped_form=damped_form)
    scale = max(1.0, abs(float(sigma)))
    reports.append(
        SweepReport("dense_psd_sweep", -min_eig, min_eig >= -_SAT_TOL * scale, params)
    )
    endpoint_ok = all(r.satisfied for r in reports[:3])
    if endpoint_ok != reports[3].satisfied:
        raise ArithmeticError("endpoint method and dense sweep disagree")
    return reports


def check_mc_bound(rho: float, l_g: float) -> list:
    """Continuous-flow matrix bound at shrinkage rate rho/10; valid for
    0 < rho <= L_G."""
    if not 0 < rho <= l_g:
        raise ValueError("need 0 < rho <= l_g")
    return _check_bound(rho, l_g, damped_form=False)


def check_m_bound(rho: float, l_g: float) -> list:
    """Discretized-flow matrix bound at shrinkage rate rho/30; requires
    L_G >= 2 rho."""
    if rho <= 0:
        raise ValueError("rho must be positive")
    if l_g < 2.0 * rho:
        raise ValueError("need l_g >= 2 rho")
    return _check_bound(rho, l_g, damped_form=True)


# --------------------------------------------------------------------------
# stacked-matrix norm bound (frozen-gradient coupling)
# --------------------------------------------------------------------------

def eta_coefficient(gamma: float, xi: float, nu: float) -> float:
    """eta = (1/gamma) [ e^{a} (1 - e^{-a})^2 / (gamma xi)
                         - (nu - (1 - e^{-a}) / (gamma xi)) ],  a = gamma xi nu.

    Algebraically equal to (e^a - 1 - a) / (gamma^2 xi), which is the form
    evaluated here (stable for small a).
    """
    if nu < 0:
        raise ValueError("nu must be nonnegative")
    a = gamma * xi * nu
    return (math.expm1(a) - a) / (gamma * gamma * xi)


def fact2_bound(l_g: float, xi: float, nu: float) -> float:
    return 4.0 * math.e * max(l_g**2 * xi * nu**2, l_g * xi * nu)


def _random_bounded_symmetric(rng: np.random.Generator, dim: int, l_g: float) -> np.ndarray:
    """Symmetric matrix with spectral norm drawn uniformly in [0, l_g]."""
    g = rng.standard_normal((dim, dim))
    h = 0.5 * (g + g.T)
    norm = np.abs(np.linalg.eigvalsh(h)).max()
    target = rng.uniform(0.0, l_g)
    if norm == 0.0:
        return h
    return (target / norm) * h


def nu_admissible_max(l_g: float, gamma: float, xi: float) -> float:
    return min(1.0 / (gamma * xi), 1.0 / math.sqrt(2.0 * math.e * l_g * xi))


def check_fact2(
    l_g: float = 1.0,
    gamma: float = 2.0,
    xi: float | None = None,
    nu: float | None = None,
    trials: int = 1000,
    rng: np.random.Generator | None = None,
    dims=(1, 2, 3, 5, 8),
) -> FactReport:
    """For random symmetric H with ||H||_2 <= L_G and admissible nu, the
    stacked 2d x d matrix

        [ H ((I + eta H)^{-1} - I) ; -((e^{gamma xi nu} - 1)/gamma) H (I + eta H)^{-1} ]

    has spectral norm at most 4 e max{L_G^2 xi nu^2, L_G xi nu}.  nu=None
    draws nu uniformly in its admissible range each trial."""
    if xi is None:
        xi = 2.0 * l_g
    rng = rng if rng is not None else np.random.default_rng(0)
    nu_max = nu_admissible_max(l_g, gamma, xi)
    if nu is not None and not 0 <= nu <= nu_max:
        raise ValueError(f"nu must lie in [0, {nu_max}]")
    violations = 0
    worst = -math.inf
    for _ in range(trials):
        dim = int(rng.choice(dims))
        h_mat = _random_bounded_symmetric(rng, dim, l_g)
        nu_t = rng.uniform(0.0, nu_max) if nu is None else nu
        eta = eta_coefficient(gamma, xi, nu_t)
        inv = np.linalg.inv(np.eye(dim) + eta * h_mat)
        top = h_mat @ (inv - np.eye(dim))
        bottom = -(math.expm1(gamma * xi * nu_t) / gamma) * (h_mat @ inv)
        stacked = np.vstack([top, bottom])
        norm = float(np.linalg.norm(stacked, 2))
        bound = fact2_bound(l_g, xi, nu_t)
        if nu_t == 0.0:
            margin = norm  # bound is 0, equality must hold
            if norm > _SAT_TOL:
                violations += 1
        else:
            margin = norm / bound - 1.0
            if margin > _SAT_TOL:
                violations += 1
        worst = max(worst, margin)
    return FactReport(
        "stacked_norm_bound", trials, violations, worst,
        {"l_g": l_g, "gamma": gamma, "xi": xi, "nu": nu},
    )


# --------------------------------------------------------------------------
# normalizer bound by quadrature
# --------------------------------------------------------------------------

def check_fact1(
    potential: Potential,
    points_per_axis: int | None = None,
    tail_tol: float = 1e-10,
) -> FactReport:
    """Integrate e^{-U} on a truncated grid and check
    ln Z <= (d/2) ln(4 pi / m) + 32 (L_G^2/m^2) L_G R^2 with the potential's
    certified constants.  Only low dimension (d <= 3) is supported."""
    d = potential.dim
    if d > 3:
        raise ValueError("quadrature check limited to d <= 3")
    if isinstance(potential, LocallyNonconvexPotential):
        m, radius, amp = potential.m, potential.radius, potential.amp
        m_cert = potential.m_out
        lower_shift = amp  # U >= (m/2)|x|^2 - amp
    elif isinstance(potential, QuadraticPotential):
        m = float(potential.spectrum.min())
        m_cert = m
        radius, amp, lower_shift = 0.0, 0.0, 0.0
    else:
        raise TypeError("quadrature check supports the shipped potential families")
    # truncation radius: Gaussian envelope e^{amp - m |x|^2 / 2} below tail_tol
    t_rad = math.sqrt(2.0 * (lower_shift + math.log(1.0 / tail_tol) + 10.0 * d) / m)
    n = points_per_axis or {1: 20001, 2: 1201, 3: 301}[d]
    axis = np.linspace(-t_rad, t_rad, n)
    step = axis[1] - axis[0]
    if d == 1:
        total = float(np.exp(-potential.value(axis[:, None])).sum())
    else:
        # slab over the first coordinate to bound memory
        tail_grid = np.meshgrid(*([axis] * (d - 1)), indexing="ij")
        tail_pts = np.stack([g.ravel() for g in tail_grid], axis=-1)
        total = 0.0
        for x0 in axis:
            pts = np.concatenate(
                [np.full((tail_pts.shape[0], 1), x0), tail_pts], axis=1
            )
            total += float(np.exp(-potential.value(pts)).sum())
    integral = total * step**d
    # closed-form tail mass of the envelope outside the box
    tail_1d = math.erfc(t_rad * math.sqrt(m / 2.0))
    tail = math.exp(lower_shift) * d * (2.0 * math.pi / m) ** (d / 2) * tail_1d
    ln_z = math.log(integral + tail)
    l_g = potential.l_g
    bound = 0.5 * d * math.log(4.0 * math.pi / m_cert) \
        + 32.0 * (l_g**2 / m_cert**2) * l_g * radius**2
    margin = ln_z - bound
    tail_ok = tail <= tail_tol * integral + 1e-300
    if not tail_ok:
        raise ArithmeticError("quadrature tail mass above tolerance")
    return FactReport(
        "normalizer_bound", 1, int(margin > _SAT_TOL), margin,
        {"dim": d, "ln_z": ln_z, "bound": bound},
    )


# --------------------------------------------------------------------------
# one-step formulas against a fine-substep simulation
# --------------------------------------------------------------------------

def _euler_frozen_law(gamma: float, xi: float, h: float, substeps: int,
                      x0: np.ndarray, g: float):
    """Exact mean/covariance of the Euler-substepped frozen-gradient SDE
    (the oracle process is linear-Gaussian, so its law is computable)."""
    dt = h / substeps
    t_step = np.array([[1.0, xi * dt], [0.0, 1.0 - gamma * xi * dt]])
    noise = np.array([[0.0, 0.0], [0.0, 2.0 * gamma * dt]])
    drift = np.array([0.0, -g * dt])
    mean = x0.astype(float).copy()
    cov = np.zeros((2, 2))
    for _ in range(substeps):
        mean = t_step @ mean + drift
        cov = t_step @ cov @ t_step.T + noise
    return mean, cov


def check_step_formulas(
    gamma: float = 2.0,
    xi: float = 1.0,
    h: float = 0.25,
    paths: int = 20000,
    substeps: int = 1000,
    rng: np.random.Generator | None = None,
    n_sigma: float = 4.0,
) -> FactReport:
    """Simulate the frozen-gradient SDE with Euler substeps and check that the
    empirical one-step mean and covariance match the closed forms within the
    substepping bias plus n_sigma Monte Carlo standard errors."""
    rng = rng if rng is not None else np.random.default_rng(0)
    g = float(rng.normal())
    theta0, r0 = float(rng.normal()), float(rng.normal())
    dt = h / substeps
    theta = np.full(paths, theta0)
    r = np.full(paths, r0)
    scale = math.sqrt(2.0 * gamma * dt)
    for _ in range(substeps):
        theta = theta + dt * xi * r
        r = r - dt * (gamma * xi * r + g) + scale * rng.standard_normal(paths)
    c = underdamped_covariance(gamma, xi, h)
    from .integrators import PhaseState, underdamped_mean

    closed = underdamped_mean(PhaseState(np.array([theta0]), np.array([r0])),
                              np.array([g]), c)
    closed_mean = np.array([closed.theta[0], closed.r[0]])
    closed_cov = c.noise_cov
    oracle_mean, oracle_cov = _euler_frozen_law(gamma, xi, h, substeps,
                                                np.array([theta0, r0]), g)
    bias_mean = np.abs(oracle_mean - closed_mean)
    bias_cov = np.abs(oracle_cov - closed_cov)
    emp_mean = np.array([theta.mean(), r.mean()])
    emp_cov = np.cov(np.stack([theta, r]), ddof=1)
    se_mean = np.sqrt(np.diag(oracle_cov) / paths)
    vii = np.diag(oracle_cov)
    se_cov = np.sqrt((np.outer(vii, vii) + oracle_cov**2) / (paths - 1))
    viol = 0
    worst = -math.inf
    for emp, ref, bias, se in (
        (emp_mean, closed_mean, bias_mean, se_mean),
        (emp_cov, closed_cov, bias_cov, se_cov),
    ):
        gap = np.abs(emp - ref) - (bias + n_sigma * se)
        worst = max(worst, float(gap.max()))
        viol += int(np.any(gap > 0))
    return FactReport(
        "one_step_formulas", paths, viol, worst,
        {"gamma": gamma, "xi": xi, "h": h, "substeps": substeps,
         "mean_bias": float(bias_mean.max()), "cov_bias": float(bias_cov.max())},
    )


def frozen_drift_gap(gamma: float, xi: float, h: float, substeps: int) -> float:
    """Deterministic gap between the Euler-substepped oracle mean/cov and the
    closed forms (no Monte Carlo); shrinks linearly in the substep size."""
    x0 = np.array([1.0, 0.5])
    g = 0.7
    oracle_mean, oracle_cov = _euler_frozen_law(gamma, xi, h, substeps, x0, g)
    c = underdamped_covariance(gamma, xi, h)
    from .integrators import PhaseState, underdamped_mean

    closed = underdamped_mean(PhaseState(x0[:1], x0[1:]), np.array([g]), c)
    closed_mean = np.array([closed.theta[0], closed.r[0]])
    gap_mean = np.abs(oracle_mean - closed_mean).max()
    gap_cov = np.abs(oracle_cov - c.noise_cov).max()
    return float(max(gap_mean, gap_cov))
