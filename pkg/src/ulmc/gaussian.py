"""Exact distribution tracking for quadratic targets.

For a quadratic potential the chain's law stays Gaussian and factorizes in the
eigenbasis into d independent blocks: (theta_i, r_i) pairs for phase-space
samplers (block size 2) or scalars for the position-only sampler (block size
1).  BlockLaw/BlockKernel hold those blocks stacked, giving O(d) cost per
iteration; dense GaussianLaw/AffineKernel cover small general problems.

All divergences are in nats.  The squared Wasserstein-2 distance carries a
1/2 prefactor by default (the convention used throughout the diagnostics);
pass half_convention=False for the standard optimal-transport value.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .integrators import StepCoefficients, underdamped_covariance
from .potentials import Potential, QuadraticPotential

__all__ = [
    "GaussianLaw",
    "AffineKernel",
    "BlockLaw",
    "BlockKernel",
    "LyapunovMatrixS",
    "propagate_gaussian",
    "kl_gaussian",
    "w2_gaussian",
    "lyapunov_gaussian",
    "tv_upper_bound",
    "talagrand_upper_bound",
    "kernel_of_sampler",
    "target_phase_law",
    "initial_phase_law",
    "target_position_law",
    "initial_position_law",
    "position_marginal",
    "block_kl",
    "block_w2",
    "block_lyapunov",
    "block_lyapunov_position",
    "KernelScan",
]


# --------------------------------------------------------------------------
# dense laws
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class GaussianLaw:
    """Mean vector and symmetric PSD covariance."""

    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        mean = np.atleast_1d(np.asarray(self.mean, dtype=float))
        cov = np.asarray(self.cov, dtype=float)
        n = mean.shape[0]
        if cov.shape != (n, n):
            raise ValueError(f"cov shape {cov.shape} incompatible with mean ({n},)")
        scale = max(1.0, float(np.abs(cov).max()))
        if not np.allclose(cov, cov.T, atol=1e-10 * scale):
            raise ValueError("covariance must be symmetric")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", 0.5 * (cov + cov.T))

    @property
    def dim(self) -> int:
        return self.mean.shape[0]


@dataclass(frozen=True)
class AffineKernel:
    """x' = T x + w with w ~ N(0, noise_cov)."""

    transition: np.ndarray
    noise_cov: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.transition, dtype=float)
        n = np.asarray(self.noise_cov, dtype=float)
        if t.ndim != 2 or t.shape[0] != t.shape[1] or n.shape != t.shape:
            raise ValueError("transition and noise_cov must be square and matched")
        object.__setattr__(self, "transition", t)
        object.__setattr__(self, "noise_cov", 0.5 * (n + n.T))


def propagate_gaussian(law: GaussianLaw, kernel: AffineKernel) -> GaussianLaw:
    """mean' = T mean, cov' = T cov T^T + noise."""
    t = kernel.transition
    if t.shape[0] != law.dim:
        raise ValueError("kernel and law dimensions differ")
    return GaussianLaw(t @ law.mean, t @ law.cov @ t.T + kernel.noise_cov)


def kl_gaussian(p: GaussianLaw, q: GaussianLaw) -> float:
    """KL(p || q) in nats; q.cov must be nonsingular."""
    if p.dim != q.dim:
        raise ValueError("dimension mismatch")
    n = p.dim
    sign_q, logdet_q = np.linalg.slogdet(q.cov)
    sign_p, logdet_p = np.linalg.slogdet(p.cov)
    if sign_q <= 0:
        raise np.linalg.LinAlgError("reference covariance is singular")
    qi = np.linalg.inv(q.cov)
    dm = q.mean - p.mean
    return 0.5 * (np.trace(qi @ p.cov) - n + dm @ qi @ dm + logdet_q - logdet_p)


def _psd_sqrt(mat: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(mat)
    return (v * np.sqrt(np.clip(w, 0.0, None))) @ v.T


def _bures_squared(a: np.ndarray, b: np.ndarray) -> float:
    rb = _psd_sqrt(b)
    cross = _psd_sqrt(rb @ a @ rb)
    return float(max(np.trace(a) + np.trace(b) - 2.0 * np.trace(cross), 0.0))


def w2_gaussian(p: GaussianLaw, q: GaussianLaw, half_convention: bool = True) -> float:
    """Wasserstein-2 distance between Gaussians (Bures formula)."""
    d2 = float(np.sum((p.mean - q.mean) ** 2)) + _bures_squared(p.cov, q.cov)
    if half_convention:
        d2 *= 0.5
    return math.sqrt(max(d2, 0.0))


@dataclass(frozen=True)
class LyapunovMatrixS:
    """S = (1/L_G) [[1/4 I, 1/2 I], [1/2 I, 2 I]] on (theta, r) phase space."""

    l_g: float
    dim: int

    @property
    def mode_block(self) -> np.ndarray:
        return np.array([[0.25, 0.5], [0.5, 2.0]]) / self.l_g

    @property
    def dense(self) -> np.ndarray:
        eye = np.eye(self.dim)
        return np.block([[0.25 * eye, 0.5 * eye], [0.5 * eye, 2.0 * eye]]) / self.l_g


def lyapunov_gaussian(p_t: GaussianLaw, p_star: GaussianLaw, s_mat) -> float:
    """KL(p_t || p*) + E_{p_t}[ g(x)^T S g(x) ] with g = grad ln(p_t / p*).

    For Gaussians g(x) = B x + c with B = cov*^{-1} - cov_t^{-1} and
    c = cov_t^{-1} mean_t - cov*^{-1} mean*, so the expectation is
    tr(B S B cov_t) + (B mean_t + c)^T S (B mean_t + c).
    """
    if isinstance(s_mat, LyapunovMatrixS):
        s_mat = s_mat.dense
    s_mat = np.asarray(s_mat, dtype=float)
    kl = kl_gaussian(p_t, p_star)
    bi = np.linalg.inv(p_star.cov) - np.linalg.inv(p_t.cov)
    c = np.linalg.solve(p_t.cov, p_t.mean) - np.linalg.solve(p_star.cov, p_star.mean)
    g_mean = bi @ p_t.mean + c
    quad = np.trace(bi @ s_mat @ bi @ p_t.cov) + g_mean @ s_mat @ g_mean
    return float(kl + quad)


def tv_upper_bound(kl: float) -> float:
    """Pinsker: TV <= sqrt(2 KL)."""
    if kl < 0:
        raise ValueError("kl must be nonnegative")
    return math.sqrt(2.0 * kl)


def talagrand_upper_bound(kl: float, rho: float) -> float:
    """Transport bound W_2 <= sqrt(2 KL / rho) under a log-Sobolev constant rho."""
    if kl < 0:
        raise ValueError("kl must be nonnegative")
    if rho <= 0:
        raise ValueError("rho must be positive")
    return math.sqrt(2.0 * kl / rho)


# --------------------------------------------------------------------------
# block laws (d independent modes of size 1 or 2)
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class BlockLaw:
    """d independent Gaussian blocks: means (d, k), covs (d, k, k)."""

    means: np.ndarray
    covs: np.ndarray

    def __post_init__(self):
        means = np.asarray(self.means, dtype=float)
        covs = np.asarray(self.covs, dtype=float)
        if means.ndim != 2 or covs.shape != means.shape + (means.shape[1],):
            raise ValueError("means must be (d, k) and covs (d, k, k)")
        object.__setattr__(self, "means", means)
        object.__setattr__(self, "covs", covs)

    @property
    def n_modes(self) -> int:
        return self.means.shape[0]

    @property
    def block_size(self) -> int:
        return self.means.shape[1]

    def to_dense(self) -> GaussianLaw:
        """Dense law in coordinates (theta_1..theta_d[, r_1..r_d])."""
        d, k = self.means.shape
        mean = np.concatenate([self.means[:, j] for j in range(k)])
        cov = np.zeros((k * d, k * d))
        for i in range(k):
            for j in range(k):
                cov[i * d:(i + 1) * d, j * d:(j + 1) * d] = np.diag(self.covs[:, i, j])
        return GaussianLaw(mean, cov)


@dataclass(frozen=True)
class BlockKernel:
    """Per-mode affine kernels: transitions (d, k, k), noise (d, k, k)."""

    transitions: np.ndarray
    noise_covs: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.transitions, dtype=float)
        n = np.asarray(self.noise_covs, dtype=float)
        if t.ndim != 3 or t.shape[1] != t.shape[2] or n.shape != t.shape:
            raise ValueError("transitions and noise_covs must be (d, k, k)")
        object.__setattr__(self, "transitions", t)
        object.__setattr__(self, "noise_covs", n)

    @property
    def block_size(self) -> int:
        return self.transitions.shape[1]

    def propagate(self, law: BlockLaw) -> BlockLaw:
        t = self.transitions
        means = np.einsum("mij,mj->mi", t, law.means)
        covs = t @ law.covs @ np.swapaxes(t, 1, 2) + self.noise_covs
        return BlockLaw(means, covs)

    def spectral_radius(self) -> float:
        return float(np.abs(np.linalg.eigvals(self.transitions)).max())

    def _vec_maps(self) -> np.ndarray:
        """Per-mode Kronecker maps P with vec(T V T^T) = P vec(V)."""
        t = self.transitions
        d, k, _ = t.shape
        return np.einsum("mab,mcd->macbd", t, t).reshape(d, k * k, k * k)

    def fixed_point(self) -> BlockLaw:
        """Stationary law solving V = T V T^T + noise per mode (requires
        spectral radius < 1)."""
        d, k, _ = self.transitions.shape
        p = self._vec_maps()
        rhs = self.noise_covs.reshape(d, k * k)
        eye = np.eye(k * k)
        vecs = np.linalg.solve(eye[None] - p, rhs[..., None])[..., 0]
        return BlockLaw(np.zeros((d, k)), vecs.reshape(d, k, k))

    def to_dense(self) -> AffineKernel:
        d, k, _ = self.transitions.shape
        t = np.zeros((k * d, k * d))
        n = np.zeros((k * d, k * d))
        for i in range(k):
            for j in range(k):
                t[i * d:(i + 1) * d, j * d:(j + 1) * d] = np.diag(self.transitions[:, i, j])
                n[i * d:(i + 1) * d, j * d:(j + 1) * d] = np.diag(self.noise_covs[:, i, j])
        return AffineKernel(t, n)


def _batch_logdet(covs: np.ndarray) -> np.ndarray:
    sign, logdet = np.linalg.slogdet(covs)
    if np.any(sign <= 0):
        raise np.linalg.LinAlgError("block covariance not positive definite")
    return logdet


def block_kl(p: BlockLaw, q: BlockLaw) -> float:
    """KL between products of independent blocks (sum of per-mode KLs)."""
    if p.means.shape != q.means.shape:
        raise ValueError("block structure mismatch")
    k = p.block_size
    qi = np.linalg.inv(q.covs)
    dm = q.means - p.means
    tr = np.einsum("mij,mji->m", qi, p.covs)
    mh = np.einsum("mi,mij,mj->m", dm, qi, dm)
    logdets = _batch_logdet(q.covs) - _batch_logdet(p.covs)
    return float(0.5 * np.sum(tr - k + mh + logdets))


def position_marginal(law: BlockLaw) -> BlockLaw:
    """theta-marginal of a phase-space block law."""
    return BlockLaw(law.means[:, :1], law.covs[:, :1, :1])


def position_marginal_dense(law: GaussianLaw) -> GaussianLaw:
    """theta-marginal of a dense phase-space law ordered (theta_1..theta_d,
    r_1..r_d)."""
    if law.dim % 2:
        raise ValueError("phase-space law must have even dimension")
    d = law.dim // 2
    return GaussianLaw(law.mean[:d], law.cov[:d, :d])


def _bures_squared_blocks(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    k = a.shape[1]
    if k == 1:
        return (np.sqrt(a[:, 0, 0]) - np.sqrt(b[:, 0, 0])) ** 2
    if k == 2:
        # tr sqrt(M) = sqrt(tr M + 2 sqrt(det M)) for 2x2 PSD M; here M has the
        # eigenvalues of the PSD-similar product A B.
        tr_ab = np.einsum("mij,mji->m", a, b)
        det_ab = np.linalg.det(a) * np.linalg.det(b)
        cross = np.sqrt(np.clip(tr_ab + 2.0 * np.sqrt(np.clip(det_ab, 0.0, None)), 0.0, None))
        tra = a[:, 0, 0] + a[:, 1, 1]
        trb = b[:, 0, 0] + b[:, 1, 1]
        return np.clip(tra + trb - 2.0 * cross, 0.0, None)
    raise ValueError("block size must be 1 or 2")


def block_w2(p: BlockLaw, q: BlockLaw, half_convention: bool = True) -> float:
    d2 = float(np.sum((p.means - q.means) ** 2)
               + np.sum(_bures_squared_blocks(p.covs, q.covs)))
    if half_convention:
        d2 *= 0.5
    return math.sqrt(max(d2, 0.0))


def block_lyapunov(p: BlockLaw, p_star: BlockLaw, l_g: float) -> float:
    """Lyapunov functional on phase-space block laws (block size 2)."""
    if p.block_size != 2:
        raise ValueError("phase-space law required (block size 2)")
    s_mode = LyapunovMatrixS(l_g, 1).mode_block
    kl = block_kl(p, p_star)
    bi = np.linalg.inv(p_star.covs) - np.linalg.inv(p.covs)
    c = (np.linalg.solve(p.covs, p.means[..., None])
         - np.linalg.solve(p_star.covs, p_star.means[..., None]))[..., 0]
    g_mean = np.einsum("mij,mj->mi", bi, p.means) + c
    quad = np.einsum("mij,jk,mkl,mli->m", bi, s_mode, bi, p.covs)
    quad = quad + np.einsum("mi,ij,mj->m", g_mean, s_mode, g_mean)
    return float(kl + np.sum(quad))


def block_lyapunov_position(p: BlockLaw, spectrum: np.ndarray, l_g: float) -> float:
    """Lyapunov functional of a position-only law embedded in phase space with
    the momentum exactly stationary; only the theta-block of S contributes."""
    if p.block_size != 1:
        raise ValueError("position law required (block size 1)")
    lam = np.asarray(spectrum, dtype=float)
    v = p.covs[:, 0, 0]
    mu = p.means[:, 0]
    kl = float(0.5 * np.sum(lam * v - 1.0 + lam * mu**2 - np.log(lam * v)))
    b = lam - 1.0 / v
    s11 = 0.25 / l_g
    quad = s11 * np.sum(b * b * v + (lam * mu) ** 2)
    return kl + float(quad)


# --------------------------------------------------------------------------
# kernels and reference laws for quadratic targets
# --------------------------------------------------------------------------

def _require_quadratic(potential: Potential) -> QuadraticPotential:
    if not isinstance(potential, QuadraticPotential):
        raise TypeError("exact distribution tracking requires a quadratic potential")
    return potential


def kernel_of_sampler(
    kind: str,
    potential: Potential,
    *,
    gamma: float = 2.0,
    xi: float | None = None,
    h: float | None = None,
    coeffs: StepCoefficients | None = None,
    n_leapfrog: int = 5,
    refresh_duration: float | None = None,
) -> BlockKernel:
    """Per-eigenmode affine kernel of one sampler step on a quadratic target.

    kind is one of 'underdamped', 'em', 'overdamped', 'hmc'.  For
    'underdamped' either pass precomputed StepCoefficients or (gamma, xi, h).
    """
    quad = _require_quadratic(potential)
    lam = quad.spectrum
    d = lam.size
    if kind == "underdamped":
        c = coeffs
        if c is None:
            if xi is None or h is None:
                raise ValueError("underdamped kernel needs coeffs or (gamma, xi, h)")
            c = underdamped_covariance(gamma, xi, h)
        t = np.zeros((d, 2, 2))
        t[:, 0, 0] = 1.0 - lam * c.drift_gap
        t[:, 0, 1] = c.om_e1 / c.gamma
        t[:, 1, 0] = -lam * c.om_e1 / (c.gamma * c.xi)
        t[:, 1, 1] = c.e1
        noise = np.broadcast_to(c.noise_cov, (d, 2, 2)).copy()
        return BlockKernel(t, noise)
    if kind == "em":
        if xi is None or h is None:
            raise ValueError("em kernel needs (gamma, xi, h)")
        t = np.zeros((d, 2, 2))
        t[:, 0, 0] = 1.0
        t[:, 0, 1] = h * xi
        t[:, 1, 0] = -h * lam
        t[:, 1, 1] = 1.0 - h * gamma * xi
        noise = np.zeros((d, 2, 2))
        noise[:, 1, 1] = 2.0 * gamma * h
        return BlockKernel(t, noise)
    if kind == "overdamped":
        if h is None:
            raise ValueError("overdamped kernel needs h")
        t = (1.0 - h * lam).reshape(d, 1, 1)
        noise = np.full((d, 1, 1), 2.0 * h)
        return BlockKernel(t, noise)
    if kind == "hmc":
        if xi is None or h is None:
            raise ValueError("hmc kernel needs (gamma, xi, h)")
        s = h if refresh_duration is None else refresh_duration
        half = 0.5 * h * lam
        lf = np.zeros((d, 2, 2))
        lf[:, 0, 0] = 1.0 - h * xi * half
        lf[:, 0, 1] = h * xi
        lf[:, 1, 0] = -h * lam * (1.0 - 0.25 * h * h * xi * lam)
        lf[:, 1, 1] = 1.0 - h * xi * half
        t = np.broadcast_to(np.eye(2), (d, 2, 2)).copy()
        for _ in range(n_leapfrog):
            t = lf @ t
        decay = math.exp(-gamma * xi * s)
        t[:, 1, :] *= decay
        noise = np.zeros((d, 2, 2))
        noise[:, 1, 1] = -math.expm1(-2.0 * gamma * xi * s) / xi
        return BlockKernel(t, noise)
    raise ValueError(f"unknown sampler kind: {kind!r}")


def target_phase_law(potential: Potential, xi: float) -> BlockLaw:
    """p*(theta, r) with theta_i ~ N(0, 1/lambda_i), r_i ~ N(0, 1/xi)."""
    quad = _require_quadratic(potential)
    d = quad.dim
    covs = np.zeros((d, 2, 2))
    covs[:, 0, 0] = 1.0 / quad.spectrum
    covs[:, 1, 1] = 1.0 / xi
    return BlockLaw(np.zeros((d, 2)), covs)


def initial_phase_law(potential: Potential, xi: float) -> BlockLaw:
    """Initialization theta_0 ~ N(0, I/L_G), r_0 ~ N(0, I/xi)."""
    quad = _require_quadratic(potential)
    d = quad.dim
    covs = np.zeros((d, 2, 2))
    covs[:, 0, 0] = 1.0 / quad.l_g
    covs[:, 1, 1] = 1.0 / xi
    return BlockLaw(np.zeros((d, 2)), covs)


def target_position_law(potential: Potential) -> BlockLaw:
    quad = _require_quadratic(potential)
    return BlockLaw(np.zeros((quad.dim, 1)), (1.0 / quad.spectrum).reshape(-1, 1, 1))


def initial_position_law(potential: Potential) -> BlockLaw:
    quad = _require_quadratic(potential)
    return BlockLaw(np.zeros((quad.dim, 1)),
                    np.full((quad.dim, 1, 1), 1.0 / quad.l_g))


# --------------------------------------------------------------------------
# closed-form iteration scan (zero-mean chains)
# --------------------------------------------------------------------------

class KernelScan:
    """Evaluate the chain covariance at arbitrary iteration indices in closed
    form, by eigendecomposing each mode's covariance map vec(V) -> P vec(V).

    Only zero-mean chains are supported (the mean would add a separate
    closed form); this covers the standard centered initialization.
    """

    def __init__(self, kernel: BlockKernel, law0: BlockLaw):
        if float(np.abs(law0.means).max(initial=0.0)) > 1e-14:
            raise ValueError("KernelScan requires a zero-mean initial law")
        k = kernel.block_size
        p = kernel._vec_maps()                       # (d, k^2, k^2)
        d = p.shape[0]
        rhs = kernel.noise_covs.reshape(d, k * k)
        eye = np.eye(k * k)
        vinf = np.linalg.solve(eye[None] - p, rhs[..., None])[..., 0]
        w, v = np.linalg.eig(p)                      # (d, k^2), (d, k^2, k^2)
        resid = np.abs(v @ (w[..., None] * np.linalg.inv(v)) - p).max()
        if not np.isfinite(resid) or resid > 1e-8 * (1.0 + np.abs(p).max()):
            raise np.linalg.LinAlgError("covariance map not cleanly diagonalizable")
        alpha = np.linalg.solve(v, (law0.covs.reshape(d, k * k) - vinf)[..., None])[..., 0]
        self.block_size = k
        self.mu = w                                   # (d, k^2)
        self.coef = v * alpha[:, None, :]             # vec_k = vinf + coef @ mu^k
        self.vinf = vinf
        self._logmu = np.log(np.where(np.abs(w) < 1e-300, 1.0, w).astype(complex))
        self._mu_zero = np.abs(w) < 1e-300

    def _powers(self, ks: np.ndarray) -> np.ndarray:
        """mu_j^k for all modes; (nk, d, k^2)."""
        out = np.exp(ks[:, None, None] * self._logmu[None])
        if self._mu_zero.any():
            out = np.where(self._mu_zero[None], 0.0, out)
        return out

    def cov_at(self, ks) -> np.ndarray:
        """Covariances (nk, d, k, k) at the given iteration indices."""
        ks = np.atleast_1d(np.asarray(ks, dtype=float))
        powers = self._powers(ks)
        vecs = self.vinf[None] + np.real(np.einsum("mij,nmj->nmi", self.coef, powers))
        d, kk = self.vinf.shape
        k = self.block_size
        return vecs.reshape(ks.size, d, k, k)

    def kl_position(self, ks, spectrum: np.ndarray, mode_weights=None) -> np.ndarray:
        """KL of the theta-marginal against N(0, diag(1/lambda)) at each k.

        mode_weights lets callers fold modes with identical dynamics into one
        weighted representative."""
        lam = np.asarray(spectrum, dtype=float)
        w = np.ones_like(lam) if mode_weights is None else np.asarray(mode_weights, float)
        v11 = self.cov_at(ks)[:, :, 0, 0]
        x = lam[None, :] * v11
        return 0.5 * np.sum(w[None, :] * (x - 1.0 - np.log(x)), axis=1)

    def kl_joint(self, ks, target: BlockLaw, mode_weights=None) -> np.ndarray:
        """Joint KL against a centered block target at each k."""
        covs = self.cov_at(ks)
        qi = np.linalg.inv(target.covs)
        k = self.block_size
        w = (np.ones(covs.shape[1]) if mode_weights is None
             else np.asarray(mode_weights, float))
        tr = np.einsum("mij,nmji->nm", qi, covs)
        logdet_q = _batch_logdet(target.covs)[None]
        sign, logdet_p = np.linalg.slogdet(covs)
        if np.any(sign <= 0):
            raise np.linalg.LinAlgError("scanned covariance not positive definite")
        return 0.5 * np.sum(w[None, :] * (tr - k + logdet_q - logdet_p), axis=1)
