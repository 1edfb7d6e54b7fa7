"""Target potentials U(theta) with derivatives and smoothness constants.

All potentials are shifted so that U(0) = 0 and grad U(0) = 0.  Gradients are
vectorized over a leading batch axis: theta may be (d,) or (..., d).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class PotentialConstants:
    """Smoothness and functional-inequality constants of a target.

    l_g, l_h  : gradient- and Hessian-Lipschitz constants
    m         : strong convexity (outside `radius` for nonconvex targets)
    radius    : radius of the possibly-nonconvex region (0 for convex targets)
    rho       : log-Sobolev constant capped at 1
    c_n, c_m  : normalizer bound  ln Z <= c_n * d + c_m
    """

    l_g: float
    l_h: float
    m: float
    radius: float
    rho: float
    c_n: float
    c_m: float


def nonconvex_constants(m: float, l_g: float, radius: float) -> tuple[float, float, float]:
    """Bounds (rho, c_n, c_m) for a target that is m-strongly convex outside
    a ball of radius `radius` and l_g-smooth everywhere.

    rho = min{ (m/2) e^{-16 l_g R^2}, 1 }
    c_n = (1/2) ln(4 pi / m)
    c_m = 32 (l_g^2 / m^2) l_g R^2
    """
    if m <= 0 or l_g <= 0 or radius < 0:
        raise ValueError("need m > 0, l_g > 0, radius >= 0")
    rho = min(0.5 * m * math.exp(-16.0 * l_g * radius**2), 1.0)
    c_n = 0.5 * math.log(4.0 * math.pi / m)
    c_m = 32.0 * (l_g**2 / m**2) * l_g * radius**2
    return rho, c_n, c_m


class Potential:
    """Base class: a smooth target potential with known constants."""

    dim: int
    l_g: float
    l_h: float

    def value(self, theta: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def grad(self, theta: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def hessian(self, theta: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def constants(self) -> PotentialConstants:
        raise NotImplementedError

    def _check_dim(self, theta: np.ndarray) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        if theta.shape[-1] != self.dim:
            raise ValueError(f"expected last axis {self.dim}, got {theta.shape}")
        return theta


class QuadraticPotential(Potential):
    """U(theta) = (1/2) theta^T A theta, held in the eigenbasis of A.

    `spectrum` are the (positive) eigenvalues of A; a non-diagonal A is
    diagonalized once at construction and all work happens in its eigenbasis
    (`basis` rotates user coordinates into it).
    """

    def __init__(self, spectrum, basis: np.ndarray | None = None):
        spectrum = np.asarray(spectrum, dtype=float)
        if spectrum.ndim != 1 or spectrum.size == 0:
            raise ValueError("spectrum must be a nonempty 1-d array")
        if np.any(spectrum <= 0):
            raise ValueError("spectrum must be positive")
        self.spectrum = spectrum
        self.dim = spectrum.size
        self.basis = None
        if basis is not None:
            basis = np.asarray(basis, dtype=float)
            if basis.shape != (self.dim, self.dim):
                raise ValueError("basis must be (d, d)")
            self.basis = basis
        self.l_g = float(spectrum.max())
        self.l_h = 0.0
        self.m = float(spectrum.min())

    @classmethod
    def from_matrix(cls, a: np.ndarray) -> "QuadraticPotential":
        a = np.asarray(a, dtype=float)
        if not np.allclose(a, a.T):
            raise ValueError("quadratic form must be symmetric")
        w, v = np.linalg.eigh(a)
        return cls(w, basis=v)

    @classmethod
    def log_spaced(cls, d: int, kappa: float) -> "QuadraticPotential":
        """Spectrum log-spaced in [1, kappa] (condition number kappa)."""
        if kappa < 1:
            raise ValueError("kappa must be >= 1")
        if d == 1 or kappa == 1:
            return cls(np.ones(d))
        return cls(np.logspace(0.0, math.log10(kappa), d))

    @classmethod
    def two_point(cls, d: int, kappa: float) -> "QuadraticPotential":
        """Half the modes at 1, half at kappa (condition number kappa)."""
        n_slow = d - d // 2
        return cls(np.array([1.0] * n_slow + [float(kappa)] * (d // 2)))

    def _rotate(self, theta: np.ndarray) -> np.ndarray:
        return theta if self.basis is None else theta @ self.basis

    def value(self, theta: np.ndarray) -> np.ndarray:
        theta = self._check_dim(theta)
        z = self._rotate(theta)
        return 0.5 * np.sum(self.spectrum * z * z, axis=-1)

    def grad(self, theta: np.ndarray) -> np.ndarray:
        theta = self._check_dim(theta)
        g = self.spectrum * self._rotate(theta)
        return g if self.basis is None else g @ self.basis.T

    def hessian(self, theta: np.ndarray) -> np.ndarray:
        self._check_dim(np.atleast_1d(theta))
        h = np.diag(self.spectrum)
        return h if self.basis is None else self.basis @ h @ self.basis.T

    def constants(self) -> PotentialConstants:
        # exact normalizer: ln Z = (1/2) sum ln(2 pi / lambda_i) = c_n * d
        m_geo = float(np.exp(np.mean(np.log(self.spectrum))))
        c_n = 0.5 * math.log(2.0 * math.pi / m_geo)
        return PotentialConstants(
            l_g=self.l_g, l_h=0.0, m=self.m, radius=0.0,
            rho=min(self.m, 1.0), c_n=c_n, c_m=0.0,
        )


class LocallyNonconvexPotential(Potential):
    """Quadratic bowl with a Gaussian bump at the origin:

        U(theta) = (m/2) |theta|^2 + amp * (exp(-|theta|^2 / (2 width^2)) - 1)

    For amp / width^2 > m the origin is a local maximum, so U is nonconvex
    inside a neighborhood of 0 while remaining strongly convex far out.  The
    certified outer strong convexity at distance `radius` is

        m_out = m - (amp / width^2) exp(-radius^2 / (2 width^2)),

    the worst (tangential) Hessian eigenvalue of the bump at that distance.
    """

    def __init__(self, m: float, radius: float, amp: float, width: float, dim: int = 1):
        if m <= 0 or width <= 0 or amp < 0 or radius < 0:
            raise ValueError("need m > 0, width > 0, amp >= 0, radius >= 0")
        if dim < 1:
            raise ValueError("dim must be >= 1")
        self.m = float(m)
        self.radius = float(radius)
        self.amp = float(amp)
        self.width = float(width)
        self.dim = int(dim)
        q = amp / width**2
        self.m_out = m - q * math.exp(-(radius**2) / (2.0 * width**2))
        if self.m_out <= 0:
            raise ValueError(
                "bump curvature leaks past `radius`; enlarge radius or shrink amp"
            )
        # Hessian eigenvalues of the bump lie in [-q, 2 e^{-3/2} q]
        self.l_g = max(abs(m - q), m + 2.0 * math.exp(-1.5) * q)
        self.l_h = self._hessian_lipschitz(self.dim)

    def _hessian_lipschitz(self, dim: int) -> float:
        # Frobenius bound on the directional derivative of the Hessian:
        # sup_w (amp / width^3) w (c0 + w^2) e^{-w^2/2},  c0 = 2 + sqrt(d).
        if self.amp == 0:
            return 0.0
        c0 = 2.0 + math.sqrt(dim)
        w2 = 0.5 * ((3.0 - c0) + math.sqrt((3.0 - c0) ** 2 + 4.0 * c0))
        w = math.sqrt(w2)
        phi = w * (c0 + w2) * math.exp(-w2 / 2.0)
        return (self.amp / self.width**3) * phi

    def _bump(self, theta: np.ndarray) -> np.ndarray:
        r2 = np.sum(theta * theta, axis=-1)
        return np.exp(-r2 / (2.0 * self.width**2))

    def value(self, theta: np.ndarray) -> np.ndarray:
        theta = self._check_dim(theta)
        r2 = np.sum(theta * theta, axis=-1)
        return 0.5 * self.m * r2 + self.amp * (np.exp(-r2 / (2.0 * self.width**2)) - 1.0)

    def grad(self, theta: np.ndarray) -> np.ndarray:
        theta = self._check_dim(theta)
        g = self._bump(theta)
        coef = self.m - (self.amp / self.width**2) * g
        return coef[..., None] * theta

    def hessian(self, theta: np.ndarray) -> np.ndarray:
        theta = self._check_dim(theta)
        if theta.ndim != 1:
            raise ValueError("hessian expects a single point (d,)")
        g = float(self._bump(theta))
        q = self.amp / self.width**2
        h = (self.m - q * g) * np.eye(self.dim)
        h += (self.amp / self.width**4) * g * np.outer(theta, theta)
        return h

    def constants(self) -> PotentialConstants:
        rho, c_n, c_m = nonconvex_constants(self.m_out, self.l_g, self.radius)
        return PotentialConstants(
            l_g=self.l_g, l_h=self.l_h, m=self.m_out, radius=self.radius,
            rho=rho, c_n=c_n, c_m=c_m,
        )


def potential_from_config(config: dict) -> Potential:
    """Build a potential from a config mapping.

    quadratic:          {"kind": "quadratic", "spectrum": [...]}
                        {"kind": "quadratic", "d": 100, "kappa": 100}
    locally nonconvex:  {"kind": "locally_nonconvex", "m":, "R":, "a":, "s":, "d":}
    """
    config = dict(config)
    kind = config.pop("kind", None)
    if kind == "quadratic":
        if "spectrum" in config:
            extra = set(config) - {"spectrum"}
            if extra:
                raise ValueError(f"unknown quadratic keys: {sorted(extra)}")
            return QuadraticPotential(config["spectrum"])
        if {"d", "kappa"} <= set(config):
            extra = set(config) - {"d", "kappa", "shape"}
            if extra:
                raise ValueError(f"unknown quadratic keys: {sorted(extra)}")
            shape = config.get("shape", "log_spaced")
            if shape == "log_spaced":
                return QuadraticPotential.log_spaced(int(config["d"]), float(config["kappa"]))
            if shape == "two_point":
                return QuadraticPotential.two_point(int(config["d"]), float(config["kappa"]))
            raise ValueError(f"unknown quadratic shape: {shape!r}")
        raise ValueError("quadratic needs either 'spectrum' or ('d', 'kappa')")
    if kind == "locally_nonconvex":
        extra = set(config) - {"m", "R", "a", "s", "d"}
        if extra:
            raise ValueError(f"unknown locally_nonconvex keys: {sorted(extra)}")
        return LocallyNonconvexPotential(
            m=float(config["m"]), radius=float(config["R"]),
            amp=float(config["a"]), width=float(config["s"]), dim=int(config.get("d", 1)),
        )
    raise ValueError(f"unknown potential kind: {kind!r}")
