"""Experiment harness: configured runs with per-iteration diagnostics, the
acceleration comparison, and the verification suite driver.

Exact-gaussian mode propagates the chain's law in closed form (quadratic
targets only) and records KL / Wasserstein / Lyapunov values per iteration.
Sample-moments mode runs a batch of chains and records empirical first and
second moments; divergence columns are left as NaN there (sample-based
diagnostics stay at the moment level).

Chains start from theta_0 ~ N(0, I/L_G) and r_0 ~ N(0, I/xi), the momentum
initialized at its stationary law.  The overdamped sampler has no momentum;
its Lyapunov column embeds the position law in phase space with the momentum
exactly stationary, so only the position block of the quadratic form
contributes.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field

import numpy as np

from . import gaussian as ga
from . import integrators as it
from .potentials import Potential, QuadraticPotential, potential_from_config
from .schedule import Schedule, guaranteed_schedule
from . import verify as vf

__all__ = [
    "ConfigError",
    "RunConfig",
    "DiagnosticsRow",
    "RunResult",
    "run",
    "figure_accel",
    "accelerated_tuning",
    "largest_stable_step",
    "iterations_to_kl",
    "kl_position_curve",
    "verify_all",
    "VerifyRow",
]

SAMPLER_KINDS = ("underdamped", "em", "overdamped", "hmc", "generic_dq")
MODES = ("exact-gaussian", "sample-moments")
MAX_LOGGED_ROWS = 10_000

CSV_COLUMNS = "iter,t,kl_joint,kl_theta,w2,lyapunov,mean_norm,cov_trace"


class ConfigError(ValueError):
    """Invalid or inconsistent run configuration."""


@dataclass(frozen=True)
class RunConfig:
    potential: dict
    sampler: str = "underdamped"
    schedule: dict | str = "paper"
    epsilon: float = 0.1
    chains: int = 0
    seed: int = 0
    mode: str = "exact-gaussian"
    out: str | None = None

    _FIELDS = ("potential", "sampler", "schedule", "epsilon", "chains",
               "seed", "mode", "out")

    @classmethod
    def from_dict(cls, raw: dict) -> "RunConfig":
        unknown = set(raw) - set(cls._FIELDS)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        if "potential" not in raw:
            raise ConfigError("config requires a 'potential' entry")
        cfg = cls(**raw)
        if cfg.sampler not in SAMPLER_KINDS:
            raise ConfigError(f"sampler must be one of {SAMPLER_KINDS}")
        if cfg.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}")
        if cfg.mode == "sample-moments" and cfg.chains < 1:
            raise ConfigError("sample-moments mode needs chains >= 1")
        if not isinstance(cfg.schedule, (dict, str)) or (
            isinstance(cfg.schedule, str) and cfg.schedule != "paper"
        ):
            raise ConfigError("schedule must be 'paper' or an override mapping")
        return cfg

    @classmethod
    def from_json(cls, path: str) -> "RunConfig":
        try:
            with open(path, "r", encoding="utf-8") as fh:
                raw = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(raw, dict):
            raise ConfigError("config file must hold a JSON object")
        return cls.from_dict(raw)


@dataclass(frozen=True)
class DiagnosticsRow:
    iter: int
    t: float
    kl_joint: float
    kl_theta: float
    w2: float
    lyapunov: float
    mean_norm: float
    cov_trace: float

    def as_csv(self) -> str:
        vals = (self.t, self.kl_joint, self.kl_theta, self.w2,
                self.lyapunov, self.mean_norm, self.cov_trace)
        return f"{self.iter}," + ",".join(repr(float(v)) for v in vals)


@dataclass
class RunResult:
    rows: list
    schedule: Schedule
    meta: dict
    csv_path: str | None = None
    moments: list = field(default_factory=list)  # (iter, mean, cov) in sample mode


def _resolve_schedule(config: RunConfig, potential: Potential) -> Schedule:
    base = guaranteed_schedule(potential, config.epsilon)
    if config.schedule == "paper":
        return base
    over = dict(config.schedule)
    unknown = set(over) - {"gamma", "xi", "h", "K"}
    if unknown:
        raise ConfigError(f"unknown schedule keys: {sorted(unknown)}")
    gamma = float(over.get("gamma", base.gamma))
    xi = float(over.get("xi", base.xi))
    h = float(over.get("h", base.h))
    n_steps = int(over.get("K", base.n_steps))
    if gamma <= 0 or xi <= 0 or h <= 0 or n_steps < 0:
        raise ConfigError("schedule overrides must be positive (K >= 0)")
    return Schedule(gamma=gamma, xi=xi, h=h, n_steps=n_steps, rho=base.rho,
                    c_n_tilde=base.c_n_tilde, c_m=base.c_m,
                    epsilon=config.epsilon, dim=potential.dim,
                    l_g=base.l_g, l_h=base.l_h)


def _logged_iterations(n_steps: int) -> np.ndarray:
    if n_steps <= MAX_LOGGED_ROWS:
        return np.arange(n_steps + 1)
    ks = np.unique(np.geomspace(1, n_steps, MAX_LOGGED_ROWS - 1).astype(int))
    return np.concatenate([[0], ks])


def _write_csv(path: str, rows: list, meta: dict) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for key in sorted(meta):
            fh.write(f"# {key}={meta[key]}\n")
        fh.write(CSV_COLUMNS + "\n")
        for row in rows:
            fh.write(row.as_csv() + "\n")


# --------------------------------------------------------------------------
# exact-gaussian mode
# --------------------------------------------------------------------------

def _exact_rows(config: RunConfig, quad: QuadraticPotential,
                sched: Schedule) -> list:
    kind = config.sampler
    if kind == "generic_dq":
        raise ConfigError("exact-gaussian mode does not cover generic_dq; "
                          "use sample-moments")
    gamma, xi, h = sched.gamma, sched.xi, sched.h
    kernel = ga.kernel_of_sampler(kind, quad, gamma=gamma, xi=xi, h=h)
    phase = kind != "overdamped"
    if phase:
        law = ga.initial_phase_law(quad, xi)
        target = ga.target_phase_law(quad, xi)
    else:
        law = ga.initial_position_law(quad)
        target = ga.target_position_law(quad)
    logged = set(_logged_iterations(sched.n_steps).tolist())
    rows = []

    def make_row(k: int, law: ga.BlockLaw) -> DiagnosticsRow:
        kl_joint = ga.block_kl(law, target)
        if phase:
            kl_theta = ga.block_kl(ga.position_marginal(law),
                                   ga.target_position_law(quad))
            lyap = ga.block_lyapunov(law, target, quad.l_g)
        else:
            kl_theta = kl_joint
            lyap = ga.block_lyapunov_position(law, quad.spectrum, quad.l_g)
        w2 = ga.block_w2(law, target)
        mean_norm = float(np.sqrt(np.sum(law.means**2)))
        cov_trace = float(np.trace(law.covs, axis1=1, axis2=2).sum())
        return DiagnosticsRow(k, k * h, kl_joint, kl_theta, w2, lyap,
                              mean_norm, cov_trace)

    rows.append(make_row(0, law))
    for k in range(1, sched.n_steps + 1):
        law = kernel.propagate(law)
        kl_joint = ga.block_kl(law, target)
        if k in logged:
            rows.append(make_row(k, law))
        if kl_joint <= config.epsilon:
            if k not in logged:
                rows.append(make_row(k, law))
            break
    return rows


# --------------------------------------------------------------------------
# sample-moments mode
# --------------------------------------------------------------------------

def _phase_dq_matrices(gamma: float, dim: int) -> tuple[np.ndarray, np.ndarray]:
    """Default constant (D, Q) pair on phase space: D = blockdiag(0, gamma I),
    Q = [[0, -I], [I, 0]]."""
    zero = np.zeros((dim, dim))
    eye = np.eye(dim)
    d_mat = np.block([[zero, zero], [zero, gamma * eye]])
    q_mat = np.block([[zero, -eye], [eye, zero]])
    return d_mat, q_mat


def _sample_rows(config: RunConfig, potential: Potential,
                 sched: Schedule) -> tuple[list, list]:
    kind = config.sampler
    gamma, xi, h = sched.gamma, sched.xi, sched.h
    rng = it.rng_stream(config.seed)
    n, d = config.chains, potential.dim
    theta = rng.standard_normal((n, d)) / math.sqrt(potential.l_g)
    r = rng.standard_normal((n, d)) / math.sqrt(xi)
    coeffs = it.underdamped_covariance(gamma, xi, h) if kind == "underdamped" else None
    if kind == "generic_dq":
        d_mat, q_mat = _phase_dq_matrices(gamma, d)

        def logp_grad(x):
            return np.concatenate([-potential.grad(x[..., :d]),
                                   -xi * x[..., d:]], axis=-1)

    logged = set(_logged_iterations(sched.n_steps).tolist())
    keep_moments = d <= 16
    rows, moments = [], []

    def make_row(k: int) -> None:
        if kind == "overdamped":
            state = theta
        else:
            state = np.concatenate([theta, r], axis=1)
        mean = state.mean(axis=0)
        cov = np.cov(state.T, ddof=1) if n > 1 else np.zeros((state.shape[1],) * 2)
        rows.append(DiagnosticsRow(
            k, k * h, float("nan"), float("nan"), float("nan"), float("nan"),
            float(np.linalg.norm(mean)), float(np.trace(np.atleast_2d(cov))),
        ))
        if keep_moments and k in logged:
            moments.append((k, mean, np.atleast_2d(cov)))

    make_row(0)
    for k in range(1, sched.n_steps + 1):
        if kind == "underdamped":
            state = it.underdamped_step(it.PhaseState(theta, r), potential, coeffs, rng)
            theta, r = state.theta, state.r
        elif kind == "em":
            state = it.em_step(it.PhaseState(theta, r), potential, gamma, xi, h, rng)
            theta, r = state.theta, state.r
        elif kind == "overdamped":
            theta = it.overdamped_step(theta, potential, h, rng)
        elif kind == "hmc":
            state = it.hmc_step(it.PhaseState(theta, r), potential, gamma, xi, h, rng)
            theta, r = state.theta, state.r
        elif kind == "generic_dq":
            x = np.concatenate([theta, r], axis=1)
            x = it.generic_dq_step(x, logp_grad, d_mat, q_mat, h, rng)
            theta, r = x[:, :d], x[:, d:]
        if k in logged:
            make_row(k)
    return rows, moments


def run(config: RunConfig) -> RunResult:
    """Execute a configured run; writes a CSV when config.out is set."""
    try:
        potential = potential_from_config(config.potential)
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"bad potential spec: {exc}") from exc
    sched = _resolve_schedule(config, potential)
    if config.mode == "exact-gaussian":
        if not isinstance(potential, QuadraticPotential):
            raise ConfigError("exact-gaussian mode requires a quadratic potential")
        rows = _exact_rows(config, potential, sched)
        moments = []
    else:
        rows, moments = _sample_rows(config, potential, sched)
    meta = dict(sched.as_dict())
    meta.update(sampler=config.sampler, mode=config.mode, seed=config.seed,
                potential=json.dumps(config.potential, sort_keys=True))
    result = RunResult(rows=rows, schedule=sched, meta=meta, moments=moments)
    if config.out:
        _write_csv(config.out, rows, meta)
        result.csv_path = config.out
    return result


# --------------------------------------------------------------------------
# acceleration experiment
# --------------------------------------------------------------------------

def accelerated_tuning(quad: QuadraticPotential, zeta: float = 0.5) -> tuple[float, float]:
    """(gamma, xi) tuned for speed on a quadratic: momentum temperature on the
    stiff scale (xi = L_G) and friction gamma = 2 zeta sqrt(m / xi), putting
    the slowest mode at damping ratio zeta."""
    if not 0 < zeta <= 1:
        raise ValueError("zeta must lie in (0, 1]")
    m = float(quad.spectrum.min())
    xi = quad.l_g
    return 2.0 * zeta * math.sqrt(m / xi), xi


def largest_stable_step(
    kind: str,
    quad: QuadraticPotential,
    *,
    gamma: float = 2.0,
    xi: float | None = None,
    floor_kl: float | None = None,
    max_doublings: int = 60,
) -> float:
    """Largest h at which the per-mode transition has spectral radius < 1,
    found by bisection; with floor_kl set, additionally require the
    stationary position-marginal KL to stay at or below it."""

    def ok(h: float) -> bool:
        kernel = ga.kernel_of_sampler(kind, quad, gamma=gamma, xi=xi, h=h)
        if kernel.spectral_radius() >= 1.0:
            return False
        if floor_kl is not None:
            fixed = kernel.fixed_point()
            if kind == "overdamped":
                v = fixed.covs[:, 0, 0]
            else:
                v = fixed.covs[:, 0, 0]
            x = quad.spectrum * v
            if float(0.5 * np.sum(x - 1.0 - np.log(x))) > floor_kl:
                return False
        return True

    lo, hi = 0.0, 1.0 / quad.l_g
    for _ in range(max_doublings):
        if not ok(hi):
            break
        hi *= 2.0
    else:
        return hi
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if ok(mid):
            lo = mid
        else:
            hi = mid
    return lo


def _scan_for(kind: str, quad: QuadraticPotential, gamma: float,
              xi: float, h: float):
    """Closed-form scan over a deduplicated spectrum (modes with equal
    eigenvalues share one weighted representative)."""
    spectrum, weights = np.unique(quad.spectrum, return_counts=True)
    reduced = QuadraticPotential(spectrum)  # same l_g: dedup keeps the max
    kernel = ga.kernel_of_sampler(kind, reduced, gamma=gamma, xi=xi, h=h)
    if kind == "overdamped":
        law0 = ga.initial_position_law(reduced)
    else:
        law0 = ga.initial_phase_law(reduced, xi)
    return ga.KernelScan(kernel, law0), spectrum, weights.astype(float)


def iterations_to_kl(
    kind: str,
    quad: QuadraticPotential,
    *,
    gamma: float = 2.0,
    xi: float | None = None,
    h: float,
    tau: float,
    max_iter: int = 200_000_000,
    chunk: int = 1 << 16,
) -> int | None:
    """First iteration k with KL(p_k(theta) || p*(theta)) <= tau, via the
    closed-form covariance scan."""
    scan, spectrum, weights = _scan_for(kind, quad, gamma, xi, h)
    k0 = 0
    while k0 < max_iter:
        ks = np.arange(k0 + 1, min(k0 + chunk, max_iter) + 1)
        kl = scan.kl_position(ks, spectrum, weights)
        idx = np.nonzero(kl <= tau)[0]
        if idx.size:
            return int(ks[idx[0]])
        k0 += chunk
    return None


def kl_position_curve(
    kind: str,
    quad: QuadraticPotential,
    *,
    gamma: float = 2.0,
    xi: float | None = None,
    h: float,
    ks: np.ndarray,
) -> np.ndarray:
    scan, spectrum, weights = _scan_for(kind, quad, gamma, xi, h)
    out = []
    for part in np.array_split(np.asarray(ks), max(1, len(ks) // 512)):
        out.append(scan.kl_position(part, spectrum, weights))
    return np.concatenate(out)


_PLOT_SCRIPT = """\
#!/usr/bin/env python3
\"\"\"Plot the sampler comparison curves emitted next to this script.\"\"\"
import csv
import sys
from pathlib import Path

import matplotlib.pyplot as plt

here = Path(__file__).resolve().parent
fig, ax = plt.subplots(figsize=(7, 5))
for name, style in (("overdamped.csv", "-"), ("underdamped.csv", "-")):
    path = here / name
    iters, kl = [], []
    with open(path) as fh:
        for line in fh:
            if line.startswith("#") or line.startswith("iter"):
                continue
            parts = line.strip().split(",")
            iters.append(int(parts[0]))
            kl.append(float(parts[3]))
    ax.plot(iters, kl, style, label=name.removesuffix(".csv"))
ax.set_xlabel("iteration")
ax.set_ylabel("position KL (nats)")
ax.set_xscale("log")
ax.set_yscale("log")
ax.legend()
fig.tight_layout()
out = here / "acceleration.png"
fig.savefig(out, dpi=150)
print(f"wrote {out}")
"""


def figure_accel(
    d: int = 100,
    kappa: float = 100.0,
    epsilon: float = 1e-6,
    seed: int = 0,
    out_dir: str = ".",
    spectrum_shape: str = "two_point",
    zeta: float = 0.5,
    h_overdamped: float | None = None,
    h_underdamped: float | None = None,
    curve_points: int = 2000,
) -> dict:
    """Overdamped-vs-underdamped comparison on a condition-number-kappa
    quadratic, each sampler at its largest usable step (spectral radius < 1
    and stationary position-KL floor <= epsilon/2).  Emits one CSV per
    sampler plus a plotting script; exact-gaussian mode, fully deterministic.

    The default target carries a two-point spectrum {1, kappa} so the slow
    modes oscillate coherently; pass spectrum_shape='log_spaced' for the
    geometric spectrum.
    """
    if spectrum_shape == "two_point":
        quad = QuadraticPotential.two_point(d, kappa)
    elif spectrum_shape == "log_spaced":
        quad = QuadraticPotential.log_spaced(d, kappa)
    else:
        raise ConfigError(f"unknown spectrum shape: {spectrum_shape!r}")
    gamma_u, xi_u = accelerated_tuning(quad, zeta)
    h_od = h_overdamped or largest_stable_step(
        "overdamped", quad, floor_kl=epsilon / 2.0)
    h_ud = h_underdamped or largest_stable_step(
        "underdamped", quad, gamma=gamma_u, xi=xi_u, floor_kl=epsilon / 2.0)
    k_od = iterations_to_kl("overdamped", quad, h=h_od, tau=epsilon)
    k_ud = iterations_to_kl("underdamped", quad, gamma=gamma_u, xi=xi_u,
                            h=h_ud, tau=epsilon)
    horizon = int(2.0 * max(k for k in (k_od, k_ud, 1) if k is not None))
    ks = np.unique(np.geomspace(1, horizon, curve_points).astype(int))
    os.makedirs(out_dir, exist_ok=True)
    paths = {}
    for kind, h, gamma, xi in (
        ("overdamped", h_od, 2.0, None),
        ("underdamped", h_ud, gamma_u, xi_u),
    ):
        kl = kl_position_curve(kind, quad, gamma=gamma, xi=xi, h=h, ks=ks)
        rows = [
            DiagnosticsRow(int(k), float(k * h), float("nan"), float(v),
                           float("nan"), float("nan"), float("nan"), float("nan"))
            for k, v in zip(ks, kl)
        ]
        meta = {
            "sampler": kind, "h": h, "gamma": gamma, "xi": xi,
            "d": d, "kappa": kappa, "epsilon": epsilon, "seed": seed,
            "spectrum_shape": spectrum_shape, "zeta": zeta,
            "iterations_to_epsilon": k_od if kind == "overdamped" else k_ud,
        }
        path = os.path.join(out_dir, f"{kind}.csv")
        _write_csv(path, rows, meta)
        paths[kind] = path
    script = os.path.join(out_dir, "plot_accel.py")
    with open(script, "w", encoding="utf-8") as fh:
        fh.write(_PLOT_SCRIPT)
    paths["plot_script"] = script
    return {
        "paths": paths,
        "iterations": {"overdamped": k_od, "underdamped": k_ud},
        "steps": {"overdamped": h_od, "underdamped": h_ud},
        "tuning": {"gamma": gamma_u, "xi": xi_u, "zeta": zeta},
    }


# --------------------------------------------------------------------------
# verification driver
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class VerifyRow:
    name: str
    passed: bool
    detail: str


DEFAULT_RATIOS = (1e-4, 1e-2, 0.1, 0.5)
DEFAULT_LGS = (0.5, 1.0, 10.0)


def verify_all(grid: dict | None = None) -> list[VerifyRow]:
    """Run every checker on its default (or configured) grid."""
    grid = dict(grid or {})
    unknown = set(grid) - {"ratios", "l_gs", "fact2_trials", "fact1_dims",
                           "step_paths", "step_substeps", "seed"}
    if unknown:
        raise ConfigError(f"unknown verify grid keys: {sorted(unknown)}")
    ratios = tuple(grid.get("ratios", DEFAULT_RATIOS))
    l_gs = tuple(grid.get("l_gs", DEFAULT_LGS))
    fact2_trials = int(grid.get("fact2_trials", 2000))
    fact1_dims = tuple(grid.get("fact1_dims", (1, 2)))
    step_paths = int(grid.get("step_paths", 20000))
    step_substeps = int(grid.get("step_substeps", 500))
    seed = int(grid.get("seed", 0))
    rows: list[VerifyRow] = []
    for l_g in l_gs:
        for ratio in ratios:
            rho = ratio * l_g
            for label, checker in (("flow_bound", vf.check_mc_bound),
                                   ("discrete_bound", vf.check_m_bound)):
                reports = checker(rho, l_g)
                ok = all(r.satisfied for r in reports)
                worst = max(r.value for r in reports)
                rows.append(VerifyRow(
                    f"{label}[rho/L={ratio:g},L={l_g:g}]", ok,
                    f"worst={worst:.3e}"))
    if fact2_trials > 0:
        rep = vf.check_fact2(trials=fact2_trials, rng=it.rng_stream(seed))
        rows.append(VerifyRow(
            f"stacked_norm[trials={fact2_trials}]", rep.satisfied,
            f"violations={rep.violations} worst_margin={rep.worst_margin:.3e}"))
    for dim in fact1_dims:
        from .potentials import LocallyNonconvexPotential
        pot = LocallyNonconvexPotential(m=1.0, radius=2.0, amp=1.0,
                                        width=0.5, dim=dim)
        rep = vf.check_fact1(pot)
        rows.append(VerifyRow(
            f"normalizer_bound[d={dim}]", rep.satisfied,
            f"ln_z={rep.params['ln_z']:.4f} bound={rep.params['bound']:.4f}"))
    if step_paths > 0:
        rep = vf.check_step_formulas(paths=step_paths, substeps=step_substeps,
                                     rng=it.rng_stream(seed + 1))
        rows.append(VerifyRow(
            f"one_step_formulas[paths={step_paths}]", rep.satisfied,
            f"worst_gap={rep.worst_margin:.3e}"))
    return rows
