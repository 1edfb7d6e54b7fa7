import json
import math
import os

import numpy as np
import pytest

from ulmc.cli import main as cli_main
from ulmc.gaussian import (
    initial_phase_law,
    kernel_of_sampler,
)
from ulmc.harness import (
    ConfigError,
    RunConfig,
    accelerated_tuning,
    figure_accel,
    iterations_to_kl,
    largest_stable_step,
    run,
    verify_all,
)
from ulmc.potentials import QuadraticPotential
from ulmc.schedule import initial_lyapunov_bound

QUAD_1D = {"kind": "quadratic", "spectrum": [1.0]}
QUAD_4D = {"kind": "quadratic", "spectrum": [1.0, 1.6, 2.5, 4.0]}


def read_curve(path, column=3):
    vals = []
    with open(path) as fh:
        for line in fh:
            if line.startswith("#") or line.startswith("iter"):
                continue
            vals.append(float(line.split(",")[column]))
    return np.array(vals)


def rebound_ratio(kl):
    worst, cur = 1.0, kl[0]
    for v in kl[1:]:
        if v < cur:
            cur = v
        elif cur > 0:
            worst = max(worst, v / cur)
    return worst


class TestRunConfig:
    def test_unknown_keys_rejected(self):
        with pytest.raises(ConfigError):
            RunConfig.from_dict({"potential": QUAD_1D, "bogus": 1})

    def test_bad_sampler_rejected(self):
        with pytest.raises(ConfigError):
            RunConfig.from_dict({"potential": QUAD_1D, "sampler": "rwm"})

    def test_sample_mode_needs_chains(self):
        with pytest.raises(ConfigError):
            RunConfig.from_dict({"potential": QUAD_1D, "mode": "sample-moments"})

    def test_bad_schedule_override_keys(self):
        cfg = RunConfig.from_dict(
            {"potential": QUAD_1D, "schedule": {"step": 0.1}})
        with pytest.raises(ConfigError):
            run(cfg)

    def test_exact_mode_requires_quadratic(self):
        cfg = RunConfig.from_dict({
            "potential": {"kind": "locally_nonconvex", "m": 1.0, "R": 2.0,
                          "a": 1.0, "s": 0.5, "d": 2},
        })
        with pytest.raises(ConfigError):
            run(cfg)

    def test_generic_dq_not_exact(self):
        cfg = RunConfig.from_dict({"potential": QUAD_1D, "sampler": "generic_dq"})
        with pytest.raises(ConfigError):
            run(cfg)


class TestExactMode:
    def test_guaranteed_schedule_reaches_epsilon(self):
        cfg = RunConfig.from_dict({"potential": QUAD_1D, "epsilon": 0.05})
        result = run(cfg)
        last = result.rows[-1]
        assert last.kl_joint <= 0.05
        assert last.iter <= result.schedule.n_steps

    def test_zero_iterations_single_row(self):
        cfg = RunConfig.from_dict({
            "potential": QUAD_4D, "schedule": {"h": 0.05, "K": 0}, "epsilon": 1e-9,
        })
        result = run(cfg)
        assert len(result.rows) == 1
        row = result.rows[0]
        sched = result.schedule
        bound = initial_lyapunov_bound(sched.c_n_tilde, sched.c_m, sched.dim)
        assert row.lyapunov <= bound + 1e-12

    @pytest.mark.parametrize("sampler", ["underdamped", "em", "overdamped", "hmc"])
    def test_row_invariants(self, sampler):
        cfg = RunConfig.from_dict({
            "potential": QUAD_4D, "sampler": sampler,
            "schedule": {"h": 0.02, "K": 200}, "epsilon": 1e-12,
        })
        result = run(cfg)
        assert len(result.rows) > 1
        for row in result.rows:
            assert row.kl_theta <= row.kl_joint + 1e-12
            assert row.lyapunov >= row.kl_joint - 1e-12
            assert row.kl_joint >= -1e-12 and row.w2 >= 0

    def test_exact_csv_deterministic(self, tmp_path):
        out1 = tmp_path / "a.csv"
        out2 = tmp_path / "b.csv"
        for out in (out1, out2):
            cfg = RunConfig.from_dict({
                "potential": QUAD_1D, "schedule": {"h": 0.1, "K": 50},
                "epsilon": 1e-9, "out": str(out),
            })
            run(cfg)
        assert out1.read_bytes() == out2.read_bytes()


class TestSampleMode:
    def test_seeded_csv_byte_identical(self, tmp_path):
        payload = {
            "potential": QUAD_1D, "mode": "sample-moments", "chains": 200,
            "seed": 7, "schedule": {"h": 0.1, "K": 20}, "epsilon": 1e-9,
        }
        outs = []
        for name in ("a.csv", "b.csv"):
            out = tmp_path / name
            cfg = RunConfig.from_dict(dict(payload, out=str(out)))
            run(cfg)
            outs.append(out.read_bytes())
        assert outs[0] == outs[1]

    def test_seed_changes_output(self, tmp_path):
        payload = {
            "potential": QUAD_1D, "mode": "sample-moments", "chains": 200,
            "schedule": {"h": 0.1, "K": 20}, "epsilon": 1e-9,
        }
        rows1 = run(RunConfig.from_dict(dict(payload, seed=1))).rows
        rows2 = run(RunConfig.from_dict(dict(payload, seed=2))).rows
        assert rows1[-1].mean_norm != rows2[-1].mean_norm

    def test_divergence_columns_are_nan(self):
        cfg = RunConfig.from_dict({
            "potential": QUAD_1D, "mode": "sample-moments", "chains": 64,
            "schedule": {"h": 0.1, "K": 5}, "seed": 0,
        })
        for row in run(cfg).rows:
            assert math.isnan(row.kl_joint) and math.isnan(row.lyapunov)
            assert not math.isnan(row.mean_norm)

    @pytest.mark.parametrize("sampler", ["underdamped", "em", "overdamped",
                                         "hmc", "generic_dq"])
    def test_all_samplers_run(self, sampler):
        cfg = RunConfig.from_dict({
            "potential": QUAD_4D, "sampler": sampler, "mode": "sample-moments",
            "chains": 128, "schedule": {"h": 0.01, "K": 10}, "seed": 3,
        })
        result = run(cfg)
        assert len(result.rows) == 11
        assert all(math.isfinite(r.cov_trace) for r in result.rows)

    def test_moments_track_exact_law(self):
        quad = QuadraticPotential(QUAD_4D["spectrum"])
        h, n_steps, chains = 0.08, 60, 20000
        cfg = RunConfig.from_dict({
            "potential": QUAD_4D, "mode": "sample-moments", "chains": chains,
            "schedule": {"h": h, "K": n_steps}, "seed": 11,
        })
        result = run(cfg)
        xi = result.schedule.xi
        kernel = kernel_of_sampler("underdamped", quad, gamma=2.0, xi=xi, h=h)
        law = initial_phase_law(quad, xi)
        laws = {0: law}
        for k in range(1, n_steps + 1):
            law = kernel.propagate(law)
            laws[k] = law
        for k, mean, cov in result.moments:
            dense = laws[k].to_dense()
            se_mean = np.sqrt(np.diag(dense.cov) / chains)
            np.testing.assert_array_less(np.abs(mean - dense.mean),
                                         5 * se_mean + 1e-12)
            vii = np.diag(dense.cov)
            se_cov = np.sqrt((np.outer(vii, vii) + dense.cov**2) / (chains - 1))
            np.testing.assert_array_less(np.abs(cov - dense.cov), 5 * se_cov)


class TestFigure:
    def test_emits_two_curves_and_script(self, tmp_path):
        out = figure_accel(d=8, kappa=16.0, epsilon=1e-5, out_dir=str(tmp_path))
        od = read_curve(out["paths"]["overdamped"])
        ud = read_curve(out["paths"]["underdamped"])
        assert os.path.exists(out["paths"]["plot_script"])
        assert rebound_ratio(od) < 1.05          # monotone trend
        assert rebound_ratio(ud) > 10.0          # oscillatory decay
        assert out["iterations"]["underdamped"] < out["iterations"]["overdamped"]

    def test_isotropic_samplers_comparable(self):
        quad = QuadraticPotential.two_point(4, 1.0)
        gamma, xi = accelerated_tuning(quad)
        tau = 1e-6
        h_od = largest_stable_step("overdamped", quad, floor_kl=tau / 2)
        h_ud = largest_stable_step("underdamped", quad, gamma=gamma, xi=xi,
                                   floor_kl=tau / 2)
        k_od = iterations_to_kl("overdamped", quad, h=h_od, tau=tau)
        k_ud = iterations_to_kl("underdamped", quad, gamma=gamma, xi=xi,
                                h=h_ud, tau=tau)
        assert max(k_od, k_ud) <= 5 * min(k_od, k_ud)

    def test_reruns_identical(self, tmp_path):
        a = tmp_path / "a"
        b = tmp_path / "b"
        for sub in (a, b):
            figure_accel(d=6, kappa=4.0, epsilon=1e-4, out_dir=str(sub))
        for name in ("overdamped.csv", "underdamped.csv"):
            assert (a / name).read_bytes() == (b / name).read_bytes()


class TestVerifyAll:
    def test_default_grid_passes(self):
        rows = verify_all({"fact2_trials": 200, "step_paths": 4000,
                           "step_substeps": 200, "fact1_dims": [1]})
        assert rows and all(r.passed for r in rows)

    def test_empty_grid_sections(self):
        rows = verify_all({"ratios": [], "fact2_trials": 0, "fact1_dims": [],
                           "step_paths": 0})
        assert rows == []

    def test_unknown_grid_keys_rejected(self):
        with pytest.raises(ConfigError):
            verify_all({"bogus": 1})


class TestCli:
    def _write_config(self, tmp_path, payload):
        path = tmp_path / "config.json"
        path.write_text(json.dumps(payload))
        return str(path)

    def test_run_roundtrip(self, tmp_path, capsys):
        cfg = self._write_config(tmp_path, {
            "potential": QUAD_1D, "schedule": {"h": 0.1, "K": 20},
            "epsilon": 1e-9,
        })
        out = tmp_path / "rows.csv"
        code = cli_main(["run", "--config", cfg, "--out", str(out)])
        assert code == 0 and out.exists()
        lines = out.read_text().splitlines()
        assert any(line.startswith("# h=") for line in lines)
        assert any(line.startswith("iter,t,kl_joint") for line in lines)

    def test_bad_config_exit_code(self, tmp_path):
        cfg = self._write_config(tmp_path, {"potential": QUAD_1D, "junk": True})
        assert cli_main(["run", "--config", cfg]) == 2

    def test_missing_config_file(self, tmp_path):
        assert cli_main(["run", "--config", str(tmp_path / "nope.json")]) == 2

    def test_seed_env_override(self, tmp_path, monkeypatch):
        cfg = self._write_config(tmp_path, {
            "potential": QUAD_1D, "mode": "sample-moments", "chains": 32,
            "schedule": {"h": 0.1, "K": 3}, "seed": 1,
        })
        out = tmp_path / "rows.csv"
        monkeypatch.setenv("LANGEVIN_SEED", "99")
        assert cli_main(["run", "--config", cfg, "--out", str(out)]) == 0
        assert "# seed=99" in out.read_text()

    def test_bad_seed_env(self, tmp_path, monkeypatch):
        cfg = self._write_config(tmp_path, {"potential": QUAD_1D})
        monkeypatch.setenv("LANGEVIN_SEED", "not-an-int")
        assert cli_main(["run", "--config", cfg]) == 2

    def test_verify_grid_and_csv(self, tmp_path):
        grid = tmp_path / "grid.json"
        grid.write_text(json.dumps({"ratios": [0.1], "l_gs": [1.0],
                                    "fact2_trials": 50, "fact1_dims": [],
                                    "step_paths": 0}))
        csv = tmp_path / "report.csv"
        code = cli_main(["verify", "--grid", str(grid), "--csv", str(csv)])
        assert code == 0
        assert csv.read_text().startswith("name,passed,detail")

    def test_verify_failure_exit_code(self, monkeypatch):
        from ulmc import cli
        from ulmc.harness import VerifyRow

        monkeypatch.setattr(cli, "verify_all",
                            lambda grid=None: [VerifyRow("x", False, "boom")])
        assert cli_main(["verify"]) == 1

    def test_figure_subcommand(self, tmp_path):
        code = cli_main(["figure", "--d", "4", "--kappa", "4", "--eps", "1e-4",
                         "--out-dir", str(tmp_path)])
        assert code == 0
        assert (tmp_path / "underdamped.csv").exists()
        assert (tmp_path / "plot_accel.py").exists()
