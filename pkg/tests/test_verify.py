import math
from fractions import Fraction

import numpy as np
import pytest

from ulmc.integrators import rng_stream
from ulmc.potentials import LocallyNonconvexPotential, QuadraticPotential
from ulmc.verify import (
    check_fact1,
    check_fact2,
    check_m_bound,
    check_mc_bound,
    check_step_formulas,
    eta_coefficient,
    fact2_bound,
    frozen_drift_gap,
    nu_admissible_max,
)

RATIO_GRID = (1e-4, 1e-2, 0.1, 0.5)


class TestFlowBound:
    def test_endpoint_value_at_ratio_one(self):
        reports = check_mc_bound(rho=1.0, l_g=1.0)
        assert reports[0].value == pytest.approx(-92 / 5 + 9 / 40, abs=1e-14)
        assert reports[0].value == pytest.approx(-18.175)

    def test_small_ratio_limits(self):
        reports = check_mc_bound(rho=1e-12, l_g=1.0)
        limits = (-92 / 5, -819 / 1600, -2499 / 1600)
        for rep, lim in zip(reports[:3], limits):
            assert rep.value == pytest.approx(lim, abs=1e-9)
            assert rep.value < 0

    @pytest.mark.parametrize("ratio", RATIO_GRID)
    @pytest.mark.parametrize("l_g", [0.5, 1.0, 10.0])
    def test_grid_passes_with_sweep_agreement(self, ratio, l_g):
        reports = check_mc_bound(rho=ratio * l_g, l_g=l_g)
        assert all(r.satisfied for r in reports)

    def test_parameter_range_enforced(self):
        with pytest.raises(ValueError):
            check_mc_bound(rho=2.0, l_g=1.0)

    def test_mutated_constant_breaks_psd(self):
        # scaling the quadratic-form matrix S by 2 must break the inequality:
        # rebuild the 2x2 symbol with the mutated coefficients and sweep it
        rho, l_g = 0.5, 1.0
        a, b, c = 1 / l_g, 1 / (4 * l_g), 2 / l_g
        gamma, xi, lam = 2.0, 2 * l_g, rho / 10
        scale = 2.0
        alpha = (a / 2) * xi - (scale * b + 1 / (2 * rho)) * lam
        beta = ((c + a * gamma) / 2) * xi - scale * (a / 2) * lam
        sigma = gamma * (2 * c * xi + 1) - (scale * c + 1 / (2 * rho)) * lam
        # S enters the symbol itself as well: scaled b in the off-diagonal
        lams = np.linspace(-l_g, l_g, 256)
        mats = np.zeros((256, 2, 2))
        mats[:, 0, 0] = alpha
        mats[:, 0, 1] = mats[:, 1, 0] = beta - 0.5 * scale * b * lams
        mats[:, 1, 1] = sigma - 0.5 * scale * a * lams
        mutated_min = np.linalg.eigvalsh(mats).min()
        true_reports = check_mc_bound(rho, l_g)
        assert all(r.satisfied for r in true_reports)
        assert mutated_min < -1e-6


class TestDiscreteBound:
    def test_endpoint_value_at_boundary(self):
        reports = check_m_bound(rho=1.0, l_g=2.0)
        assert reports[0].value == pytest.approx(-8579 / 480 + 3 / 80, abs=1e-14)
        assert all(r.satisfied for r in reports)

    def test_precondition_raises(self):
        with pytest.raises(ValueError):
            check_m_bound(rho=1.0, l_g=2.0 - 1e-9)

    def test_second_expression_exact_fraction(self):
        # independent rational evaluation at rho / L_G = 1/2
        t = Fraction(1, 2)
        expected = Fraction(-5357, 115200) + Fraction(241, 3200) * t - t * t / 3600
        reports = check_m_bound(rho=0.5, l_g=1.0)
        assert reports[1].value == pytest.approx(float(expected), abs=1e-15)

    @pytest.mark.parametrize("ratio", RATIO_GRID)
    @pytest.mark.parametrize("l_g", [0.5, 1.0, 10.0])
    def test_grid_passes(self, ratio, l_g):
        reports = check_m_bound(rho=ratio * l_g, l_g=l_g)
        assert all(r.satisfied for r in reports)


class TestStackedNormBound:
    def test_zero_nu_is_equality_at_zero(self):
        rep = check_fact2(l_g=1.0, gamma=2.0, xi=2.0, nu=0.0, trials=50,
                          rng=rng_stream(0))
        assert rep.satisfied and rep.worst_margin <= 1e-12

    def test_eta_matches_literal_formula(self):
        for gamma, xi, nu in [(2.0, 2.0, 0.1), (2.0, 4.0, 0.05), (1.0, 1.0, 0.3)]:
            a = gamma * xi * nu
            literal = (1 / gamma) * (
                math.exp(a) * (1 - math.exp(-a)) ** 2 / (gamma * xi)
                - (nu - (1 - math.exp(-a)) / (gamma * xi))
            )
            assert eta_coefficient(gamma, xi, nu) == pytest.approx(literal, rel=1e-12)

    def test_scalar_closed_form(self):
        # H = L_G (d = 1): both blocks are scalars
        l_g, gamma, xi = 1.0, 2.0, 2.0
        nu = 0.05
        eta = eta_coefficient(gamma, xi, nu)
        top = l_g * (1 / (1 + eta * l_g) - 1)
        bottom = -(math.expm1(gamma * xi * nu) / gamma) * l_g / (1 + eta * l_g)
        norm = math.hypot(top, bottom)
        assert norm <= fact2_bound(l_g, xi, nu)

    def test_thousand_random_draws_fixed_nu(self):
        rep = check_fact2(l_g=1.0, gamma=2.0, xi=2.0, nu=0.05, trials=1000,
                          rng=rng_stream(1))
        assert rep.violations == 0

    def test_nu_out_of_range_rejected(self):
        nu_max = nu_admissible_max(1.0, 2.0, 2.0)
        with pytest.raises(ValueError):
            check_fact2(nu=nu_max * 1.01, trials=1)


class TestNormalizerBound:
    def test_pure_quadratic_exact_integral(self):
        rep = check_fact1(QuadraticPotential([1.0]))
        assert rep.satisfied
        assert rep.params["ln_z"] == pytest.approx(0.5 * math.log(2 * math.pi),
                                                   abs=1e-8)
        assert rep.params["bound"] == pytest.approx(0.5 * math.log(4 * math.pi))

    def test_nonconvex_one_dim(self):
        pot = LocallyNonconvexPotential(m=1.0, radius=2.0, amp=1.0, width=0.5, dim=1)
        rep = check_fact1(pot)
        assert rep.satisfied and rep.worst_margin < 0

    def test_nonconvex_two_dim(self):
        pot = LocallyNonconvexPotential(m=1.0, radius=2.0, amp=1.0, width=0.5, dim=2)
        rep = check_fact1(pot)
        assert rep.satisfied

    def test_high_dimension_rejected(self):
        pot = LocallyNonconvexPotential(m=1.0, radius=2.0, amp=1.0, width=0.5, dim=4)
        with pytest.raises(ValueError):
            check_fact1(pot)


class TestStepFormulaOracle:
    def test_monte_carlo_agreement(self):
        rep = check_step_formulas(gamma=2.0, xi=1.0, h=0.25, paths=20000,
                                  substeps=400, rng=rng_stream(2))
        assert rep.satisfied

    def test_drift_gap_shrinks_linearly_in_substep(self):
        gaps = [frozen_drift_gap(2.0, 1.0, 0.2, n) for n in (200, 400, 800)]
        ratios = [gaps[i] / gaps[i + 1] for i in range(2)]
        for r in ratios:
            assert r == pytest.approx(2.0, abs=0.1)

    def test_zero_gradient_matches_ou_drift(self):
        # with no gradient the closed-form mean is the pure OU map, which the
        # substepped drift approaches as substeps grow
        from ulmc.integrators import PhaseState, underdamped_covariance, underdamped_mean

        gamma, xi, h = 2.0, 1.0, 0.4
        c = underdamped_covariance(gamma, xi, h)
        x = PhaseState(np.array([1.0]), np.array([-0.5]))
        mu = underdamped_mean(x, np.zeros(1), c)
        expected_theta = 1.0 + (1 - math.exp(-gamma * xi * h)) / gamma * (-0.5)
        expected_r = math.exp(-gamma * xi * h) * (-0.5)
        assert mu.theta[0] == pytest.approx(expected_theta, rel=1e-14)
        assert mu.r[0] == pytest.approx(expected_r, rel=1e-14)
