import math

import numpy as np
import pytest

from ulmc.gaussian import block_lyapunov, initial_phase_law, target_phase_law
from ulmc.potentials import QuadraticPotential
from ulmc.schedule import (
    c_n_tilde,
    initial_lyapunov_bound,
    iteration_count,
    iteration_count_from_bound,
    guaranteed_schedule,
    step_size,
)


class TestStepSize:
    def test_hand_evaluation(self):
        # L_G=1, L_H=1, rho=1, cnt=0, c_m=1, eps=d=1:
        # h = (1/56) * min{1/24, 1} * min{2^{-1/2}, 1} = 1 / (56 * 24 * sqrt(2))
        h = step_size(l_g=1.0, l_h=1.0, rho=1.0, cnt=0.0, c_m=1.0, epsilon=1.0, dim=1)
        assert h == pytest.approx(0.0005261211169542764, rel=1e-12)

    def test_vanishing_branches_collapse(self):
        h = step_size(l_g=2.0, l_h=0.0, rho=0.5, cnt=0.3, c_m=0.0, epsilon=0.2, dim=4)
        expected = (1 / 56) * (0.5 / (24 * 2.0)) / math.sqrt(2.0) \
            * math.sqrt(0.2 / 4) / math.sqrt(2.3)
        assert h == pytest.approx(expected, rel=1e-12)

    def test_epsilon_homogeneity(self):
        base = dict(l_g=1.0, l_h=0.0, rho=1.0, cnt=0.0, c_m=0.0, dim=8)
        h1 = step_size(epsilon=0.5, **base)
        h2 = step_size(epsilon=1.0, **base)
        assert h2 / h1 == pytest.approx(math.sqrt(2.0), rel=1e-12)

    def test_monotonicity_grid(self):
        base = dict(l_g=1.0, l_h=0.5, rho=0.5, cnt=1.0, c_m=2.0, epsilon=0.5, dim=4)

        def h_at(**kw):
            args = dict(base)
            args.update(kw)
            return step_size(**args)

        h0 = h_at()
        assert h_at(epsilon=1.0) > h0
        assert h_at(rho=0.9) > h0
        assert h_at(dim=16) < h0
        assert h_at(l_g=4.0) < h0
        # the Hessian branch binds only once it dominates rho/(24 L_G)
        assert h_at(l_h=4.0) <= h0
        assert h_at(l_h=60.0) < h_at(l_h=30.0)

    def test_step_below_discretization_ceiling(self):
        # h <= 1/(8 L_G) across a parameter grid
        for l_g in (0.5, 1.0, 10.0):
            for rho in (1e-3, 0.1, min(l_g, 1.0)):
                for eps_frac in (0.1, 1.0, 2.0):
                    dim = 4
                    h = step_size(l_g, 0.0, rho, 0.0, 0.0, eps_frac * dim, dim)
                    assert h <= 1 / (8 * l_g)

    def test_out_of_range_epsilon_warns(self):
        with pytest.warns(RuntimeWarning):
            step_size(1.0, 0.0, 1.0, 0.0, 0.0, epsilon=10.0, dim=1)

    def test_uncapped_rho_rejected(self):
        with pytest.raises(ValueError):
            step_size(1.0, 0.0, 2.0, 0.0, 0.0, 0.5, 1)


class TestIterationCount:
    def test_hand_evaluation(self):
        k = iteration_count(l_g=1.0, l_h=0.0, rho=0.01, cnt=1.0, c_m=0.0,
                            epsilon=0.1, dim=100)
        assert k == 198474814034

    def test_log_factor_at_epsilon_boundary(self):
        # eps = 2d with cnt = c_m = 0: ln factor reduces to ln 2
        d = 5
        k = iteration_count(l_g=1.0, l_h=0.0, rho=1.0, cnt=0.0, c_m=0.0,
                            epsilon=2.0 * d, dim=d)
        expected = 1680 * 24 * math.sqrt(2.0) * math.sqrt(d / (2 * d)) * math.log(2.0)
        assert k == math.ceil(expected)

    def test_product_with_step_size_covers_generic_bound(self):
        # K h >= (30 / rho) ln(2 L[p0] / eps) whenever the bound is finite
        for rho in (0.05, 0.5, 1.0):
            for cnt, c_m in ((0.0, 0.0), (1.0, 3.0)):
                d, eps, l_g, l_h = 6, 0.25, 2.0, 1.0
                h = step_size(l_g, l_h, rho, cnt, c_m, eps, d)
                k = iteration_count(l_g, l_h, rho, cnt, c_m, eps, d)
                bound = initial_lyapunov_bound(cnt, c_m, d)
                assert k * h >= (30.0 / rho) * math.log(2.0 * bound / eps)

    def test_closed_form_dominates_generic_form(self):
        for cnt, c_m in ((0.0, 0.0), (0.5, 2.0), (2.0, 0.0)):
            d, eps, rho, l_g, l_h = 10, 0.5, 0.2, 1.5, 0.7
            h = step_size(l_g, l_h, rho, cnt, c_m, eps, d)
            bound = initial_lyapunov_bound(cnt, c_m, d)
            generic = iteration_count_from_bound(rho, h, bound, eps)
            closed = iteration_count(l_g, l_h, rho, cnt, c_m, eps, d)
            assert closed >= generic
            # the two differ only through the log argument direction
            ratio = closed / generic
            lo = math.log(4 * max((cnt + 1) * d / eps, c_m / eps))
            hi = math.log(2 * bound / eps)
            assert ratio == pytest.approx(lo / hi, rel=0.01)


class TestInitialBound:
    def test_trivial_values(self):
        assert initial_lyapunov_bound(0.0, 0.0, 1) == 1.0
        assert initial_lyapunov_bound(1.0, 5.0, 10) == 25.0

    def test_closed_form_lyapunov_below_bound(self):
        # theta_0 ~ N(0, I/L_G), r_0 ~ N(0, I/xi) against quadratic targets
        for spec in ([1.0], [1.0, 0.25], [10.0, 5.0, 1.0]):
            quad = QuadraticPotential(spec)
            sched = guaranteed_schedule(quad, epsilon=0.5)
            law0 = initial_phase_law(quad, sched.xi)
            target = target_phase_law(quad, sched.xi)
            val = block_lyapunov(law0, target, quad.l_g)
            bound = initial_lyapunov_bound(sched.c_n_tilde, sched.c_m, quad.dim)
            assert val <= bound + 1e-12


class TestPaperSchedule:
    def test_quadratic_defaults(self):
        quad = QuadraticPotential([1.0, 4.0])
        sched = guaranteed_schedule(quad, epsilon=0.5)
        assert sched.gamma == 2.0
        assert sched.xi == pytest.approx(2 * 4.0)
        assert sched.rho == 1.0
        assert sched.c_n_tilde == pytest.approx(0.5 * math.log(4.0 / 2.0))
        assert sched.c_m == 0.0
        assert sched.n_steps >= 1 and sched.h > 0

    def test_c_n_tilde_shift(self):
        assert c_n_tilde(0.5 * math.log(2 * math.pi), 1.0) == pytest.approx(0.0)

    def test_rho_capped_at_one(self):
        quad = QuadraticPotential([3.0, 5.0])
        sched = guaranteed_schedule(quad, epsilon=0.5)
        assert sched.rho == 1.0
