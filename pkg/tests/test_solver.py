import numpy as np
import pytest

import vexcap as vx
from vexcap.errors import DomainError
from vexcap.solver import _diff_adjoint, _diff_forward


class TestProxPower:
    def test_quadratic_closed_form(self):
        rng = np.random.default_rng(1)
        z = rng.uniform(-10, 10, 1000)
        w = rng.uniform(0, 5, 1000)
        got = vx.prox_power(z, w, 2.0)
        assert np.max(np.abs(got - z / (1 + 2 * w))) <= 1e-14

    def test_soft_threshold_closed_form(self):
        rng = np.random.default_rng(2)
        z = rng.uniform(-10, 10, 1000)
        w = rng.uniform(0, 5, 1000)
        got = vx.prox_power(z, w, 1.0)
        expected = np.sign(z) * np.maximum(np.abs(z) - w, 0.0)
        assert np.max(np.abs(got - expected)) <= 1e-14

    def test_p_three_halves_against_grid_search(self):
        # oracle: dense scan of weight*|t|^1.5 + (t-z)^2/2 followed by local
        # quadratic refinement of the best bracket
        z, w, p = 2.0, 1.0, 1.5
        ts = np.linspace(0.0, z, 2_000_001)
        obj = w * ts**p + 0.5 * (ts - z) ** 2
        t_star = ts[np.argmin(obj)]
        got = vx.prox_power(z, w, p)
        assert got == pytest.approx(t_star, abs=2e-6)
        assert abs(vx.prox_optimality_residual(z, w, p, got)) <= 1e-13

    def test_sign_and_contraction(self):
        rng = np.random.default_rng(3)
        z = rng.uniform(-20, 20, 5000)
        w = rng.uniform(0, 3, 5000)
        p = rng.uniform(1.05, 4, 5000)
        t = vx.prox_power(z, w, p)
        assert np.all(np.sign(t) * np.sign(z) >= 0)
        assert np.all(np.abs(t) <= np.abs(z) + 1e-15)

    def test_zero_weight_is_identity(self):
        z = np.array([-3.0, 0.0, 7.5])
        assert np.array_equal(vx.prox_power(z, 0.0, 1.7), z)

    def test_subgradient_residual_random_triples(self):
        rng = np.random.default_rng(4)
        n = 5000
        z = rng.uniform(-10, 10, n)
        w = rng.uniform(0, 5, n)
        p = np.where(rng.uniform(size=n) < 0.25, 1.0,
                     np.where(rng.uniform(size=n) < 0.33, 2.0, rng.uniform(1.05, 4, n)))
        t = vx.prox_power(z, w, p)
        res = vx.prox_optimality_residual(z, w, p, t)
        assert np.max(res) <= 1e-12

    def test_warm_start_agrees_with_cold(self):
        rng = np.random.default_rng(5)
        z = rng.uniform(-5, 5, 2000)
        w = rng.uniform(0.1, 2, 2000)
        p = rng.uniform(1.1, 3, 2000)
        cold = vx.prox_power(z, w, p)
        warm = vx.prox_power(z, w, p, init=np.abs(cold) * rng.uniform(0.5, 1.5, 2000))
        assert np.max(np.abs(cold - warm)) <= 1e-11

    def test_invalid_arguments_rejected(self):
        with pytest.raises(DomainError):
            vx.prox_power(1.0, -0.1, 2.0)
        with pytest.raises(DomainError):
            vx.prox_power(1.0, 1.0, 0.5)


class TestDifferenceOperators:
    @pytest.mark.parametrize("shape", [(11,), (7, 9)])
    def test_adjointness_exact(self, shape):
        rng = np.random.default_rng(6)
        h = 0.1
        x = rng.normal(size=shape)
        ys = [rng.normal(size=shape) for _ in shape]
        gx = _diff_forward(x, h)
        lhs = sum(float((g * y).sum()) for g, y in zip(gx, ys))
        rhs = float((x * _diff_adjoint(ys, h)).sum())
        assert lhs == pytest.approx(rhs, rel=1e-12)

    def test_operator_norm_bound(self):
        rng = np.random.default_rng(7)
        h = 0.05
        x = rng.normal(size=(30, 30))
        bound = np.sqrt(4 * 2) / h
        for _ in range(50):  # power iteration
            gx = _diff_forward(x, h)
            x = _diff_adjoint(gx, h)
            x /= np.linalg.norm(x)
        gx = _diff_forward(x, h)
        est = np.sqrt(sum(float((g**2).sum()) for g in gx))
        assert est <= bound


class TestSolverConfig:
    def test_validation(self):
        with pytest.raises(DomainError):
            vx.SolverConfig(max_iters=0)
        with pytest.raises(DomainError):
            vx.SolverConfig(tau=-1.0)
        with pytest.raises(DomainError):
            vx.SolverConfig(tol_gap=0.0)

    def test_step_product_bound_enforced(self, unit_line):
        f = vx.ExponentField.constant(unit_line, 2.0)
        cfg = vx.SolverConfig(tau=1e6, sigma=1e6)
        with pytest.raises(DomainError):
            vx.minimize_capacity_energy(f, vx.RegionMask.empty(unit_line), cfg)


class TestMinimizeCapacityEnergy:
    def test_empty_pin_returns_zero_in_two_iterations(self, unit_line):
        f = vx.ExponentField.constant(unit_line, 2.0)
        u, cert = vx.minimize_capacity_energy(f, vx.RegionMask.empty(unit_line))
        assert np.all(u.values == 0.0)
        assert cert.energy.total == 0.0
        assert cert.converged and cert.iterations <= 2

    def test_full_pin_returns_one(self, unit_line):
        f = vx.ExponentField.from_callable(unit_line, lambda x: 1.0 + 2 * x)
        full = vx.RegionMask.full(unit_line)
        u, cert = vx.minimize_capacity_energy(f, full)
        measure = unit_line.node_count * unit_line.weight
        assert np.all(u.values == 1.0)
        assert cert.energy.total == pytest.approx(measure, rel=1e-12)
        assert cert.converged and cert.iterations <= 2

    def test_box_and_pin_constraints_exact(self, unit_line):
        f = vx.ExponentField.constant(unit_line, 2.0)
        pin = vx.interval_mask(unit_line, 0.4, 0.6)
        u, _ = vx.minimize_capacity_energy(f, pin, vx.SolverConfig(max_iters=500))
        assert np.all(u.values >= 0.0) and np.all(u.values <= 1.0)
        assert np.all(u.values[pin.where] == 1.0)

    def test_incumbent_energy_trace_nonincreasing(self, unit_line):
        f = vx.ExponentField.constant(unit_line, 2.0)
        pin = vx.interval_mask(unit_line, 0.45, 0.55)
        _, cert = vx.minimize_capacity_energy(f, pin, vx.SolverConfig(max_iters=2000))
        trace = cert.energy_trace
        assert all(b <= a + 1e-12 for a, b in zip(trace, trace[1:]))

    def test_certificate_flags_consistent(self, unit_line):
        f = vx.ExponentField.constant(unit_line, 2.0)
        pin = vx.interval_mask(unit_line, 0.45, 0.55)
        cfg = vx.SolverConfig(max_iters=3, tol_gap=1e-12, tol_change=1e-14)
        _, cert = vx.minimize_capacity_energy(f, pin, cfg)
        assert not cert.converged
        cfg = vx.SolverConfig(max_iters=20000, tol_gap=1e-7)
        _, cert = vx.minimize_capacity_energy(f, pin, cfg)
        assert cert.converged
        assert cert.final_gap <= 1e-7 or cert.final_change <= cfg.tol_change

    def test_against_projected_gradient_oracle(self):
        # independent long-run projected gradient on the smooth p = 2 case
        g = vx.build_grid(1, (-5.0, 5.0), 0.02)
        f = vx.ExponentField.constant(g, 2.0)
        pin = vx.dilate_mask(vx.interval_mask(g, -0.5, 0.5), 2 * g.h)
        u, cert = vx.minimize_capacity_energy(f, pin, vx.SolverConfig(max_iters=30000, tol_gap=1e-9))

        h = g.h
        w = g.weight
        lam_max = 2 * w * (1 + 4 / h**2)
        alpha = 1.8 / lam_max
        x = pin.where.astype(float)

        def grad(x):
            gx = np.zeros_like(x)
            gx[:-1] = (x[1:] - x[:-1]) / h
            div = np.zeros_like(x)
            div[:-1] -= gx[:-1] / h
            div[1:] += gx[:-1] / h
            return 2 * w * x + 2 * w * div

        for _ in range(400000):
            x_new = np.clip(x - alpha * grad(x), 0.0, 1.0)
            x_new[pin.where] = 1.0
            if np.max(np.abs(x_new - x)) <= 1e-9:
                x = x_new
                break
            x = x_new
        pg_energy = vx.objective_energy(vx.GridFunction(g, x), f)
        assert cert.energy.total == pytest.approx(pg_energy, rel=1e-5)
        assert np.max(np.abs(u.values - x)) <= 1e-3

    def test_axis_permutation_invariance(self):
        # relabeling the axes permutes every nodewise update identically, so
        # the minimizer of the transposed scenario is the exact transpose
        g = vx.build_grid(2, [(0.0, 1.0), (0.0, 0.5)], 1 / 40)
        gt = vx.build_grid(2, [(0.0, 0.5), (0.0, 1.0)], 1 / 40)
        f = vx.ExponentField.from_callable(g, lambda x, y: 1.2 + 0.5 * x + 0.3 * y)
        ft = vx.ExponentField(gt, f.values.T.copy())
        pin = vx.box_mask(g, 0.2, 0.4, 0.1, 0.3)
        pint = vx.RegionMask(gt, pin.where.T.copy())
        cfg = vx.SolverConfig(max_iters=3000, tol_gap=1e-8)
        u, cert_u = vx.minimize_capacity_energy(f, pin, cfg)
        v, cert_v = vx.minimize_capacity_energy(ft, pint, cfg)
        assert np.max(np.abs(u.values - v.values.T)) <= 1e-9
        assert cert_u.energy.total == pytest.approx(cert_v.energy.total, rel=1e-12)

    def test_mirror_symmetry_of_values(self):
        # with a constant exponent the reflected scenario has the identical
        # discrete energy, so the certified values agree; iterates need not
        g = vx.build_grid(1, (0.0, 1.0), 0.01)
        f = vx.ExponentField.constant(g, 2.0)
        pin = vx.interval_mask(g, 0.2, 0.35)
        pin_flip = vx.RegionMask(g, pin.where[::-1].copy())
        cfg = vx.SolverConfig(max_iters=20000, tol_gap=1e-9)
        _, cert_a = vx.minimize_capacity_energy(f, pin, cfg)
        _, cert_b = vx.minimize_capacity_energy(f, pin_flip, cfg)
        assert cert_a.energy.total == pytest.approx(cert_b.energy.total, rel=1e-7)

    def test_weak_duality_never_violated(self, unit_line):
        f = vx.ExponentField.from_callable(unit_line, lambda x: 1.0 + x)
        pin = vx.interval_mask(unit_line, 0.3, 0.5)
        _, cert = vx.minimize_capacity_energy(f, pin, vx.SolverConfig(max_iters=5000))
        assert cert.final_gap >= -1e-12

    def test_grid_mismatch_rejected(self, unit_line):
        other = vx.build_grid(1, (0.0, 1.0), 0.02)
        f = vx.ExponentField.constant(unit_line, 2.0)
        with pytest.raises(DomainError):
            vx.minimize_capacity_energy(f, vx.RegionMask.empty(other))
