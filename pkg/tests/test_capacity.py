import numpy as np
import pytest

import vexcap as vx
from vexcap.errors import ConfigError, DomainError

FAST = vx.SolverConfig(max_iters=6000, tol_gap=1e-6)


@pytest.fixture(scope="module")
def line_setup():
    g = vx.build_grid(1, (-2.0, 2.0), 0.005)
    f = vx.ExponentField.constant(g, 2.0)
    return g, f


class TestCapacityOp:
    def test_empty_set_zero(self, line_setup):
        g, f = line_setup
        res = vx.capacity(vx.RegionMask.empty(g), f, "mixed", radius=g.h, cfg=FAST)
        assert res.value == 0.0
        assert np.all(res.minimizer.values == 0.0)

    def test_interval_reference_small_grid(self, line_setup):
        # analytic: 2a + 2 tanh(L - a) with plateau half-width a and L = 2
        g, f = line_setup
        E = vx.interval_mask(g, -0.5, 0.5)
        res = vx.capacity(E, f, "mixed", radius=2 * g.h, cfg=vx.SolverConfig(max_iters=20000, tol_gap=1e-7))
        a = 0.5 + 2 * g.h
        expected = 2 * a + 2 * np.tanh(2.0 - a)
        assert res.value == pytest.approx(expected, rel=0.02)

    def test_minimizer_admissible(self, line_setup):
        g, f = line_setup
        E = vx.interval_mask(g, -0.3, 0.1)
        res = vx.capacity(E, f, "mixed", radius=2 * g.h, cfg=FAST)
        pinned = vx.dilate_mask(E, 2 * g.h)
        assert np.all(res.minimizer.values[pinned.where] == 1.0)
        assert res.minimizer.values.min() >= 0.0
        assert res.minimizer.values.max() <= 1.0
        assert res.value == res.certificate.energy.total

    def test_radius_below_spacing_rejected(self, line_setup):
        g, f = line_setup
        with pytest.raises(DomainError):
            vx.capacity(vx.interval_mask(g, 0, 0.1), f, "mixed", radius=g.h / 2)

    def test_unknown_kind_rejected(self, line_setup):
        g, f = line_setup
        with pytest.raises(DomainError):
            vx.capacity(vx.interval_mask(g, 0, 0.1), f, "other", radius=g.h)

    def test_monotone_in_set(self, line_setup):
        g, f = line_setup
        small = vx.interval_mask(g, -0.2, 0.2)
        big = vx.interval_mask(g, -0.5, 0.5)
        r_small = vx.capacity(small, f, "mixed", 2 * g.h, FAST)
        r_big = vx.capacity(big, f, "mixed", 2 * g.h, FAST)
        slack = 2 * (r_small.gap_slack + r_big.gap_slack)
        assert r_small.value <= r_big.value + slack

    def test_monotone_in_radius(self, line_setup):
        g, f = line_setup
        E = vx.interval_mask(g, -0.2, 0.2)
        r1 = vx.capacity(E, f, "mixed", g.h, FAST)
        r2 = vx.capacity(E, f, "mixed", 8 * g.h, FAST)
        slack = 2 * (r1.gap_slack + r2.gap_slack)
        assert r1.value <= r2.value + slack

    def test_kinds_share_value_but_split_reporting(self):
        g = vx.build_grid(1, (-1.0, 1.0), 0.01)
        f = vx.ExponentField.from_callable(g, lambda x: 1.0 + np.abs(x))
        E = vx.interval_mask(g, -0.1, 0.1)
        mixed = vx.capacity(E, f, "mixed", 2 * g.h, FAST)
        sob = vx.capacity(E, f, "sobolev", 2 * g.h, FAST)
        assert mixed.value == pytest.approx(sob.value, rel=1e-12)
        assert sob.certificate.energy.tv_part == 0.0
        assert mixed.certificate.energy.tv_part >= 0.0
        assert mixed.kind == "mixed" and sob.kind == "sobolev"

    def test_mixed_never_exceeds_sobolev(self, line_setup):
        g, f = line_setup
        E = vx.interval_mask(g, -0.4, -0.1)
        m = vx.capacity(E, f, "mixed", 2 * g.h, FAST)
        s = vx.capacity(E, f, "sobolev", 2 * g.h, FAST)
        assert m.value <= s.value + 2 * (m.gap_slack + s.gap_slack)


class TestAxiomChecks:
    def test_strong_subadd_on_overlapping_boxes(self):
        g = vx.build_grid(2, [(0, 1), (0, 1)], 1 / 32)
        f = vx.ExponentField.from_callable(g, lambda x, y: 1.5 + 0.4 * np.sin(np.pi * x))
        e1 = vx.box_mask(g, 0.1, 0.5, 0.1, 0.5)
        e2 = vx.box_mask(g, 0.3, 0.7, 0.3, 0.7)
        scen = vx.CapacityScenario(field=f, sets=[e1, e2], radius=2 * g.h)
        rep = vx.check_capacity_axioms(scen, "strong_subadd", FAST)
        assert rep.passed
        assert rep.lhs <= rep.rhs + rep.tolerance

    def test_increasing_sets_finite_family(self):
        g = vx.build_grid(1, (-1.0, 1.0), 0.005)
        f = vx.ExponentField.constant(g, 2.0)
        sets = [vx.interval_mask(g, -i / 10, i / 10) for i in range(1, 6)]
        scen = vx.CapacityScenario(field=f, sets=sets, radius=2 * g.h)
        rep = vx.check_capacity_axioms(scen, "increasing_sets", FAST)
        assert rep.passed
        assert rep.margin <= rep.tolerance

    def test_increasing_sets_rejects_non_nested(self):
        g = vx.build_grid(1, (-1.0, 1.0), 0.01)
        f = vx.ExponentField.constant(g, 2.0)
        sets = [vx.interval_mask(g, -0.5, 0.0), vx.interval_mask(g, 0.1, 0.5)]
        scen = vx.CapacityScenario(field=f, sets=sets)
        with pytest.raises(ConfigError):
            vx.check_capacity_axioms(scen, "increasing_sets", FAST)

    def test_outer_measure_small_family(self):
        g = vx.build_grid(1, (-1.0, 1.0), 0.01)
        f = vx.ExponentField.from_callable(g, lambda x: 1.3 + 0.5 * np.abs(x))
        sets = [
            vx.interval_mask(g, -0.6, -0.3),
            vx.interval_mask(g, -0.4, 0.1),
            vx.interval_mask(g, 0.0, 0.5),
        ]
        scen = vx.CapacityScenario(field=f, sets=sets, radius=2 * g.h)
        rep = vx.check_capacity_axioms(scen, "outer_measure", FAST)
        assert rep.passed
        assert rep.details["empty"] == 0.0

    def test_decreasing_compacts(self):
        g = vx.build_grid(1, (-1.0, 1.0), 0.005)
        f = vx.ExponentField.constant(g, 1.0)
        sets = [vx.interval_mask(g, -0.1 - i * 0.1, 0.1 + i * 0.1) for i in (3, 2, 1, 0)]
        scen = vx.CapacityScenario(field=f, sets=sets, radius=2 * g.h)
        rep = vx.check_capacity_axioms(scen, "decreasing_compacts", FAST)
        assert rep.passed

    def test_outer_regularity_linear_regime(self):
        g = vx.build_grid(1, (-2.0, 2.0), 2e-3)
        f = vx.ExponentField.constant(g, 1.0)
        E = vx.interval_mask(g, -0.3, 0.3)
        scen = vx.CapacityScenario(field=f, sets=[E])
        rep = vx.check_capacity_axioms(scen, "outer_regularity", vx.SolverConfig(max_iters=20000, tol_gap=1e-7))
        assert rep.passed
        assert all(r == pytest.approx(2.0, abs=1e-6) for r in rep.details["diff_ratios"])

    def test_null_equivalence_trend_small(self):
        g = vx.build_grid(2, [(-1, 1), (-1, 1)], 2 / 64)
        f = vx.ExponentField.constant(g, 2.0)
        sets = [vx.ball_mask(g, (0, 0), r) for r in (0.4, 0.25, 0.15)]
        scen = vx.CapacityScenario(
            field=f, sets=sets, radius=2 * g.h, params={"decay_threshold": 5.0}
        )
        rep = vx.check_capacity_axioms(scen, "null_equivalence", FAST)
        assert rep.passed
        assert rep.details["checks"]["both_monotone"]
        assert rep.details["checks"]["kinds_agree"]

    def test_unknown_axiom_rejected(self, line_setup):
        g, f = line_setup
        scen = vx.CapacityScenario(field=f, sets=[vx.interval_mask(g, 0, 0.1)])
        with pytest.raises(ConfigError):
            vx.check_capacity_axioms(scen, "not_an_axiom", FAST)

    def test_strong_subadd_needs_two_sets(self, line_setup):
        g, f = line_setup
        scen = vx.CapacityScenario(field=f, sets=[vx.interval_mask(g, 0, 0.1)])
        with pytest.raises(ConfigError):
            vx.check_capacity_axioms(scen, "strong_subadd", FAST)
