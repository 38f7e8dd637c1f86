import math

import numpy as np
import pytest
from scipy.special import gammaln

from polyspec import walk
from polyspec.walk import Classification, DensityRoute, IdqRoute, WalkSpec


class TestRho2Closed:
    def test_d3_is_linear(self):
        assert walk.rho2_closed(3, 1.0) == pytest.approx(0.5, rel=1e-14)
        r = np.linspace(0.05, 1.95, 50)
        assert np.allclose(walk.rho2_closed(3, r), r / 2, rtol=1e-13)

    def test_d2_value(self):
        assert walk.rho2_closed(2, 1.0) == pytest.approx(
            2.0 / (math.pi * math.sqrt(3.0)), rel=1e-14
        )

    def test_outside_support(self):
        assert walk.rho2_closed(2, 2.5) == 0.0
        assert walk.rho2_closed(4, -0.1) == 0.0

    def test_normalizes(self):
        # graded grid absorbs the inverse-sqrt edge for d = 2
        r = 2.0 - np.geomspace(1e-14, 2.0 - 1e-9, 120_000)[::-1]
        for d in (2, 3, 4, 5):
            mass = np.trapezoid(walk.rho2_closed(d, r), r)
            assert mass == pytest.approx(1.0, abs=1e-4)


class TestDensityRecursion:
    def test_d3_n3_closed_region(self):
        # psi is identically 1/2 on (0,1): rho = r^2/2
        assert walk.density_recursion(WalkSpec(3, 3), 0.5) == pytest.approx(
            0.125, abs=1e-10
        )

    def test_d3_n3_outer_piece(self):
        for r in (1.5, 2.2, 2.9):
            assert walk.density_recursion(WalkSpec(3, 3), r) == pytest.approx(
                r * (3.0 - r) / 4.0, abs=1e-9
            )

    def test_registered_singularity(self):
        assert walk.density_recursion(WalkSpec(2, 3), 1.0) == math.inf

    def test_positive_on_support(self):
        rng = np.random.default_rng(0)
        for d in (2, 3, 4, 5):
            for n in (3, 4, 5, 6):
                pts = rng.uniform(1e-3, n - 1e-3, 50)
                vals = [walk.density_recursion(WalkSpec(d, n), float(r)) for r in pts]
                assert all(v > 0 for v in vals)

    def test_vanishes_at_support_edge(self):
        v = walk.density_recursion(WalkSpec(4, 4), 3.999)
        assert 0.0 <= v < 1e-6

    def test_outside_support(self):
        assert walk.density_recursion(WalkSpec(3, 4), 4.5) == 0.0

    def test_near_singular_warning(self):
        with pytest.warns(walk.SingularProximityWarning):
            walk.density_recursion(WalkSpec(2, 3), 1.0 + 2e-4)

    def test_rejects_out_of_range_n(self):
        with pytest.raises(ValueError):
            walk.density_recursion(WalkSpec(2, 9), 1.0)


class TestDensityKluyver:
    def test_two_step_cross_route(self):
        res = walk.density_kluyver(WalkSpec(3, 2), 1.0, 1e-8)
        assert res.value == pytest.approx(0.5, abs=1e-6)

    def test_four_step_cross_route(self):
        res = walk.density_kluyver(WalkSpec(2, 4), 1.0, 1e-7)
        ref = walk.density_recursion(WalkSpec(2, 4), 1.0)
        assert res.value == pytest.approx(ref, abs=1e-5)

    def test_registered_divergence(self):
        res = walk.density_kluyver(WalkSpec(2, 3), 1.0)
        assert res.status == "divergent"

    def test_positive_outer_region(self):
        res = walk.density_kluyver(WalkSpec(2, 3), 2.9, 1e-7)
        assert res.converged and res.value > 0

    def test_outside_support(self):
        res = walk.density_kluyver(WalkSpec(2, 4), 4.2)
        assert res.value == 0.0


class TestRouteAgreement:
    @pytest.mark.parametrize("d", [2, 3, 4, 5])
    @pytest.mark.parametrize("n", [3, 4, 5, 6])
    def test_kluyver_vs_recursion_grid(self, d, n):
        if (d, n) == (2, 3):
            pytest.skip("registered singular pair")
        spec = WalkSpec(d, n)
        grid = (np.arange(20) + 0.5) * n / 20.0
        for r in grid:
            res = walk.density_kluyver(spec, float(r), 1e-7)
            ref = walk.density_recursion(spec, float(r))
            tol = max(1e-5, 3.0 * res.abs_error_estimate)
            assert res.value == pytest.approx(ref, abs=tol), (d, n, r)

    @pytest.mark.parametrize("d", [2, 3, 4, 5])
    def test_kluyver_vs_closed_n2(self, d):
        spec = WalkSpec(d, 2)
        for r in (np.arange(20) + 0.5) * 2.0 / 20.0:
            res = walk.density_kluyver(spec, float(r), 1e-8)
            assert res.value == pytest.approx(
                walk.rho2_closed(d, float(r)), abs=1e-6
            ), (d, r)


class TestNormalization:
    @pytest.mark.parametrize("d", [2, 3, 4, 5])
    @pytest.mark.parametrize("n", [3, 4, 5, 6])
    def test_mass_and_second_moment(self, d, n):
        tab, _ = walk._psi_level(d, n)
        grid = np.unique(
            np.concatenate(
                [np.linspace(1e-9, n - 1e-9, 3001)]
                + [
                    k + s * np.geomspace(1e-9, 0.4, 40)
                    for k in range(0, n + 1)
                    for s in (-1, 1)
                ]
            )
        )
        grid = grid[(grid > 0) & (grid < n)]
        rho = tab(grid) * grid ** (d - 1)
        mass = np.trapezoid(rho, grid)
        m2 = np.trapezoid(rho * grid**2, grid)
        assert mass == pytest.approx(1.0, abs=1e-4)
        assert m2 == pytest.approx(float(n), abs=1e-4 * n)


class TestClassification:
    def test_divergent_cases(self):
        assert walk.classify_idq(2, 4) is Classification.DIVERGENT
        for d in range(2, 7):
            assert walk.classify_idq(d, 2) is Classification.DIVERGENT

    def test_conditional_cases(self):
        assert walk.classify_idq(2, 3) is Classification.CONDITIONAL
        assert walk.classify_idq(3, 3) is Classification.CONDITIONAL

    def test_absolute_cases(self):
        assert walk.classify_idq(5, 3) is Classification.ABSOLUTE
        assert walk.classify_idq(2, 5) is Classification.ABSOLUTE
        assert walk.classify_idq(3, 4) is Classification.ABSOLUTE

    def test_envelope_threshold(self):
        for d in range(2, 8):
            for q in range(3, 9):
                if (d, q) == (2, 4):
                    continue
                expect = (
                    Classification.ABSOLUTE
                    if (d - 1) * (q / 2 - 1) > 1
                    else Classification.CONDITIONAL
                )
                assert walk.classify_idq(d, q) is expect


class TestIdq:
    def test_d3_q3_both_routes(self):
        direct = walk.idq(3, 3, IdqRoute.DIRECT_INTEGRAL, 1e-10)
        rec = walk.idq(3, 3, IdqRoute.RECURSION_ENDPOINT)
        assert direct.value == pytest.approx(math.pi / 4, rel=1e-9)
        assert rec.value == pytest.approx(math.pi / 4, rel=1e-12)

    def test_gamma_product_closed_form(self):
        lg = sum(gammaln(f / 15.0) for f in (1.0, 2.0, 4.0, 8.0))
        expect = math.sqrt(5.0) * math.exp(lg) / (40.0 * math.pi**4)
        assert walk.idq_closed_form(2, 5) == pytest.approx(expect, rel=1e-14)
        direct = walk.idq(2, 5, IdqRoute.DIRECT_INTEGRAL, 1e-9)
        assert direct.value == pytest.approx(expect, rel=1e-7)

    def test_q3_formula_reduces_at_d2(self):
        assert walk.idq_closed_form(2, 3) == pytest.approx(
            2.0 / (math.pi * math.sqrt(3.0)), rel=1e-14
        )

    def test_divergent_has_no_value(self):
        res = walk.idq(2, 4)
        assert res.classification is Classification.DIVERGENT
        assert res.value is None and res.error is None

    def test_closed_route_rejected_outside_coverage(self):
        with pytest.raises(ValueError):
            walk.idq(3, 5, IdqRoute.CLOSED_FORM)

    @pytest.mark.parametrize("d", [2, 3, 4, 5])
    def test_route_consistency_up_to_q7(self, d):
        for q in range(3, 8):
            if walk.classify_idq(d, q) is Classification.DIVERGENT:
                continue
            a = walk.idq(d, q, IdqRoute.DIRECT_INTEGRAL, 1e-9)
            b = walk.idq(d, q, IdqRoute.RECURSION_ENDPOINT)
            assert a.value == pytest.approx(b.value, rel=1e-5), (d, q)


class TestSampleWalk:
    def test_radii_in_support(self):
        r = walk.sample_walk(WalkSpec(4, 5), 20_000, 3)
        assert r.min() >= 0.0 and r.max() <= 5.0

    def test_second_moment(self):
        n_samples = 400_000
        r = walk.sample_walk(WalkSpec(3, 4), n_samples, 9)
        sq = r**2
        se = sq.std() / math.sqrt(n_samples)
        assert abs(sq.mean() - 4.0) <= 4.0 * se

    def test_kolmogorov_smirnov_two_step(self):
        n = 1_000_000
        r = np.sort(walk.sample_walk(WalkSpec(3, 2), n, 123))
        cdf = np.minimum(r**2 / 4.0, 1.0)
        ks = np.abs(np.arange(1, n + 1) / n - cdf).max()
        assert ks <= 1.63 / math.sqrt(n)

    def test_deterministic(self):
        a = walk.sample_walk(WalkSpec(2, 3), 70_000, 11)
        b = walk.sample_walk(WalkSpec(2, 3), 70_000, 11)
        assert np.array_equal(a, b)


class TestDensityCurve:
    def test_closed_route_rows(self):
        curve = walk.density_curve(WalkSpec(3, 2), 0.0, 2.0, 21, DensityRoute.CLOSED_FORM2)
        inside = curve.grid < 2.0  # the support is open at r = 2
        assert np.allclose(curve.values[inside], curve.grid[inside] / 2.0, rtol=1e-12)
        assert np.all(curve.values[~inside] == 0.0)

    def test_values_vanish_beyond_support(self):
        curve = walk.density_curve(WalkSpec(3, 2), 1.5, 2.5, 11, "ClosedForm2")
        assert np.all(curve.values[curve.grid >= 2.0] == 0.0)

    def test_mc_route_matches_closed(self):
        curve = walk.density_curve(WalkSpec(3, 2), 0.2, 1.8, 9, DensityRoute.MONTE_CARLO)
        expect = curve.grid / 2.0
        assert np.all(np.abs(curve.values - expect) <= 6.0 * curve.error + 1e-3)

    def test_recursion_emits_inf_at_singularity(self):
        curve = walk.density_curve(WalkSpec(2, 3), 0.5, 1.5, 3, DensityRoute.RECURSION)
        assert math.isinf(curve.values[1])

    def test_rejects_single_step(self):
        with pytest.raises(ValueError):
            walk.density_curve(WalkSpec(2, 1), 0.0, 1.0, 5, DensityRoute.KLUYVER)
