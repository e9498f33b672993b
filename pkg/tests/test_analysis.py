import math

import numpy as np
import pytest

from rcontinuity import (
    ModulusCurve,
    PlkConfig,
    Region,
    SetValuedMap,
    OperatorEntry,
    Window,
    WindowRequiredError,
    MissingOracleError,
    calmness_estimate,
    catalog_lookup,
    certify_inverse_lipschitz,
    check_plk_exponent,
    closed_graph_test,
    estimate_modulus,
    fit_holder,
    invert,
    lojasiewicz_fit,
)
from conftest import brute_force_modulus, curves_agree

K10 = Window.box([0.0], [10.0])
DECADE = list(np.geomspace(1e-4, 1e-1, 13))


def constant_map(value=0.0):
    return SetValuedMap("const", 1, 1, lambda x, w: np.array([[value]]))


class TestEstimateModulus:
    def test_rm1_windowed_is_identity_modulus(self):
        radii = list(np.geomspace(1e-3, 5e-2, 10))
        curve = estimate_modulus(catalog_lookup("rm1").forward, [0.0], K10, radii, 64, seed=0)
        assert curve.rho_hat == pytest.approx(radii, rel=1e-12)

    def test_square_inverse_is_sqrt_modulus(self):
        curve = estimate_modulus(invert(catalog_lookup("square")), [0.0], None, DECADE, 64, seed=0)
        assert curve.rho_hat == pytest.approx([math.sqrt(r) for r in DECADE], rel=1e-12)

    def test_constant_map_gives_zero_curve(self):
        curve = estimate_modulus(constant_map(), [0.0], None, DECADE, 16, seed=0)
        assert curve.rho_hat == pytest.approx([0.0] * len(DECADE), abs=0.0)

    def test_window_required_propagates(self):
        with pytest.raises(WindowRequiredError):
            estimate_modulus(catalog_lookup("rm1").forward, [0.0], None, DECADE, 8, seed=0)

    def test_empty_base_value_rejected(self):
        m = invert(catalog_lookup("square"))
        with pytest.raises(ValueError):
            estimate_modulus(m, [-1.0], None, DECADE, 8, seed=0)

    def test_running_max_keeps_curve_nondecreasing(self):
        # a map whose worst excess is not monotone in the sampled radius
        wiggle = SetValuedMap("wiggle", 1, 1, lambda x, w: np.array([[math.sin(40.0 * float(x[0]))]]))
        curve = estimate_modulus(wiggle, [0.0], None, list(np.linspace(0.02, 0.5, 25)), 17, seed=0)
        assert np.all(np.diff(curve.rho_hat) >= 0)

    def test_window_monotone_in_nesting(self):
        radii = list(np.geomspace(1e-2, 5e-1, 8))
        rm1 = catalog_lookup("rm1").forward
        small = estimate_modulus(rm1, [0.0], Window.box([0.0], [3.0]), radii, 64, seed=0)
        large = estimate_modulus(rm1, [0.0], K10, radii, 64, seed=0)
        assert np.all(small.rho_hat <= large.rho_hat + 1e-15)

    def test_unwindowed_agrees_with_covering_window(self):
        inv = invert(catalog_lookup("square"))
        windowed = estimate_modulus(inv, [0.0], K10, DECADE, 64, seed=0)
        unwindowed = estimate_modulus(inv, [0.0], None, DECADE, 64, seed=0)
        assert np.array_equal(windowed.rho_hat, unwindowed.rho_hat)

    def test_deterministic(self):
        inv = invert(catalog_lookup("double-well"))
        a = estimate_modulus(inv, [0.0], K10, DECADE, 33, seed=9, scheme="halton")
        b = estimate_modulus(inv, [0.0], K10, DECADE, 33, seed=9, scheme="halton")
        assert np.array_equal(a.rho_hat, b.rho_hat)

    def test_matches_dense_oracle_on_double_well(self):
        # one decade of radii, so the 4096-point linear grid resolves each one
        radii = list(np.geomspace(1e-2, 1e-1, 13))
        inv = invert(catalog_lookup("double-well"))
        coarse = estimate_modulus(inv, [0.0], K10, radii, 64, seed=0)
        dense = brute_force_modulus(inv, [0.0], K10, radii)
        assert curves_agree(coarse.rho_hat, dense)


class TestFitHolder:
    def test_exact_line(self):
        curve = estimate_modulus(catalog_lookup("quad").forward, [0.0], None, DECADE, 16, seed=0)
        fit = fit_holder(curve)
        assert fit.theta_hat == pytest.approx(1.0, abs=1e-10)
        assert fit.L_hat == pytest.approx(1.0, abs=1e-10)
        assert fit.residual < 1e-10

    def test_sqrt_curve(self):
        curve = estimate_modulus(invert(catalog_lookup("square")), [0.0], None, DECADE, 64, seed=0)
        fit = fit_holder(curve)
        assert 0.45 <= fit.theta_hat <= 0.55

    def test_zero_curve_degenerate(self):
        fit = fit_holder(estimate_modulus(constant_map(), [0.0], None, DECADE, 8, seed=0))
        assert fit.degenerate
        assert fit.L_hat is None

    def test_divergent_curve_refused(self):
        curve = ModulusCurve(
            map_name="x", base_point=np.array([0.0]), window=None,
            radii=np.array([0.1, 0.2, 0.4]), rho_hat=np.array([1.0, 2.0, math.inf]),
            sample_counts=[4, 4, 4], seed=0, scheme="grid", divergent=True,
        )
        with pytest.raises(ValueError, match="unbounded"):
            fit_holder(curve)

    def test_rho_at_interpolates_and_flags_out_of_range(self):
        curve = ModulusCurve(
            map_name="x", base_point=np.array([0.0]), window=None,
            radii=np.array([1.0, 2.0]), rho_hat=np.array([1.0, 3.0]),
            sample_counts=[4, 4], seed=0, scheme="grid",
        )
        assert curve.rho_at(1.5) == pytest.approx(2.0)
        assert curve.rho_at(0.5) == pytest.approx(1.0)  # clamped below the grid
        assert curve.rho_at(2.5) is None


class TestClosedGraph:
    def test_rm1_passes(self):
        assert closed_graph_test(catalog_lookup("rm1").forward, [0.0], K10).passed

    def test_jump_map_fails_with_witness(self):
        bad = SetValuedMap(
            "jump", 1, 1,
            lambda x, w: np.array([[0.0]]) if float(x[0]) != 0 else np.array([[1.0]]),
        )
        res = closed_graph_test(bad, [0.0], K10)
        assert res.verdict == "fail"
        assert res.witness == pytest.approx([0.0])

    def test_linear_map_passes(self):
        lin = SetValuedMap("times2", 1, 1, lambda x, w: np.array([[2.0 * float(x[0])]]))
        assert closed_graph_test(lin, [0.0], K10).passed

    def test_slow_selection_is_inconclusive(self):
        # values shrink like 1/log(1/x): convergent but far from geometric
        res = closed_graph_test(invert(catalog_lookup("flat-exp")), [0.0], K10)
        assert res.verdict == "inconclusive"

    def test_catalog_inverses_close(self):
        for name in ("square", "double-well", "abs-subdiff", "quad", "linear-neg", "dc-quad"):
            inv = invert(catalog_lookup(name))
            assert closed_graph_test(inv, [0.0], K10).passed, name


class TestLojasiewiczFit:
    def test_square_exact(self):
        fit = lojasiewicz_fit(catalog_lookup("square"), Window.box([0.0], [1.0]), 2001)
        assert not fit.failed
        assert fit.theta_hat == pytest.approx(2.0, abs=1e-6)
        assert fit.c_hat == pytest.approx(1.0, abs=1e-6)

    def test_double_well_band_exponent(self):
        fit = lojasiewicz_fit(catalog_lookup("double-well"), Window.box([0.5], [2.5]), 2001)
        assert not fit.failed
        assert 1.9 <= fit.theta_hat <= 2.1
        assert fit.c_hat >= 3.5  # the ratio peaks near the midpoint between the zeros

    def test_flat_function_fails(self):
        fit = lojasiewicz_fit(catalog_lookup("flat-exp"), Window.box([0.0], [1.0]), 2001)
        assert fit.failed
        assert fit.theta_hat is None

    def test_window_must_meet_solution_set(self):
        with pytest.raises(ValueError):
            lojasiewicz_fit(catalog_lookup("square"), Window.box([5.0], [1.0]), 101)

    def test_identically_zero_rejected(self):
        zero_entry = OperatorEntry(
            name="zero",
            forward=SetValuedMap("zero", 1, 1, lambda x, w: np.array([[0.0]])),
            solution_set=Region.box([0.0], [10.0]),
            f=lambda x: 0.0,
        )
        with pytest.raises(ValueError):
            lojasiewicz_fit(zero_entry, Window.box([0.0], [1.0]), 101)


class TestPlk:
    def test_square_passes_with_closed_form_product(self):
        res = check_plk_exponent(catalog_lookup("square"), [0.0], PlkConfig(2.0, 0.5, 1.0, 1.0), 257)
        assert res.passed
        assert res.min_product == pytest.approx(2.0, rel=1e-9)

    def test_flat_exp_fails_near_zero(self):
        res = check_plk_exponent(catalog_lookup("flat-exp"), [0.0], PlkConfig(2.0, 0.5, 1.0, 1.0), 257)
        assert res.verdict == "fail"
        assert res.violations

    def test_empty_band_is_inconclusive(self):
        res = check_plk_exponent(catalog_lookup("square"), [0.0], PlkConfig(2.0, 0.5, 1e-30, 1.0), 257)
        assert res.verdict == "inconclusive"
        assert not res.passed

    def test_missing_oracles_rejected(self):
        with pytest.raises(MissingOracleError):
            check_plk_exponent(catalog_lookup("rm1"), [0.0], PlkConfig(1.0, 0.5, 1.0, 1.0), 33)

    def test_config_validation(self):
        with pytest.raises(ValueError):
            PlkConfig(M=-1.0, q_exp=0.5, eta=1.0, neighborhood_radius=1.0)
        with pytest.raises(ValueError):
            PlkConfig(M=1.0, q_exp=1.0, eta=1.0, neighborhood_radius=1.0)


class TestInverseLipschitz:
    def test_linear_full_rank(self):
        entry = OperatorEntry(
            name="lin-2x",
            forward=SetValuedMap("lin-2x", 1, 1, lambda x, w: np.array([[2.0 * float(x[0])]])),
            solution_set=Region.from_points([[0.0]]),
            jac=lambda x: np.array([[2.0]]),
        )
        res = certify_inverse_lipschitz(entry, Window.box([0.0], [1.0]))
        assert res.full_rank
        assert res.c_hat == pytest.approx(2.0)
        assert not res.bound_violations

    def test_square_rank_deficient(self):
        res = certify_inverse_lipschitz(catalog_lookup("square"), Window.box([0.0], [1.0]))
        assert res.verdict == "rank-deficient"

    def test_tall_map(self):
        entry = OperatorEntry(
            name="dup",
            forward=SetValuedMap("dup", 1, 2, lambda x, w: np.array([[float(x[0]), float(x[0])]])),
            solution_set=Region.from_points([[0.0]]),
            jac=lambda x: np.array([[1.0], [1.0]]),
        )
        res = certify_inverse_lipschitz(entry, Window.box([0.0], [1.0]))
        assert res.full_rank
        assert res.c_hat == pytest.approx(math.sqrt(2.0))

    def test_wide_map_rejected(self):
        entry = OperatorEntry(
            name="wide",
            forward=SetValuedMap("wide", 2, 1, lambda x, w: np.array([[float(x[0])]])),
            solution_set=Region.from_points([[0.0, 0.0]]),
            jac=lambda x: np.array([[1.0, 0.0]]),
        )
        with pytest.raises(ValueError):
            certify_inverse_lipschitz(entry, Window.box([0.0, 0.0], [1.0, 1.0]))

    def test_quad2_uses_smallest_singular_value(self):
        res = certify_inverse_lipschitz(catalog_lookup("quad2"), Window.box([0.0, 0.0], [2.0, 2.0]))
        expected = (3.0 - math.sqrt(2.0)) / 2.0
        assert res.full_rank
        assert res.c_hat == pytest.approx(expected, rel=1e-12)
        assert not res.bound_violations


class TestCalmness:
    def test_linear_slope(self):
        lin = SetValuedMap("times2", 1, 1, lambda x, w: np.array([[2.0 * float(x[0])]]))
        res = calmness_estimate(lin, [0.0], [0.0], 0.5, 1.0, samples=65)
        assert res.kappa_hat == pytest.approx(2.0)
        assert not res.vacuous

    def test_rm1_near_branch_only(self):
        res = calmness_estimate(catalog_lookup("rm1").forward, [0.0], [0.0], 0.5, 1.0, samples=65)
        assert res.kappa_hat == pytest.approx(1.0)

    def test_vacuous_when_values_escape(self):
        escape = SetValuedMap(
            "escape", 1, 1,
            lambda x, w: np.array([[10.0]]) if float(x[0]) != 0 else np.array([[0.0]]),
        )
        res = calmness_estimate(escape, [0.0], [0.0], 0.5, 1.0, samples=33)
        assert res.vacuous
        assert res.kappa_hat == 0.0

    def test_base_value_must_belong(self):
        lin = SetValuedMap("times2", 1, 1, lambda x, w: np.array([[2.0 * float(x[0])]]))
        with pytest.raises(ValueError):
            calmness_estimate(lin, [0.0], [0.5], 0.5, 1.0, samples=9)


class TestDuality:
    @pytest.mark.parametrize("name,window_center,window_extent,radius_hi", [
        ("square", 0.0, 1.0, 1e-1),
        ("double-well", 0.5, 2.5, 1e-2),  # stay below the y = 1/16 branch point
    ])
    def test_inverse_exponent_matches_reciprocal(self, name, window_center, window_extent, radius_hi):
        entry = catalog_lookup(name)
        loja = lojasiewicz_fit(entry, Window.box([window_center], [window_extent]), 2001)
        radii = list(np.geomspace(1e-4, radius_hi, 13))
        curve = estimate_modulus(invert(entry), [0.0], K10, radii, 64, seed=0)
        fit = fit_holder(curve)
        assert not loja.failed and not fit.degenerate
        expected = 1.0 / loja.theta_hat
        assert abs(fit.theta_hat - expected) <= 0.1 * expected
