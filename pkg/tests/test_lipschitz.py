"""Tests for the adaptive cached-profile constructions.

Independent oracles: direct evaluation of the layer formulas (gates,
selectors, ramps), the closed-form filter tooth, and dense-grid error
measurement against the analytic targets.
"""
import math

import numpy as np
import pytest

from relu_approx.errors import ParameterError
from relu_approx.lipschitz import (
    AdaptivePlan,
    CachedProfile,
    build_adaptive_relu,
    build_cache_network_rho,
    build_filter,
    cache_resolution,
    coarse_interpolant,
    default_smoothing,
    filter_tooth_values,
    quantize_profile,
)
from relu_approx.network import net_eval, net_extract_pwl, net_metrics, net_validate
from relu_approx.pwl import PWL1D, pwl_sup_distance
from relu_approx.targets import hat_function, random_lipschitz_pwl, slow_sine


def rho(z):
    return z if 0.0 <= z < 1.0 else 0.0


def eval_cached_formula(x: float, plan: AdaptivePlan, interp: PWL1D) -> float:
    """Direct numeric evaluation of the cached-network formula."""
    T, m = plan.T, plan.m
    total = float(np.interp(x, interp.x, interp.y))
    for p, profile in enumerate(plan.profiles):
        inner = sum(rho(T * x - t) for t, pi in enumerate(plan.assignment) if pi == p)
        coeffs = profile.relu_coefficients()
        for r in range(m):
            total += coeffs[r] / T * max(inner - r / m, 0.0)
    return total


class TestProfiles:
    def test_legal_profile(self):
        p = CachedProfile(4, (1, 0, -1, 0))
        np.testing.assert_allclose(p.node_values(), [0.0, 0.5, 0.5, 0.0, 0.0])

    def test_illegal_profiles_rejected(self):
        with pytest.raises(ParameterError):
            CachedProfile(3, (1, 1, 1))  # does not return to zero
        with pytest.raises(ParameterError):
            CachedProfile(2, (2, -2))  # step too large

    def test_relu_coefficients_reproduce_profile(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            m = int(rng.integers(1, 7))
            budget = 0
            steps = []
            for r in range(m):
                hi = min(1, m - r - 1 - budget)
                lo = max(-1, -(m - r - 1) - budget)
                s = int(rng.integers(lo, hi + 1))
                steps.append(s)
                budget += s
            steps[-1] -= budget  # force closure
            p = CachedProfile(m, tuple(int(s) for s in steps))
            ys = np.linspace(0, 1, 101)
            coeffs = p.relu_coefficients()
            direct = sum(
                coeffs[r] * np.maximum(ys - r / m, 0.0) for r in range(m)
            )
            np.testing.assert_allclose(direct, p.eval(ys), atol=1e-12)


class TestCoarseInterpolant:
    def test_linear_target_zero_residual(self):
        interp, residual = coarse_interpolant(lambda x: x - 0.5, 8)
        xs = np.linspace(0, 1, 101)
        np.testing.assert_allclose(residual(xs), 0.0, atol=1e-15)

    def test_on_grid_breakpoint_reproduced(self):
        interp, residual = coarse_interpolant(hat_function, 4)
        exact = PWL1D([0.0, 0.5, 1.0], [0.0, 0.5, 0.0])
        assert pwl_sup_distance(interp, exact) == 0.0

    def test_sine_residual_vanishes_at_nodes(self):
        T = 10
        interp, residual = coarse_interpolant(slow_sine, T)
        for t in range(T + 1):
            assert residual(t / T) == 0.0

    def test_non_lipschitz_rejected(self):
        with pytest.raises(ParameterError):
            coarse_interpolant(lambda x: 40.0 * math.sin(40.0 * x), 5)


class TestQuantize:
    def test_floor_formula_value(self):
        # node formula in isolation: (2/5) * floor(0.85 / (2/5)) = 0.8
        m = 5
        assert (2.0 / m) * math.floor(0.85 / (2.0 / m)) == pytest.approx(0.8)

    def test_zero_residual_zero_profile(self):
        _, residual = coarse_interpolant(lambda x: 0.3 * x, 6)
        p = quantize_profile(residual, 2, 6, 4)
        assert p.steps == (0, 0, 0, 0)

    def test_node_error_bound(self):
        T, m = 16, 5
        _, residual = coarse_interpolant(slow_sine, T)
        for t in range(T):
            p = quantize_profile(residual, t, T, m)
            vals = p.node_values()
            for r in range(m + 1):
                g = T * residual((t + r / m) / T)
                assert vals[r] <= g + 1e-12
                assert g - vals[r] <= 2.0 / m + 1e-12

    def test_steps_legal_for_random_targets(self):
        f = random_lipschitz_pwl(200, seed=7).eval
        T, m = 32, 4
        _, residual = coarse_interpolant(f, T)
        for t in range(T):
            p = quantize_profile(residual, t, T, m)  # constructor validates
            assert all(s in (-1, 0, 1) for s in p.steps)


class TestRhoNetwork:
    def test_plan_example(self):
        net, plan = build_cache_network_rho(slow_sine, 0.01)
        assert plan.m == 3
        assert plan.T == 67

    def test_depth_five_and_size(self):
        net, plan = build_cache_network_rho(slow_sine, 1 / 16)
        m = net_metrics(net)
        assert m.depth == 5
        assert plan.n_profiles <= min(plan.T, 3**plan.m)
        # O(T + m 3^m): gates + interpolant units dominate
        assert m.hidden_units <= 2 * plan.T + (plan.m + 1) * plan.n_profiles + 4

    def test_linear_target_zero_residual_part(self):
        net, plan = build_cache_network_rho(lambda x: x - 0.5, 1 / 8)
        assert plan.n_profiles == 1
        assert plan.profiles[0].steps == (0,) * plan.m
        xs = np.linspace(0, 0.999999, 200)
        np.testing.assert_allclose(net.eval_batch(xs), xs - 0.5, atol=1e-12)

    @pytest.mark.parametrize("f,eps", [(slow_sine, 1 / 16), (hat_function, 1 / 32)])
    def test_error_bound_sampled(self, f, eps):
        net, plan = build_cache_network_rho(f, eps)
        xs = np.linspace(0.0, 1.0 - 1e-9, 10_001)
        target = np.vectorize(f)(xs)
        err = float(np.max(np.abs(net.eval_batch(xs) - target)))
        assert err <= eps
        assert err <= 2.0 / (plan.T * plan.m) * 1.5 + 1e-12

    def test_matches_formula(self):
        eps = 1 / 16
        net, plan = build_cache_network_rho(slow_sine, eps)
        interp, _ = coarse_interpolant(slow_sine, plan.T)
        rng = np.random.default_rng(1)
        for x in rng.uniform(0.0, 1.0 - 1e-9, 300):
            assert net_eval(net, float(x)) == pytest.approx(
                eval_cached_formula(float(x), plan, interp), abs=1e-9
            )

    def test_inner_sum_selector(self):
        net, plan = build_cache_network_rho(slow_sine, 1 / 16)
        T = plan.T
        rng = np.random.default_rng(2)
        for x in rng.uniform(0.0, 1.0 - 1e-9, 50):
            t_live = int(np.floor(T * x))
            gates = net.eval_trace(float(x))[0][:T]
            for t, value in enumerate(gates):
                if t == t_live:
                    assert value == pytest.approx(T * x - t, abs=1e-12)
                else:
                    assert value == 0.0

    def test_eps_range_checked(self):
        with pytest.raises(ParameterError):
            build_cache_network_rho(slow_sine, 0.5)
        with pytest.raises(ParameterError):
            build_cache_network_rho(slow_sine, 0.0)


class TestFilter:
    def test_plateau_and_boundary(self):
        T, delta = 8, 0.2
        net = build_filter(T, delta)
        for t in range(T):
            assert net_eval(net, (t + 0.5) / T) == pytest.approx(1.0, abs=1e-12)
        assert net_eval(net, (1.0 - delta) / T) == pytest.approx(0.0, abs=1e-12)

    def test_range_and_breakpoints(self):
        T, delta = 6, 0.25
        net = build_filter(T, delta)
        xs = np.linspace(0, 1, 5001)
        vals = net.eval_batch(xs)
        assert float(vals.min()) >= -1e-12
        assert float(vals.max()) <= 1.0 + 1e-12
        extracted = net_extract_pwl(net, 0.0, 1.0)
        assert extracted.x.size - 2 <= 4 * T

    def test_matches_closed_form(self):
        T, delta = 5, 0.1
        net = build_filter(T, delta)
        xs = np.linspace(0, 1, 2001)
        direct = np.zeros_like(xs)
        for t in range(T):
            direct += filter_tooth_values(T * xs - t, delta)
        np.testing.assert_allclose(net.eval_batch(xs), direct, atol=1e-10)

    def test_bad_delta_rejected(self):
        with pytest.raises(ParameterError):
            build_filter(4, 1.0 / 3.0)
        with pytest.raises(ParameterError):
            build_filter(4, 0.4)


class TestAdaptiveRelu:
    @pytest.mark.parametrize("f", [hat_function, slow_sine])
    def test_depth_exactly_six(self, f):
        net, plan, report = build_adaptive_relu(f, 1 / 16)
        assert net_metrics(net).depth == 6
        assert net_validate(net) == []

    def test_error_bound(self):
        for f, eps in [(hat_function, 1 / 32), (slow_sine, 1 / 16)]:
            net, plan, report = build_adaptive_relu(f, eps)
            assert report.measured_error <= eps

    def test_random_pwl_target(self):
        f = random_lipschitz_pwl(500, seed=11).eval
        eps = 1 / 64
        net, plan, report = build_adaptive_relu(f, eps)
        assert report.measured_error <= eps

    def test_metrics_independent_of_delta(self):
        f = slow_sine
        eps = 1 / 32
        net1, plan1, _ = build_adaptive_relu(f, eps)
        net2, plan2, _ = build_adaptive_relu(f, eps, delta=plan1.delta / 10.0)
        assert net_metrics(net1) == net_metrics(net2)

    def test_smoothing_case_analysis(self):
        eps = 1 / 16
        net, plan, _ = build_adaptive_relu(slow_sine, eps)
        T, delta = plan.T, plan.delta
        interp, _ = coarse_interpolant(slow_sine, T)
        rng = np.random.default_rng(3)
        # suppressed zone: both layer-5 units vanish, net equals the
        # coarse interpolant exactly
        for t in rng.integers(0, T, 25):
            y = 1.0 - delta * float(rng.uniform(0.0, 1.0))
            x = (t + y) / T
            kept, spill = net.eval_trace(x)[3]
            assert kept == 0.0 and spill == 0.0
        # plateau zone: the smoothed residual passes through unchanged
        rho_net, rho_plan = build_cache_network_rho(slow_sine, eps)
        for t in rng.integers(0, T, 25):
            y = float(rng.uniform(delta, 1.0 - 2.0 * delta))
            x = (t + y) / T
            kept, spill = net.eval_trace(x)[3]
            f2_delta = kept - spill
            direct = eval_cached_formula(x, plan, interp) - float(
                np.interp(x, interp.x, interp.y)
            )
            assert f2_delta == pytest.approx(direct, abs=1e-9)

    def test_value_at_right_endpoint(self):
        net, plan, report = build_adaptive_relu(slow_sine, 1 / 16)
        assert report.extra["error_at_x1"] <= 1e-12
        assert net_eval(net, 1.0) == pytest.approx(slow_sine(1.0), abs=1e-12)

    def test_user_delta_validated(self):
        with pytest.raises(ParameterError):
            build_adaptive_relu(slow_sine, 1 / 16, delta=0.4)

    def test_complexity_scaling(self):
        values = []
        for k in range(4, 9):
            eps = 2.0**-k
            net, plan, _ = build_adaptive_relu(slow_sine, eps)
            units = net_metrics(net).hidden_units
            values.append(units * eps * math.log(1.0 / eps))
        median = float(np.median(values))
        assert all(v <= 4.0 * median and v >= median / 4.0 for v in values)


class TestPlanSerialization:
    def test_round_trip(self):
        _, plan, _ = build_adaptive_relu(slow_sine, 1 / 32)
        back = AdaptivePlan.from_json(plan.to_json())
        assert back.to_json_dict() == plan.to_json_dict()
        assert back.n_profiles == plan.n_profiles

    def test_rho_plan_has_null_delta(self):
        _, plan = build_cache_network_rho(slow_sine, 1 / 16)
        assert plan.to_json_dict()["delta"] is None


def test_cache_resolution_examples():
    assert cache_resolution(0.01) == 3
    assert cache_resolution(1 / 16) == 2
    assert cache_resolution(2.0**-10) == 4


def test_default_smoothing_budget():
    for k in range(4, 11):
        eps = 2.0**-k
        m = cache_resolution(eps)
        T = math.ceil(4.0 / (m * eps))
        delta = default_smoothing(eps, T)
        assert 8.0 * delta / T <= eps / 2.0 + 1e-15
        assert delta < 1.0 / 3.0
