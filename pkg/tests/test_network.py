"""Network model tests: evaluation, validation, metrics, combinators,
exact extraction and the enveloping embedding."""
import json

import numpy as np
import pytest

from relu_approx.errors import (
    ParameterError,
    StructureError,
    UnsupportedActivationError,
)
from relu_approx.network import (
    ACT_LINEAR,
    ACT_RELU,
    Affine,
    ContinuousPWLActivation,
    Network,
    NetworkBuilder,
    abs_activation,
    net_affine_precompose,
    net_envelope_embed,
    net_eval,
    net_extract_pwl,
    net_metrics,
    net_parallel_sum,
    net_validate,
    parallel_combine,
)
from relu_approx.pwl import PWL1D, pwl_piece_count, pwl_sup_distance, tooth_pwl


def build_tooth_net() -> Network:
    """g(x) = 2 relu(x) - 4 relu(x - 1/2) + 2 relu(x - 1)."""
    nb = NetworkBuilder(1)
    x = Affine.of_input(0)
    u1 = nb.add_unit(1, x)
    u2 = nb.add_unit(1, x.shifted(-0.5))
    u3 = nb.add_unit(1, x.shifted(-1.0))
    nb.set_output(u1.scaled(2.0).plus(u2.scaled(-4.0)).plus(u3.scaled(2.0)))
    return nb.build()


def build_fig_style_net() -> Network:
    """3 inputs, 4 layers, 7 hidden units + output, 16 connections."""
    rng = np.random.default_rng(11)
    nb = NetworkBuilder(3)
    x0, x1, x2 = (Affine.of_input(k) for k in range(3))
    w = iter(rng.uniform(-1, 1, 32))
    a = nb.add_unit(1, x0.scaled(next(w)).plus(x1.scaled(next(w))))
    b = nb.add_unit(1, x0.scaled(next(w)).plus(x2.scaled(next(w))))
    c = nb.add_unit(1, x1.scaled(next(w)).plus(x2.scaled(next(w))))
    d = nb.add_unit(1, x0.scaled(next(w)))
    p = nb.add_unit(2, a.scaled(next(w)).plus(b.scaled(next(w))))
    q = nb.add_unit(2, b.scaled(next(w)).plus(c.scaled(next(w))))
    r = nb.add_unit(2, c.scaled(next(w)).plus(d.scaled(next(w))))
    nb.set_output(p.scaled(next(w)).plus(q.scaled(next(w))).plus(r.scaled(next(w))))
    return nb.build()


def random_relu_net(rng, input_dim=1, widths=(4, 3)) -> Network:
    nb = NetworkBuilder(input_dim)
    prev = [Affine.of_input(k) for k in range(input_dim)]
    for li, width in enumerate(widths, start=1):
        cur = []
        for _ in range(width):
            pre = Affine.constant(float(rng.uniform(-0.5, 0.5)))
            for src in prev:
                pre = pre.plus(src.scaled(float(rng.uniform(-1, 1))))
            cur.append(nb.add_unit(li, pre))
        prev = cur
    out = Affine.constant(float(rng.uniform(-0.5, 0.5)))
    for src in prev:
        out = out.plus(src.scaled(float(rng.uniform(-1, 1))))
    nb.set_output(out)
    return nb.build()


class TestEval:
    def test_tooth_network(self):
        net = build_tooth_net()
        assert net_eval(net, 0.5) == 1.0
        assert net_eval(net, 0.0) == 0.0
        assert net_eval(net, 1.0) == 0.0
        assert net_eval(net, 0.3) == pytest.approx(0.6, abs=1e-15)

    def test_zero_network(self):
        nb = NetworkBuilder(2)
        u = nb.add_unit(1, Affine.of_input(0, 0.0).plus(Affine.of_input(1, 0.0)))
        nb.set_output(u.scaled(0.0))
        net = nb.build()
        for x in ([0.0, 0.0], [1.0, -3.0], [2.5, 7.0]):
            assert net_eval(net, x) == 0.0

    def test_dimension_mismatch(self):
        net = build_tooth_net()
        with pytest.raises(ParameterError):
            net_eval(net, [0.1, 0.2])

    def test_rho_half_open_semantics(self):
        nb = NetworkBuilder(1)
        u = nb.add_unit(1, Affine.of_input(0), activation="rho")
        nb.set_output(u)
        net = nb.build()
        assert net_eval(net, 0.0) == 0.0
        assert net_eval(net, 0.5) == 0.5
        assert net_eval(net, 1.0) == 0.0  # strictly half-open
        assert net_eval(net, -0.2) == 0.0
        assert net_eval(net, 1.3) == 0.0

    def test_batch_matches_scalar(self):
        rng = np.random.default_rng(1)
        net = random_relu_net(rng, widths=(5, 4, 3))
        xs = rng.uniform(-1, 2, 257)
        batch = net.eval_batch(xs)
        scal = np.array([net_eval(net, float(v)) for v in xs])
        np.testing.assert_allclose(batch, scal, atol=1e-12)

    def test_trace_exposes_unit_outputs(self):
        net = build_tooth_net()
        trace = net.eval_trace(0.75)
        assert trace[0] == [0.75, 0.25, 0.0]
        assert trace[-1] == [pytest.approx(0.5)]


class TestValidate:
    def test_fig_style_net_is_clean(self):
        net = build_fig_style_net()
        assert net_validate(net) == []

    def test_backward_edge_flagged(self):
        tooth = build_tooth_net()
        bad_layer = tooth.layers[0]
        bad_layer.edge_layer[0] = 2  # edge from layer 2 into layer 1
        violations = net_validate(tooth)
        assert any("backward edge" in v for v in violations)

    def test_two_output_units_flagged(self):
        nb = NetworkBuilder(1)
        u = nb.add_unit(1, Affine.of_input(0))
        nb.set_output(u)
        net = nb.build()
        out = net.layers[-1]
        from relu_approx.network import Layer

        doubled = Layer(
            np.array([0.0, 0.0]),
            np.array([ACT_LINEAR, ACT_LINEAR]),
            np.array([0, 1, 2]),
            np.array([1, 1]),
            np.array([0, 0]),
            np.array([1.0, 1.0]),
        )
        bad = Network(1, [net.layers[0], doubled])
        violations = net_validate(bad)
        assert any("output layer has 2 units" in v for v in violations)

    def test_dead_unit_flagged(self):
        nb = NetworkBuilder(1)
        u = nb.add_unit(1, Affine.of_input(0))
        nb.add_unit(1, Affine.of_input(0, 2.0))  # never read
        nb.set_output(u)
        violations = net_validate(nb.build())
        assert any("dead unit" in v for v in violations)


class TestMetrics:
    def test_fig_style_counts(self):
        m = net_metrics(build_fig_style_net())
        assert m.depth == 4
        assert m.computation_units == 8
        assert m.connections == 16
        assert m.weights == 24

    def test_minimal_net(self):
        nb = NetworkBuilder(1)
        nb.set_output(Affine.of_input(0, 3.0))
        m = net_metrics(nb.build())
        assert m.depth == 2
        assert m.connections == 1
        assert m.computation_units == 1
        assert m.hidden_units == 0
        assert m.weights == 2

    def test_tooth_counts(self):
        m = net_metrics(build_tooth_net())
        assert m.depth == 3
        assert m.hidden_units == 3
        assert m.weights == m.connections + m.computation_units

    def test_weights_identity_random(self):
        rng = np.random.default_rng(5)
        for _ in range(10):
            widths = tuple(rng.integers(1, 6, size=rng.integers(1, 4)))
            m = net_metrics(random_relu_net(rng, widths=widths))
            assert m.weights == m.connections + m.computation_units


class TestParallelSum:
    def test_exact_weighted_sum(self):
        rng = np.random.default_rng(7)
        a = random_relu_net(rng, widths=(4, 2))
        b = random_relu_net(rng, widths=(3,))
        combo = net_parallel_sum(a, b, 1.5, -2.0)
        for x in rng.uniform(-1, 1, 200):
            expected = 1.5 * net_eval(a, float(x)) - 2.0 * net_eval(b, float(x))
            got = net_eval(combo, float(x))
            assert abs(got - expected) <= 1e-12 * (1.0 + abs(expected))

    def test_cancellation(self):
        rng = np.random.default_rng(8)
        a = random_relu_net(rng, widths=(4, 2))
        combo = net_parallel_sum(a, a, 1.0, -1.0)
        xs = rng.uniform(-2, 2, 100)
        # scalar evaluation sums with fsum, so the duplicate blocks cancel exactly
        for x in xs:
            assert net_eval(combo, float(x)) == 0.0
        np.testing.assert_allclose(combo.eval_batch(xs), np.zeros(100), atol=1e-12)

    def test_metrics_additivity_and_depth(self):
        rng = np.random.default_rng(9)
        a = random_relu_net(rng, widths=(4, 2))
        b = random_relu_net(rng, widths=(3, 3, 3))
        combo = net_parallel_sum(a, b, 1.0, 1.0)
        ma, mb, mc = net_metrics(a), net_metrics(b), net_metrics(combo)
        assert mc.hidden_units == ma.hidden_units + mb.hidden_units
        assert mc.depth == max(ma.depth, mb.depth)
        assert net_validate(combo) == []

    def test_input_dim_mismatch(self):
        rng = np.random.default_rng(10)
        a = random_relu_net(rng, input_dim=1)
        b = random_relu_net(rng, input_dim=2)
        with pytest.raises(ParameterError):
            net_parallel_sum(a, b, 1.0, 1.0)

    def test_many_way_combine(self):
        rng = np.random.default_rng(12)
        nets = [random_relu_net(rng, widths=(3,)) for _ in range(5)]
        cs = rng.uniform(-1, 1, 5)
        combo = parallel_combine(nets, cs, bias=0.25)
        x = 0.4
        expected = 0.25 + sum(c * net_eval(n, x) for c, n in zip(cs, nets))
        assert net_eval(combo, x) == pytest.approx(expected, abs=1e-12)


class TestAffinePrecompose:
    def test_two_input_slice_keeps_units(self):
        rng = np.random.default_rng(13)
        net = random_relu_net(rng, input_dim=2, widths=(5, 3))
        x0 = np.array([0.3, 0.6])
        v = np.array([0.5, -0.25])
        sliced = net_affine_precompose(net, v[:, None], x0)
        assert sliced.input_dim == 1
        assert net_metrics(sliced).computation_units == net_metrics(net).computation_units
        assert net_metrics(sliced).depth == net_metrics(net).depth
        for t in rng.uniform(-1, 1, 50):
            expected = net_eval(net, x0 + t * v)
            assert net_eval(sliced, float(t)) == pytest.approx(expected, abs=1e-12)

    def test_identity_substitution(self):
        rng = np.random.default_rng(14)
        net = random_relu_net(rng, input_dim=2, widths=(4,))
        same = net_affine_precompose(net, np.eye(2), np.zeros(2))
        for _ in range(20):
            x = rng.uniform(-1, 1, 2)
            assert net_eval(same, x) == pytest.approx(net_eval(net, x), abs=1e-14)

    def test_scaling_tooth(self):
        net = build_tooth_net()
        scaled = net_affine_precompose(net, np.array([[2.0]]), np.zeros(1))
        g = tooth_pwl()
        for t in np.linspace(0, 0.5, 33):
            assert net_eval(scaled, float(t)) == pytest.approx(g.eval(2 * t), abs=1e-14)


class TestExtractPWL:
    def test_tooth_exact(self):
        f = net_extract_pwl(build_tooth_net(), 0.0, 1.0)
        assert pwl_sup_distance(f, tooth_pwl()) == 0.0
        assert pwl_piece_count(f) == 2

    def test_zero_net(self):
        nb = NetworkBuilder(1)
        u = nb.add_unit(1, Affine.of_input(0))
        nb.set_output(u.scaled(0.0))
        f = net_extract_pwl(nb.build(), 0.0, 1.0)
        assert pwl_piece_count(f) == 1
        assert f.eval(0.5) == 0.0

    def test_matches_eval_random(self):
        rng = np.random.default_rng(15)
        for _ in range(5):
            net = random_relu_net(rng, widths=(4, 3))
            f = net_extract_pwl(net, -1.0, 2.0)
            for x in rng.uniform(-1, 2, 200):
                assert abs(f.eval(float(x)) - net_eval(net, float(x))) <= 1e-9

    def test_refuses_rho(self):
        nb = NetworkBuilder(1)
        u = nb.add_unit(1, Affine.of_input(0), activation="rho")
        nb.set_output(u)
        with pytest.raises(UnsupportedActivationError):
            net_extract_pwl(nb.build(), 0.0, 1.0)

    def test_pwl_activation_extraction(self):
        act = abs_activation()
        nb = NetworkBuilder(1)
        u = nb.add_unit(1, Affine.of_input(0).shifted(-0.5), activation=act)
        nb.set_output(u)
        f = net_extract_pwl(nb.build(), 0.0, 1.0)
        for x in np.linspace(0, 1, 101):
            assert f.eval(float(x)) == pytest.approx(abs(x - 0.5), abs=1e-15)


class TestEnvelope:
    def test_tooth_in_envelope(self):
        net = build_tooth_net()
        env = net_envelope_embed(net, 4)
        assert len(env.layers) == 5  # 4 hidden + output
        assert all(layer.n_units == 4 for layer in env.layers[:-1])
        xs = np.linspace(0, 1, 101)
        np.testing.assert_allclose(env.eval_batch(xs), net.eval_batch(xs), atol=1e-12)

    def test_exact_fit_boundary(self):
        net = build_tooth_net()
        env = net_envelope_embed(net, 3)
        xs = np.linspace(0, 1, 41)
        np.testing.assert_allclose(env.eval_batch(xs), net.eval_batch(xs), atol=1e-12)

    def test_connection_count_matches_all_pairs_formula(self):
        net = build_tooth_net()
        d = net.input_dim
        for m in (3, 4, 6):
            env = net_envelope_embed(net, m)
            mt = net_metrics(env)
            # every pair of units in distinct layers, target not an input
            expected = sum(m * (d + (j - 1) * m) for j in range(1, m + 1))
            expected += d + m * m
            assert mt.connections == expected
            assert mt.weights <= 2 * (m + d) ** 4 + expected  # O(m^4) scale
            assert mt.computation_units == m * m + 1

    def test_too_small_envelope_rejected(self):
        with pytest.raises(ParameterError):
            net_envelope_embed(build_tooth_net(), 2)


class TestJSON:
    def test_round_trip_lossless(self):
        rng = np.random.default_rng(16)
        net = random_relu_net(rng, widths=(4, 3))
        text = net.to_json()
        back = Network.from_json(text)
        assert back.to_json() == text
        for layer_a, layer_b in zip(net.layers, back.layers):
            np.testing.assert_array_equal(layer_a.bias, layer_b.bias)
            np.testing.assert_array_equal(layer_a.edge_weight, layer_b.edge_weight)
            np.testing.assert_array_equal(layer_a.edge_layer, layer_b.edge_layer)

    def test_schema_shape(self):
        net = build_tooth_net()
        data = json.loads(net.to_json())
        assert data["input_dim"] == 1
        assert data["layers"][-1][0]["activation"] == "linear"
        assert data["layers"][0][0]["activation"] == "relu"
        assert data["layers"][0][0]["edges"] == [[0, 0, 1.0]]

    def test_pwl_activation_round_trip(self):
        act = abs_activation()
        nb = NetworkBuilder(1)
        u = nb.add_unit(1, Affine.of_input(0), activation=act)
        nb.set_output(u)
        net = nb.build()
        back = Network.from_json(net.to_json())
        assert net_eval(back, -0.7) == pytest.approx(0.7)
        assert back.to_json() == net.to_json()


def test_builder_rejects_forward_reference():
    nb = NetworkBuilder(1)
    nb.add_unit(1, Affine.of_input(0))
    with pytest.raises(StructureError):
        nb.add_unit(1, Affine.of_unit(1, 0))


def test_oracle_equivalence_random_nets():
    rng = np.random.default_rng(17)
    for _ in range(3):
        net = random_relu_net(rng, widths=(6, 5, 4))
        f = net_extract_pwl(net, 0.0, 1.0)
        xs = rng.uniform(0.0, 1.0, 1000)
        gap = np.abs(f.eval(xs) - net.eval_batch(xs))
        assert float(np.max(gap)) <= 1e-9
